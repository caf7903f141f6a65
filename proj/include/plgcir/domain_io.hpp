#pragma once

// Domain files: {"polygons": [[[x,y],...],...], "alpha": [x,y] | "inf", "beta": {"vertex": k}}
// with k one-based on the last polygon.

#include "common.hpp"
#include "geometry.hpp"

#include <json.hpp>

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace plgcir {

using json = nlohmann::json;

namespace io {

inline double number(const json& j, const char* what) {
    if (!j.is_number()) throw Error(ErrorCode::schema, std::string(what) + " is not a number");
    return j.get<double>();
}

inline cplx point(const json& j, const char* what = "point") {
    if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::schema, std::string(what) + " must be [x, y]");
    return {number(j[0], what), number(j[1], what)};
}

inline json point(cplx z) { return json::array({z.real(), z.imag()}); }

inline std::vector<cplx> points(const json& j, const char* what) {
    if (!j.is_array()) throw Error(ErrorCode::schema, std::string(what) + " must be an array of [x, y]");
    std::vector<cplx> out;
    out.reserve(j.size());
    for (const auto& e : j) out.push_back(point(e, what));
    return out;
}

inline json points(const std::vector<cplx>& v) {
    json a = json::array();
    for (cplx z : v) a.push_back(point(z));
    return a;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::io, "read error on '" + path + "'");
    return s.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write '" + path + "'");
    out << text;
    out.flush();
    if (!out) throw Error(ErrorCode::io, "write error on '" + path + "'");
}

inline json parse(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::schema, what + ": " + e.what());
    }
}

} // namespace io

/// Raw domain description before validation.
struct DomainSpec {
    std::vector<Polygon> polygons;
    std::optional<cplx> alpha;         // empty: alpha = inf
    std::optional<std::size_t> beta;   // one-based vertex of the last polygon
};

inline DomainSpec domain_from_json(const json& j) {
    if (!j.is_object() || !j.contains("polygons")) throw Error(ErrorCode::schema, "domain needs \"polygons\"");
    DomainSpec d;
    const json& polys = j.at("polygons");
    if (!polys.is_array()) throw Error(ErrorCode::schema, "\"polygons\" must be an array");
    for (const auto& p : polys) d.polygons.push_back(io::points(p, "polygon vertex"));
    if (!j.contains("alpha")) throw Error(ErrorCode::schema, "domain needs \"alpha\" ([x, y] or \"inf\")");
    const json& a = j.at("alpha");
    if (a.is_string()) {
        if (a.get<std::string>() != "inf") throw Error(ErrorCode::schema, "alpha must be [x, y] or \"inf\"");
    } else {
        d.alpha = io::point(a, "alpha");
    }
    if (j.contains("beta") && !j.at("beta").is_null()) {
        const json& b = j.at("beta");
        if (!b.is_object() || !b.contains("vertex") || !b.at("vertex").is_number_integer())
            throw Error(ErrorCode::schema, "beta must be {\"vertex\": k}");
        const long k = b.at("vertex").get<long>();
        if (k < 1) throw Error(ErrorCode::beta_invalid, "beta vertex numbers start at 1");
        d.beta = static_cast<std::size_t>(k);
    }
    return d;
}

inline PolygonalDomain validate_domain(const DomainSpec& s) {
    std::optional<std::size_t> beta;
    if (s.beta) beta = *s.beta - 1;
    return validate_domain(s.polygons, s.alpha, beta);
}

inline DomainSpec read_domain(const std::string& path) {
    return domain_from_json(io::parse(io::read_file(path), path));
}

/// Serializes a validated domain; beta is written one-based.
inline json domain_to_json(const PolygonalDomain& d) {
    json j;
    j["polygons"] = json::array();
    for (const auto& p : d.polygons) j["polygons"].push_back(io::points(p));
    j["alpha"] = d.bounded ? io::point(d.alpha) : json("inf");
    if (d.beta) j["beta"] = {{"vertex", *d.beta + 1}};
    return j;
}

} // namespace plgcir
