#pragma once

// The map object: boundary correspondence on both sides, circle data, vertex
// images, and the Cauchy-integral evaluators for f, f^-1 and their derivatives.

#include "bie.hpp"
#include "circle_fit.hpp"
#include "common.hpp"
#include "discretize.hpp"
#include "domain_io.hpp"
#include "geometry.hpp"
#include "koebe.hpp"
#include "spectral.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace plgcir {

inline constexpr int map_format_version = 1;

struct MapDiagnostics {
    int cycles = 0;
    bool converged = false;
    std::vector<double> deviation_history;
    std::vector<int> gmres_iterations;
    std::vector<double> gmres_residuals;
    std::vector<double> h_residuals;

    double final_deviation() const { return deviation_history.empty() ? 0.0 : deviation_history.back(); }
};

/// All curve arrays are per component, in domain order (outer component last
/// for bounded domains). zet, cent, rad and imgver live in the final w-plane,
/// i.e. after the post-map.
struct ConformalMap {
    PolygonalDomain domain;
    int n = 0;
    int p = 3;
    std::vector<std::vector<double>> corners;
    std::vector<std::vector<cplx>> et, etp, zet, zetp;
    std::vector<cplx> cent;
    std::vector<double> rad;
    std::vector<std::vector<cplx>> imgver;
    cplx sigma{1.0, 0.0};
    cplx tau{0.0, 0.0};
    Normalization normalization = Normalization::eq1;
    MapDiagnostics diagnostics;

    std::size_t size() const { return et.size(); }
    bool bounded() const { return domain.bounded; }

    CircularDomain circles() const {
        CircularDomain c;
        c.centers = cent;
        c.radii = rad;
        c.bounded = domain.bounded;
        return c;
    }

    /// Diameter of the circle set in the w-plane.
    double image_diameter() const {
        double d = 0.0;
        for (std::size_t i = 0; i < cent.size(); ++i)
            for (std::size_t j = 0; j < cent.size(); ++j) d = std::max(d, std::abs(cent[i] - cent[j]) + rad[i] + rad[j]);
        return d;
    }
};

/// Maps a normalized Koebe result to the stored representation. Unconverged
/// results are rejected unless force is set.
inline ConformalMap build_map(const KoebeResult& kr, const PolygonalDomain& domain, const BoundaryDiscretization& disc,
                              bool force = false) {
    if (!kr.converged && !force)
        throw Error(ErrorCode::convergence, "Koebe iteration did not converge (deviation " +
                                                std::to_string(kr.final_deviation()) + " after " +
                                                std::to_string(kr.cycles) + " cycles)");
    const std::size_t m = disc.components.size();
    ConformalMap f;
    f.domain = domain;
    f.n = disc.n;
    f.p = disc.p;
    f.sigma = kr.post_sigma;
    f.tau = kr.post_tau;
    f.normalization = kr.normalization;
    for (std::size_t j = 0; j < m; ++j) {
        const auto& src = disc.components[j];
        const auto& img = kr.image[j];
        f.corners.push_back(src.corners);
        f.et.push_back(src.z);
        f.etp.push_back(src.dz);

        std::vector<cplx> w(img.size()), dw(img.size());
        for (std::size_t r = 0; r < img.size(); ++r) {
            w[r] = f.sigma * img.z[r] + f.tau;
            dw[r] = f.sigma * img.dz[r];
        }
        const CircleFit fit = fit_circle(w);
        // zeta' = i theta' (zeta - c), theta' from the tangential part of Z'
        std::vector<cplx> wp(img.size());
        for (std::size_t r = 0; r < img.size(); ++r) {
            const double dtheta = std::imag(dw[r] / (w[r] - fit.center));
            wp[r] = I * dtheta * (w[r] - fit.center);
        }
        std::vector<cplx> v = trig_interpolate(w, src.corners);
        for (cplx& z : v) {
            const cplx d = z - fit.center;
            z = fit.center + fit.radius * d / std::abs(d);
        }
        f.zet.push_back(std::move(w));
        f.zetp.push_back(std::move(wp));
        f.cent.push_back(fit.center);
        f.rad.push_back(fit.radius);
        f.imgver.push_back(std::move(v));
    }
    f.diagnostics.cycles = kr.cycles;
    f.diagnostics.converged = kr.converged;
    f.diagnostics.deviation_history = kr.deviation_history;
    f.diagnostics.gmres_iterations = kr.gmres_iterations;
    f.diagnostics.gmres_residuals = kr.gmres_residuals;
    f.diagnostics.h_residuals = kr.h_residuals;
    return f;
}

// ---------------------------------------------------------------------------
// evaluation

enum class Direction { forward, inverse };

struct EvalOptions {
    double delta = 0.0;  // trusted-evaluation margin; 0 means 1e-3 times the diameter of the source side
    bool deriv = false;
};

struct Evaluation {
    std::vector<cplx> value;
    std::vector<cplx> deriv;             // filled when requested
    std::vector<std::size_t> outside;    // NaN results
    std::vector<std::size_t> near;       // inside, but closer than delta to the boundary
};

namespace detail {

inline std::vector<BoundaryComponent> curve_parts(const std::vector<std::vector<cplx>>& z,
                                                  const std::vector<std::vector<cplx>>& dz) {
    std::vector<BoundaryComponent> parts(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
        parts[j].z = z[j];
        parts[j].dz = dz[j];
    }
    return parts;
}

inline std::vector<cplx> flatten(const std::vector<std::vector<cplx>>& v) {
    std::vector<cplx> out;
    for (const auto& c : v) out.insert(out.end(), c.begin(), c.end());
    return out;
}

// Boundary correspondence before the post-map.
inline void canonical_image(const ConformalMap& f, std::vector<std::vector<cplx>>& z,
                            std::vector<std::vector<cplx>>& dz) {
    z = f.zet;
    dz = f.zetp;
    for (std::size_t j = 0; j < z.size(); ++j)
        for (std::size_t r = 0; r < z[j].size(); ++r) {
            z[j][r] = (z[j][r] - f.tau) / f.sigma;
            dz[j][r] /= f.sigma;
        }
}

inline double circle_distance(const ConformalMap& f, cplx w) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < f.cent.size(); ++j) d = std::min(d, std::abs(std::abs(w - f.cent[j]) - f.rad[j]));
    return d;
}

} // namespace detail

/// Evaluates f (forward) or f^-1 (inverse) at points of the source side.
/// Points outside the source region give NaN; points within delta of its
/// boundary are evaluated but reported in `near`.
inline Evaluation evaluate(const ConformalMap& f, std::span<const cplx> pts, Direction dir,
                           const EvalOptions& opts = {}) {
    const bool fwd = dir == Direction::forward;
    const CircularDomain circ = f.circles();
    const double delta =
        opts.delta > 0.0 ? opts.delta : 1e-3 * (fwd ? f.domain.diameter() : f.image_diameter());

    Evaluation out;
    out.value.assign(pts.size(), complex_nan());
    if (opts.deriv) out.deriv.assign(pts.size(), complex_nan());

    std::vector<cplx> targets;
    std::vector<std::size_t> index;
    for (std::size_t q = 0; q < pts.size(); ++q) {
        const cplx z = pts[q];
        const bool inside = is_finite(z) && (fwd ? f.domain.contains(z) : point_in_circular(z, circ));
        if (!inside) {
            out.outside.push_back(q);
            continue;
        }
        const double dist = fwd ? f.domain.boundary_distance(z) : detail::circle_distance(f, z);
        if (dist < delta) out.near.push_back(q);
        targets.push_back(fwd ? z : (z - f.tau) / f.sigma);
        index.push_back(q);
    }
    if (targets.empty()) return out;

    std::vector<std::vector<cplx>> zc, dzc;
    detail::canonical_image(f, zc, dzc);
    const auto src_parts = fwd ? detail::curve_parts(f.et, f.etp) : detail::curve_parts(zc, dzc);
    const auto& src = fwd ? f.et : zc;
    const auto& dst = fwd ? zc : f.et;

    std::vector<cplx> g = detail::flatten(dst);
    const CauchyMode mode = f.bounded() ? CauchyMode::bounded : CauchyMode::unbounded;
    if (!f.bounded()) {
        // both maps are z + O(1/z): integrate the difference
        const auto s = detail::flatten(src);
        for (std::size_t k = 0; k < g.size(); ++k) g[k] -= s[k];
    }
    const auto r = cauchy_evaluate(src_parts, g, targets, mode, opts.deriv ? 1 : 0);

    for (std::size_t i = 0; i < targets.size(); ++i) {
        cplx v = r.value[i];
        cplx d = opts.deriv ? r.deriv[i] : cplx(0.0);
        if (!f.bounded()) {
            v += targets[i];
            d += 1.0;
        }
        const std::size_t q = index[i];
        if (fwd) {
            out.value[q] = f.sigma * v + f.tau;
            if (opts.deriv) out.deriv[q] = f.sigma * d;
        } else {
            out.value[q] = v;
            if (opts.deriv) out.deriv[q] = d / f.sigma;
        }
    }
    return out;
}

inline std::vector<cplx> eval_forward(const ConformalMap& f, std::span<const cplx> z) {
    return evaluate(f, z, Direction::forward).value;
}

inline std::vector<cplx> eval_inverse(const ConformalMap& f, std::span<const cplx> w) {
    return evaluate(f, w, Direction::inverse).value;
}

inline std::vector<cplx> deriv_forward(const ConformalMap& f, std::span<const cplx> z) {
    return evaluate(f, z, Direction::forward, {0.0, true}).deriv;
}

inline std::vector<cplx> deriv_inverse(const ConformalMap& f, std::span<const cplx> w) {
    return evaluate(f, w, Direction::inverse, {0.0, true}).deriv;
}

// ---------------------------------------------------------------------------
// serialization

namespace detail {

inline json nested(const std::vector<std::vector<cplx>>& v) {
    json a = json::array();
    for (const auto& c : v) a.push_back(io::points(c));
    return a;
}

inline std::vector<std::vector<cplx>> nested(const json& j, const char* what) {
    if (!j.is_array()) throw Error(ErrorCode::schema, std::string(what) + " must be an array per component");
    std::vector<std::vector<cplx>> out;
    for (const auto& c : j) out.push_back(io::points(c, what));
    return out;
}

template <class T>
std::vector<T> numbers(const json& j, const char* what) {
    if (!j.is_array()) throw Error(ErrorCode::schema, std::string(what) + " must be an array");
    std::vector<T> out;
    for (const auto& e : j) {
        if (!e.is_number()) throw Error(ErrorCode::schema, std::string(what) + " must hold numbers");
        out.push_back(e.get<T>());
    }
    return out;
}

inline const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::schema, std::string("missing field \"") + key + "\"");
    return j.at(key);
}

} // namespace detail

inline json map_to_json(const ConformalMap& f) {
    json j;
    j["version"] = map_format_version;
    j["domain"] = domain_to_json(f.domain);
    json grid;
    grid["n"] = f.n;
    grid["p"] = f.p;
    grid["corners"] = f.corners;
    j["grid"] = grid;
    j["et"] = detail::nested(f.et);
    j["etp"] = detail::nested(f.etp);
    j["zet"] = detail::nested(f.zet);
    j["zetp"] = detail::nested(f.zetp);
    j["cent"] = io::points(f.cent);
    j["rad"] = f.rad;
    j["imgver"] = detail::nested(f.imgver);
    j["postmap"] = {{"sigma", io::point(f.sigma)}, {"tau", io::point(f.tau)}};
    j["normalization"] = to_string(f.normalization);
    const auto& d = f.diagnostics;
    j["diagnostics"] = {{"cycles", d.cycles},
                        {"converged", d.converged},
                        {"deviation_history", d.deviation_history},
                        {"gmres_iterations", d.gmres_iterations},
                        {"gmres_residuals", d.gmres_residuals},
                        {"h_residuals", d.h_residuals}};
    return j;
}

inline ConformalMap map_from_json(const json& j) {
    const json& ver = detail::field(j, "version");
    if (!ver.is_number_integer() || ver.get<int>() != map_format_version)
        throw Error(ErrorCode::version_mismatch,
                    "map format version " + ver.dump() + ", expected " + std::to_string(map_format_version));
    ConformalMap f;
    f.domain = validate_domain(domain_from_json(detail::field(j, "domain")));
    const json& grid = detail::field(j, "grid");
    if (!detail::field(grid, "n").is_number_integer() || !detail::field(grid, "p").is_number_integer())
        throw Error(ErrorCode::schema, "grid n and p must be integers");
    f.n = grid.at("n").get<int>();
    f.p = grid.at("p").get<int>();
    for (const auto& c : detail::field(grid, "corners")) f.corners.push_back(detail::numbers<double>(c, "corners"));
    f.et = detail::nested(detail::field(j, "et"), "et");
    f.etp = detail::nested(detail::field(j, "etp"), "etp");
    f.zet = detail::nested(detail::field(j, "zet"), "zet");
    f.zetp = detail::nested(detail::field(j, "zetp"), "zetp");
    f.cent = io::points(detail::field(j, "cent"), "cent");
    f.rad = detail::numbers<double>(detail::field(j, "rad"), "rad");
    f.imgver = detail::nested(detail::field(j, "imgver"), "imgver");
    const json& post = detail::field(j, "postmap");
    f.sigma = io::point(detail::field(post, "sigma"), "sigma");
    f.tau = io::point(detail::field(post, "tau"), "tau");
    const json& norm = detail::field(j, "normalization");
    if (!norm.is_string()) throw Error(ErrorCode::schema, "normalization must be a string");
    try {
        f.normalization = parse_normalization(norm.get<std::string>());
    } catch (const Error& e) {
        throw Error(ErrorCode::schema, e.what());
    }
    const json& d = detail::field(j, "diagnostics");
    if (!detail::field(d, "cycles").is_number_integer() || !detail::field(d, "converged").is_boolean())
        throw Error(ErrorCode::schema, "diagnostics cycles/converged");
    f.diagnostics.cycles = d.at("cycles").get<int>();
    f.diagnostics.converged = d.at("converged").get<bool>();
    f.diagnostics.deviation_history = detail::numbers<double>(detail::field(d, "deviation_history"), "deviation_history");
    f.diagnostics.gmres_iterations = detail::numbers<int>(detail::field(d, "gmres_iterations"), "gmres_iterations");
    f.diagnostics.gmres_residuals = detail::numbers<double>(detail::field(d, "gmres_residuals"), "gmres_residuals");
    f.diagnostics.h_residuals = detail::numbers<double>(detail::field(d, "h_residuals"), "h_residuals");

    // shape checks
    const std::size_t m = f.domain.size();
    auto same = [m](std::size_t s) { return s == m; };
    if (!same(f.corners.size()) || !same(f.et.size()) || !same(f.etp.size()) || !same(f.zet.size()) ||
        !same(f.zetp.size()) || !same(f.cent.size()) || !same(f.rad.size()) || !same(f.imgver.size()))
        throw Error(ErrorCode::schema, "per-component arrays do not match the number of polygons");
    for (std::size_t c = 0; c < m; ++c) {
        const std::size_t N = f.domain.polygons[c].size() * static_cast<std::size_t>(f.n);
        if (f.et[c].size() != N || f.etp[c].size() != N || f.zet[c].size() != N || f.zetp[c].size() != N)
            throw Error(ErrorCode::schema, "component " + std::to_string(c + 1) + " has the wrong node count");
        if (f.corners[c].size() != f.domain.polygons[c].size() || f.imgver[c].size() != f.corners[c].size())
            throw Error(ErrorCode::schema, "component " + std::to_string(c + 1) + " has the wrong vertex count");
        if (!(f.rad[c] > 0.0)) throw Error(ErrorCode::schema, "radii must be positive");
    }
    if (!(std::abs(f.sigma) > 0.0)) throw Error(ErrorCode::schema, "post-map scale must be nonzero");
    return f;
}

/// Serialized map text. Doubles are written in shortest round-trip form and
/// the text is parsed back and compared before it is returned.
inline std::string map_to_string(const ConformalMap& f) {
    const json j = map_to_json(f);
    std::string text = j.dump();
    if (json::parse(text) != j) throw Error(ErrorCode::io, "map does not survive a serialization round trip");
    text += '\n';
    return text;
}

inline void save_map(const ConformalMap& f, const std::string& path) { io::write_file(path, map_to_string(f)); }

inline ConformalMap load_map(const std::string& path) { return map_from_json(io::parse(io::read_file(path), path)); }

} // namespace plgcir
