#pragma once

// Command-line front end: map, eval, grid, info.
//
// Exit codes: 0 success, 2 invalid geometry, 3 convergence failure,
// 4 I/O, schema or usage errors.

#include "common.hpp"
#include "discretize.hpp"
#include "domain_io.hpp"
#include "grids.hpp"
#include "koebe.hpp"
#include "mapdata.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace plgcir {

struct RunConfig {
    int n = 512;
    int p = 3;
    double gmres_tol = 0.5e-12;
    int gmres_maxit = 100;
    double koebe_tol = 1e-12;
    int koebe_maxit = 100;
    std::optional<Normalization> normalization;  // default: eq1/eq3, or eq2/eq4 with a beta vertex
    double delta = 0.0;                          // 0: 1e-3 times the diameter

    void check() const {
        if (n < 4 || n % 2 != 0) throw Error(ErrorCode::bad_argument, "n must be even and >= 4");
        if (p < 2) throw Error(ErrorCode::bad_argument, "grading exponent must be >= 2");
        if (!(gmres_tol > 0.0) || !(koebe_tol > 0.0)) throw Error(ErrorCode::bad_argument, "tolerances must be > 0");
        if (gmres_maxit < 1 || koebe_maxit < 1) throw Error(ErrorCode::bad_argument, "iteration caps must be >= 1");
        if (delta < 0.0) throw Error(ErrorCode::bad_argument, "delta must be >= 0");
    }
};

/// The whole pipeline on a validated domain.
inline ConformalMap compute_map(const PolygonalDomain& domain, const RunConfig& cfg) {
    cfg.check();
    const Normalization norm = cfg.normalization.value_or(
        domain.bounded ? (domain.beta ? Normalization::eq2 : Normalization::eq1)
                       : (domain.beta ? Normalization::eq4 : Normalization::eq3));
    const auto disc = discretize_polygon(domain, cfg.n, cfg.p);
    KoebeOptions opts;
    opts.koebe_tol = cfg.koebe_tol;
    opts.koebe_maxit = cfg.koebe_maxit;
    opts.solver.gmres_tol = cfg.gmres_tol;
    opts.solver.gmres_maxit = cfg.gmres_maxit;
    KoebeResult kr = koebe_iterate(disc, domain, opts);
    if (!kr.converged) return build_map(kr, domain, disc);  // throws the convergence error
    normalize(kr, disc, domain, norm);
    return build_map(kr, domain, disc);
}

namespace cli {

inline int exit_code(ErrorCode c) {
    if (is_geometry_error(c)) return 2;
    if (c == ErrorCode::convergence) return 3;
    return 4;
}

inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Points file: one `x,y` per line; blank lines and `#` comments are skipped.
inline std::vector<cplx> read_points_csv(const std::string& path) {
    std::istringstream in(io::read_file(path));
    std::vector<cplx> pts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto comma = line.find(',');
        try {
            if (comma == std::string::npos) throw std::invalid_argument("no comma");
            std::size_t used = 0;
            const std::string xs = line.substr(0, comma), ys = line.substr(comma + 1);
            const double x = std::stod(xs, &used);
            if (xs.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("x");
            const double y = std::stod(ys, &used);
            if (ys.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument("y");
            pts.emplace_back(x, y);
        } catch (const std::exception&) {
            throw Error(ErrorCode::schema, path + ":" + std::to_string(lineno) + ": expected x,y");
        }
    }
    return pts;
}

/// out.svg -> out_src.svg
inline std::string with_suffix(const std::string& path, const std::string& suffix) {
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + suffix;
    return path.substr(0, dot) + suffix + path.substr(dot);
}

inline json info_json(const ConformalMap& f) {
    const auto& d = f.diagnostics;
    json j;
    j["m"] = f.size();
    j["bounded"] = f.bounded();
    j["n"] = f.n;
    j["p"] = f.p;
    j["centers"] = io::points(f.cent);
    j["radii"] = f.rad;
    j["vertex_images"] = json::array();
    for (const auto& v : f.imgver) j["vertex_images"].push_back(io::points(v));
    j["normalization"] = to_string(f.normalization);
    j["postmap"] = {{"sigma", io::point(f.sigma)}, {"tau", io::point(f.tau)}};
    j["cycles"] = d.cycles;
    j["converged"] = d.converged;
    j["max_deviation"] = d.final_deviation();
    json g;
    g["solves"] = d.gmres_iterations.size();
    g["max_iterations"] = d.gmres_iterations.empty()
                              ? 0
                              : *std::max_element(d.gmres_iterations.begin(), d.gmres_iterations.end());
    g["mean_iterations"] =
        d.gmres_iterations.empty()
            ? 0.0
            : std::accumulate(d.gmres_iterations.begin(), d.gmres_iterations.end(), 0.0) / d.gmres_iterations.size();
    g["max_residual"] =
        d.gmres_residuals.empty() ? 0.0 : *std::max_element(d.gmres_residuals.begin(), d.gmres_residuals.end());
    j["gmres"] = g;
    j["max_h_residual"] =
        d.h_residuals.empty() ? 0.0 : *std::max_element(d.h_residuals.begin(), d.h_residuals.end());
    return j;
}

inline void print_info(const ConformalMap& f, std::ostream& out) {
    const json j = info_json(f);
    out << "components      " << f.size() << (f.bounded() ? " (bounded)" : " (unbounded)") << '\n'
        << "grid            n=" << f.n << " p=" << f.p << '\n'
        << "normalization   " << to_string(f.normalization) << '\n'
        << "koebe           " << f.diagnostics.cycles << " cycles, max deviation " << f.diagnostics.final_deviation()
        << (f.diagnostics.converged ? "" : " (not converged)") << '\n'
        << "gmres           " << j["gmres"]["solves"] << " solves, max " << j["gmres"]["max_iterations"]
        << " iterations, mean " << j["gmres"]["mean_iterations"].get<double>() << ", max residual "
        << j["gmres"]["max_residual"].get<double>() << '\n'
        << "h residual      " << j["max_h_residual"].get<double>() << '\n';
    for (std::size_t k = 0; k < f.size(); ++k) {
        out << "circle " << k + 1 << "  center " << fmt(f.cent[k].real()) << ' ' << fmt(f.cent[k].imag())
            << "  radius " << fmt(f.rad[k]) << '\n';
        out << "  vertex images:";
        for (cplx v : f.imgver[k]) out << " (" << fmt(v.real()) << ", " << fmt(v.imag()) << ')';
        out << '\n';
    }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Conformal maps of polygonal multiply connected domains onto circular domains"};
    app.require_subcommand(1);
    RunConfig cfg;

    // map
    auto* map_cmd = app.add_subcommand("map", "compute a map and write it as JSON");
    std::string input, output, norm_name;
    std::optional<long> beta_vertex;
    map_cmd->add_option("--input", input, "domain JSON")->required();
    map_cmd->add_option("--output", output, "map JSON")->required();
    map_cmd->add_option("--n", cfg.n, "nodes per polygon side")->capture_default_str();
    map_cmd->add_option("--p", cfg.p, "grading exponent")->capture_default_str();
    map_cmd->add_option("--gmres-tol", cfg.gmres_tol)->capture_default_str();
    map_cmd->add_option("--gmres-maxit", cfg.gmres_maxit)->capture_default_str();
    map_cmd->add_option("--koebe-tol", cfg.koebe_tol)->capture_default_str();
    map_cmd->add_option("--koebe-maxit", cfg.koebe_maxit)->capture_default_str();
    map_cmd->add_option("--normalization", norm_name, "eq1|eq2 (bounded), eq3|eq4 (unbounded)");
    map_cmd->add_option("--beta-vertex", beta_vertex, "vertex of the last polygon sent to 1 (1-based)");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate the map or its inverse at points");
    std::string map_path, points_path, direction = "forward", eval_out;
    bool deriv = false;
    eval_cmd->add_option("--map", map_path)->required();
    eval_cmd->add_option("--points", points_path, "CSV with x,y per line")->required();
    eval_cmd->add_option("--direction", direction)->check(CLI::IsMember({"forward", "inverse"}))->capture_default_str();
    eval_cmd->add_flag("--deriv", deriv, "also write the derivative");
    eval_cmd->add_option("--output", eval_out, "CSV output (default stdout)");
    eval_cmd->add_option("--delta", cfg.delta, "trusted-evaluation margin (default 1e-3 * diameter)");

    // grid
    auto* grid_cmd = app.add_subcommand("grid", "export a coordinate grid and its image");
    std::string kind, side, svg_path, data_path;
    int n1 = 0, n2 = 0;
    grid_cmd->add_option("--map", map_path)->required();
    grid_cmd->add_option("--kind", kind, "rec (in the polygonal domain) or plr (in the circular domain)")
        ->check(CLI::IsMember({"rec", "plr"}))
        ->required();
    grid_cmd->add_option("--side", side, "d (polygonal domain) or v (circular domain)")
        ->check(CLI::IsMember({"d", "v"}))
        ->required();
    grid_cmd->add_option("--n1", n1, "horizontal lines / circles")->required();
    grid_cmd->add_option("--n2", n2, "vertical lines / rays")->required();
    grid_cmd->add_option("--svg", svg_path, "SVG base name; _src and _img are appended");
    grid_cmd->add_option("--data", data_path, "JSONL base name; _src and _img are appended");

    // info
    auto* info_cmd = app.add_subcommand("info", "summarize a map file");
    bool as_json = false;
    info_cmd->add_option("--map", map_path)->required();
    info_cmd->add_flag("--json", as_json, "machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 4;
    }

    try {
        if (*map_cmd) {
            const auto t0 = std::chrono::steady_clock::now();
            if (!norm_name.empty()) cfg.normalization = parse_normalization(norm_name);
            cfg.check();
            DomainSpec spec = read_domain(input);
            if (beta_vertex) {
                if (*beta_vertex < 1) throw Error(ErrorCode::beta_invalid, "--beta-vertex numbers start at 1");
                spec.beta = static_cast<std::size_t>(*beta_vertex);
            }
            const PolygonalDomain domain = validate_domain(spec);
            for (const auto& w : domain.warnings) err << "warning: " << w << '\n';
            const ConformalMap f = compute_map(domain, cfg);
            save_map(f, output);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            const auto& g = f.diagnostics.gmres_iterations;
            out << "m=" << f.size() << " n=" << f.n << " normalization=" << to_string(f.normalization)
                << " cycles=" << f.diagnostics.cycles << " deviation=" << f.diagnostics.final_deviation()
                << " max_gmres=" << (g.empty() ? 0 : *std::max_element(g.begin(), g.end())) << " time=" << secs
                << "s\n";
            return 0;
        }
        if (*eval_cmd) {
            cfg.check();
            const ConformalMap f = load_map(map_path);
            const auto pts = read_points_csv(points_path);
            const Direction dir = direction == "inverse" ? Direction::inverse : Direction::forward;
            const Evaluation ev = evaluate(f, pts, dir, {cfg.delta, deriv});
            std::ostringstream csv;
            for (std::size_t q = 0; q < pts.size(); ++q) {
                csv << fmt(pts[q].real()) << ',' << fmt(pts[q].imag());
                const bool bad = !is_finite(ev.value[q]);
                csv << ',' << (bad ? "nan" : fmt(ev.value[q].real())) << ',' << (bad ? "nan" : fmt(ev.value[q].imag()));
                if (deriv)
                    csv << ',' << (bad ? "nan" : fmt(ev.deriv[q].real())) << ','
                        << (bad ? "nan" : fmt(ev.deriv[q].imag()));
                csv << '\n';
            }
            if (eval_out.empty())
                out << csv.str();
            else
                io::write_file(eval_out, csv.str());
            for (std::size_t q : ev.near) err << "warning: point " << q + 1 << " is within delta of the boundary\n";
            err << ev.outside.size() << " point(s) outside the region\n";
            return 0;
        }
        if (*grid_cmd) {
            if (n1 < 1 || n2 < 1) throw Error(ErrorCode::bad_argument, "--n1 and --n2 must be >= 1");
            if ((kind == "rec") != (side == "d"))
                throw Error(ErrorCode::bad_argument, "rectangular grids live on side d, polar grids on side v");
            if (svg_path.empty() && data_path.empty()) throw Error(ErrorCode::bad_argument, "give --svg and/or --data");
            const ConformalMap f = load_map(map_path);
            const PolylineSet src = kind == "rec" ? rect_grid(f.domain, n1, n2) : polar_grid(f.circles(), n1, n2);
            const PolylineSet img = map_polylines(f, src, kind == "rec" ? Direction::forward : Direction::inverse);
            auto target = [&](const std::string& base, const char* suffix) {
                return base.empty() ? std::string() : with_suffix(base, suffix);
            };
            emit({src}, target(svg_path, "_src"), target(data_path, "_src"));
            emit({img}, target(svg_path, "_img"), target(data_path, "_img"));
            std::size_t ns = 0, ni = 0;
            for (const auto& l : src.lines) ns += l.points.size();
            for (const auto& l : img.lines) ni += l.points.size();
            out << src.lines.size() << " source lines (" << ns << " points), " << img.lines.size() << " image lines ("
                << ni << " points), " << img.dropped << " dropped\n";
            return 0;
        }
        if (*info_cmd) {
            const ConformalMap f = load_map(map_path);
            if (as_json)
                out << info_json(f).dump(2) << '\n';
            else
                print_info(f, out);
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 4;
    }
    return 4;
}

} // namespace cli
} // namespace plgcir
