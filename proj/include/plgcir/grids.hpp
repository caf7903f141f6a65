#pragma once

// Coordinate grids: rectangular grids clipped to the polygonal domain, polar
// grids clipped to the circular domain, their images, and SVG/JSONL output.

#include "common.hpp"
#include "domain_io.hpp"
#include "geometry.hpp"
#include "mapdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace plgcir {

enum class Family { horizontal, vertical, circle, ray };
enum class Side { domain, codomain };

inline const char* to_string(Family f) {
    switch (f) {
    case Family::horizontal: return "horizontal";
    case Family::vertical: return "vertical";
    case Family::circle: return "circle";
    case Family::ray: return "ray";
    }
    return "horizontal";
}

inline const char* to_string(Side s) { return s == Side::domain ? "domain" : "codomain"; }

struct Polyline {
    Family family = Family::horizontal;
    int index = 0;  // which line of its family
    std::vector<cplx> points;
};

struct PolylineSet {
    Side side = Side::domain;
    std::vector<Polyline> lines;
    std::vector<std::vector<cplx>> boundary;  // closed curves, drawn separately
    std::size_t dropped = 0;                  // samples lost while mapping
};

namespace detail {

inline double sample_step(double diameter) { return diameter / 400.0; }

inline int sample_count(double length, double diameter) {
    return std::max(8, static_cast<int>(std::ceil(length / sample_step(diameter))));
}

// Samples [a, b] of a curve c(s), pulling the ends marked as boundary hits in
// by eps, and keeps the runs of points accepted by `inside`.
template <class Curve, class Inside>
void emit_interval(PolylineSet& set, Family fam, int index, const Curve& c, double a, double b, bool pull_a,
                   bool pull_b, double eps, double speed, double diameter, const Inside& inside) {
    if (pull_a) a += eps / speed;
    if (pull_b) b -= eps / speed;
    if (!(b > a)) return;
    const int k = sample_count((b - a) * speed, diameter);
    Polyline cur{fam, index, {}};
    auto flush = [&] {
        if (cur.points.size() >= 2) set.lines.push_back(cur);
        cur.points.clear();
    };
    for (int i = 0; i < k; ++i) {
        const cplx z = c(a + (b - a) * i / (k - 1));
        if (inside(z))
            cur.points.push_back(z);
        else
            flush();
    }
    flush();
}

inline void sort_unique(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

} // namespace detail

/// n1 horizontal and n2 vertical lines across the bounding box, clipped
/// exactly against every edge. Unbounded domains use the box of all
/// components inflated by 50%.
inline PolylineSet rect_grid(const PolygonalDomain& domain, int n1, int n2) {
    if (n1 < 1 || n2 < 1) throw Error(ErrorCode::bad_argument, "grid line counts must be >= 1");
    const double diam = domain.diameter();
    const double eps = 1e-3 * diam;

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& p : domain.polygons)
        for (cplx v : p) {
            x0 = std::min(x0, v.real());
            x1 = std::max(x1, v.real());
            y0 = std::min(y0, v.imag());
            y1 = std::max(y1, v.imag());
        }
    if (!domain.bounded) {
        const double dx = 0.25 * (x1 - x0), dy = 0.25 * (y1 - y0);
        x0 -= dx;
        x1 += dx;
        y0 -= dy;
        y1 += dy;
    }

    PolylineSet set;
    set.side = Side::domain;
    for (const auto& p : domain.polygons) {
        set.boundary.push_back(p);
        set.boundary.back().push_back(p.front());
    }
    auto inside = [&](cplx z) { return domain.contains(z); };

    // one line: u runs along it, `fixed` is the other coordinate
    auto clip = [&](Family fam, int index, double fixed, double u0, double u1) {
        const bool horiz = fam == Family::horizontal;
        auto at = [&](double u) { return horiz ? cplx(u, fixed) : cplx(fixed, u); };
        auto along = [&](cplx z) { return horiz ? z.real() : z.imag(); };
        auto across = [&](cplx z) { return horiz ? z.imag() : z.real(); };
        std::vector<double> hits;
        for (const auto& p : domain.polygons)
            for (std::size_t k = 0; k < p.size(); ++k) {
                const cplx a = p[k], b = p[(k + 1) % p.size()];
                const double da = across(a) - fixed, db = across(b) - fixed;
                if (da == 0.0) hits.push_back(along(a));
                if (db == 0.0) hits.push_back(along(b));
                if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0))
                    hits.push_back(along(a) + (along(b) - along(a)) * da / (da - db));
            }
        std::vector<double> cuts{u0, u1};
        for (double u : hits)
            if (u > u0 && u < u1) cuts.push_back(u);
        detail::sort_unique(cuts);
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            const double a = cuts[k], b = cuts[k + 1];
            if (!inside(at(0.5 * (a + b)))) continue;
            // window ends of a bounded domain can only be boundary points
            const bool pull_a = k > 0 || domain.bounded, pull_b = k + 2 < cuts.size() || domain.bounded;
            detail::emit_interval(set, fam, index, at, a, b, pull_a, pull_b, eps, 1.0, diam, inside);
        }
    };
    for (int k = 0; k < n1; ++k) clip(Family::horizontal, k, y0 + (y1 - y0) * (k + 1) / (n1 + 1), x0, x1);
    for (int k = 0; k < n2; ++k) clip(Family::vertical, k, x0 + (x1 - x0) * (k + 1) / (n2 + 1), y0, y1);
    return set;
}

/// Outer radius of the polar grid: the unit disk for bounded maps, otherwise
/// far enough out to enclose every circle.
inline double polar_radius(const CircularDomain& c) {
    if (c.bounded) return 1.0;
    double far = 0.0, rad = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
        far = std::max(far, std::abs(c.centers[j]));
        rad = std::max(rad, c.radii[j]);
    }
    return 2.0 * far + rad;
}

/// n1 circles |w| = r (radii equally spaced in (0, r_max)) and n2 rays from
/// the origin, clipped to the circular domain.
inline PolylineSet polar_grid(const CircularDomain& circ, int n1, int n2) {
    if (n1 < 1 || n2 < 1) throw Error(ErrorCode::bad_argument, "grid line counts must be >= 1");
    const double rmax = polar_radius(circ);
    const double diam = 2.0 * rmax;
    const double eps = 1e-3 * diam;

    PolylineSet set;
    set.side = Side::codomain;
    for (std::size_t j = 0; j < circ.size(); ++j) {
        const int k = detail::sample_count(two_pi * circ.radii[j], diam);
        std::vector<cplx> b;
        for (int i = 0; i <= k; ++i) b.push_back(circ.centers[j] + std::polar(circ.radii[j], two_pi * i / k));
        set.boundary.push_back(std::move(b));
    }
    auto inside = [&](cplx w) { return point_in_circular(w, circ); };

    for (int k = 0; k < n1; ++k) {
        const double r = rmax * (k + 1) / (n1 + 1);
        auto at = [&](double t) { return std::polar(r, t); };
        // |r e^{it} - c| = rho  <=>  cos(t - arg c) = (r^2 + |c|^2 - rho^2) / (2 r |c|)
        std::vector<double> cuts;
        for (std::size_t j = 0; j < circ.size(); ++j) {
            const cplx c = circ.centers[j];
            const double ac = std::abs(c), rho = circ.radii[j];
            if (ac == 0.0) continue;
            const double x = (r * r + ac * ac - rho * rho) / (2.0 * r * ac);
            if (!(std::abs(x) < 1.0)) continue;
            const double d = std::acos(x), psi = std::arg(c);
            for (double t : {psi - d, psi + d}) cuts.push_back(std::fmod(std::fmod(t, two_pi) + two_pi, two_pi));
        }
        detail::sort_unique(cuts);
        if (cuts.empty()) {
            if (!inside(at(0.0))) continue;
            detail::emit_interval(set, Family::circle, k, at, 0.0, two_pi, false, false, eps, r, diam, inside);
            continue;
        }
        for (std::size_t i = 0; i < cuts.size(); ++i) {
            const double a = cuts[i];
            const double b = i + 1 < cuts.size() ? cuts[i + 1] : cuts[0] + two_pi;
            if (!inside(at(0.5 * (a + b)))) continue;
            detail::emit_interval(set, Family::circle, k, at, a, b, true, true, eps, r, diam, inside);
        }
    }

    for (int k = 0; k < n2; ++k) {
        const cplx dir = std::polar(1.0, two_pi * k / n2);
        auto at = [&](double s) { return s * dir; };
        // |s dir - c|^2 = rho^2  <=>  s^2 - 2 s Re(c conj(dir)) + |c|^2 - rho^2 = 0
        std::vector<double> cuts{0.0, rmax};
        for (std::size_t j = 0; j < circ.size(); ++j) {
            const cplx c = circ.centers[j];
            const double bq = std::real(c * std::conj(dir));
            const double disc = bq * bq - (std::norm(c) - circ.radii[j] * circ.radii[j]);
            if (!(disc > 0.0)) continue;
            for (double s : {bq - std::sqrt(disc), bq + std::sqrt(disc)})
                if (s > 0.0 && s < rmax) cuts.push_back(s);
        }
        detail::sort_unique(cuts);
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double a = cuts[i], b = cuts[i + 1];
            if (!inside(at(0.5 * (a + b)))) continue;
            // the origin and the window edge are not boundary points; the
            // bounded window edge is the outer circle itself
            const bool pull_b = i + 2 < cuts.size() || circ.bounded;
            detail::emit_interval(set, Family::ray, k, at, a, b, i > 0, pull_b, eps, 1.0, diam, inside);
        }
    }
    return set;
}

/// Maps every sample to the other side. Points that fail to map, or whose
/// image falls outside the target region, are dropped (lines are split there)
/// and counted.
inline PolylineSet map_polylines(const ConformalMap& f, const PolylineSet& set, Direction dir) {
    const bool fwd = dir == Direction::forward;
    if ((set.side == Side::domain) != fwd)
        throw Error(ErrorCode::bad_argument, "grid side does not match the mapping direction");
    std::vector<cplx> pts;
    for (const auto& l : set.lines) pts.insert(pts.end(), l.points.begin(), l.points.end());
    const auto img = evaluate(f, pts, dir).value;
    const CircularDomain circ = f.circles();
    auto ok = [&](cplx w) { return is_finite(w) && (fwd ? point_in_circular(w, circ) : f.domain.contains(w)); };

    PolylineSet out;
    out.side = fwd ? Side::codomain : Side::domain;
    out.dropped = set.dropped;
    std::size_t q = 0;
    for (const auto& l : set.lines) {
        Polyline cur{l.family, l.index, {}};
        for (std::size_t i = 0; i < l.points.size(); ++i, ++q) {
            if (ok(img[q])) {
                cur.points.push_back(img[q]);
                continue;
            }
            ++out.dropped;
            if (cur.points.size() >= 2) out.lines.push_back(cur);
            cur.points.clear();
        }
        if (cur.points.size() >= 2) out.lines.push_back(std::move(cur));
        else out.dropped += cur.points.size();
    }
    for (const auto& c : fwd ? f.zet : f.et) {
        out.boundary.push_back(c);
        if (!c.empty()) out.boundary.back().push_back(c.front());
    }
    return out;
}

// ---------------------------------------------------------------------------
// output

/// SVG 1.1: one <polyline> per grid line (class = family), boundaries as
/// <path class="boundary">. y is flipped so the picture is upright.
inline std::string to_svg(const std::vector<PolylineSet>& sets) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    auto extend = [&](cplx z) {
        x0 = std::min(x0, z.real());
        x1 = std::max(x1, z.real());
        y0 = std::min(y0, -z.imag());
        y1 = std::max(y1, -z.imag());
    };
    for (const auto& s : sets) {
        for (const auto& l : s.lines)
            for (cplx z : l.points) extend(z);
        for (const auto& b : s.boundary)
            for (cplx z : b) extend(z);
    }
    if (!(x1 >= x0)) x0 = y0 = -1.0, x1 = y1 = 1.0;
    const double pad = 0.05 * std::max({x1 - x0, y1 - y0, 1e-12});
    x0 -= pad;
    y0 -= pad;
    x1 += pad;
    y1 += pad;

    std::ostringstream o;
    o.precision(10);
    auto coords = [&](const std::vector<cplx>& pts) -> std::ostream& {
        for (std::size_t i = 0; i < pts.size(); ++i) o << (i ? " " : "") << pts[i].real() << ',' << -pts[i].imag();
        return o;
    };
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"" << x0 << ' ' << y0 << ' ' << x1 - x0
      << ' ' << y1 - y0 << "\">\n"
      << "<style>polyline,path{fill:none;vector-effect:non-scaling-stroke;stroke-width:1}"
         ".horizontal,.circle{stroke:#1f5fa8}.vertical,.ray{stroke:#b8452a}"
         ".boundary{stroke:#000;stroke-width:2}</style>\n";
    for (const auto& s : sets) {
        o << "<g class=\"" << to_string(s.side) << "\">\n";
        for (const auto& b : s.boundary) {
            if (b.empty()) continue;
            o << "<path class=\"boundary\" d=\"M";
            coords(b) << "Z\"/>\n";
        }
        for (const auto& l : s.lines) {
            o << "<polyline class=\"" << to_string(l.family) << "\" points=\"";
            coords(l.points) << "\"/>\n";
        }
        o << "</g>\n";
    }
    o << "</svg>\n";
    return o.str();
}

/// One JSON object per grid line.
inline std::string to_jsonl(const std::vector<PolylineSet>& sets) {
    std::string out;
    for (const auto& s : sets)
        for (const auto& l : s.lines) {
            json j{{"side", to_string(s.side)}, {"family", to_string(l.family)}, {"index", l.index},
                   {"points", io::points(l.points)}};
            out += j.dump();
            out += '\n';
        }
    return out;
}

inline void emit(const std::vector<PolylineSet>& sets, const std::string& svg_path, const std::string& data_path) {
    if (!svg_path.empty()) io::write_file(svg_path, to_svg(sets));
    if (!data_path.empty()) io::write_file(data_path, to_jsonl(sets));
}

} // namespace plgcir
