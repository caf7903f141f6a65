#pragma once

#include "common.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plgcir {

using Polygon = std::vector<cplx>;

enum class Location { inside, outside, boundary };

/// Shoelace area; positive for counterclockwise vertex order.
inline double signed_area(std::span<const cplx> v) {
    double a = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const cplx p = v[k];
        const cplx q = v[(k + 1) % v.size()];
        a += p.real() * q.imag() - q.real() * p.imag();
    }
    return 0.5 * a;
}

namespace detail {

inline double cross(cplx a, cplx b) { return a.real() * b.imag() - a.imag() * b.real(); }

inline double orient(cplx a, cplx b, cplx c) { return cross(b - a, c - a); }

inline bool on_segment(cplx p, cplx a, cplx b) {
    const double scale = std::abs(b - a) * std::max(std::abs(p - a), std::abs(p - b));
    if (std::abs(orient(a, b, p)) > 8.0 * std::numeric_limits<double>::epsilon() * scale) return false;
    return std::min(a.real(), b.real()) <= p.real() && p.real() <= std::max(a.real(), b.real()) &&
           std::min(a.imag(), b.imag()) <= p.imag() && p.imag() <= std::max(a.imag(), b.imag());
}

inline int sign(double x) { return (x > 0.0) - (x < 0.0); }

/// True when closed segments [a,b] and [c,d] share at least one point.
inline bool segments_intersect(cplx a, cplx b, cplx c, cplx d) {
    const int o1 = sign(orient(a, b, c));
    const int o2 = sign(orient(a, b, d));
    const int o3 = sign(orient(c, d, a));
    const int o4 = sign(orient(c, d, b));
    if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
    return on_segment(c, a, b) || on_segment(d, a, b) || on_segment(a, c, d) || on_segment(b, c, d);
}

} // namespace detail

/// Crossing-number containment with a distinct outcome for points on an edge.
inline Location point_in_polygon(cplx p, std::span<const cplx> v) {
    const std::size_t n = v.size();
    bool inside = false;
    for (std::size_t k = 0; k < n; ++k) {
        const cplx a = v[k];
        const cplx b = v[(k + 1) % n];
        if (detail::on_segment(p, a, b)) return Location::boundary;
        if ((a.imag() > p.imag()) != (b.imag() > p.imag())) {
            const double x = a.real() + (p.imag() - a.imag()) * (b.real() - a.real()) / (b.imag() - a.imag());
            if (p.real() < x) inside = !inside;
        }
    }
    return inside ? Location::inside : Location::outside;
}

/// Interior angle at vertex k measured on the left of the directed boundary.
inline double interior_angle(std::span<const cplx> v, std::size_t k) {
    const std::size_t n = v.size();
    const cplx in = v[k] - v[(k + n - 1) % n];
    const cplx out = v[(k + 1) % n] - v[k];
    const double turn = std::arg(out / in);
    return pi - turn;
}

/// Polygons oriented so the domain lies on their left; the outer polygon (bounded case) is last.
struct PolygonalDomain {
    std::vector<Polygon> polygons;
    bool bounded = true;
    cplx alpha{0.0, 0.0};                  // meaningful only when bounded
    std::optional<std::size_t> beta;       // zero-based vertex index on the last polygon
    std::vector<std::string> warnings;

    std::size_t size() const { return polygons.size(); }

    Location locate(cplx z) const {
        const std::size_t m = polygons.size();
        std::size_t first_inner = 0;
        std::size_t last_inner = m;
        if (bounded) {
            const Location outer = point_in_polygon(z, polygons.back());
            if (outer != Location::inside) return outer;
            last_inner = m - 1;
        }
        for (std::size_t j = first_inner; j < last_inner; ++j) {
            const Location l = point_in_polygon(z, polygons[j]);
            if (l == Location::boundary) return Location::boundary;
            if (l == Location::inside) return Location::outside;
        }
        return Location::inside;
    }

    bool contains(cplx z) const { return locate(z) == Location::inside; }

    /// Largest distance between two boundary vertices.
    double diameter() const {
        double d = 0.0;
        for (const auto& p : polygons)
            for (const auto& q : polygons)
                for (cplx a : p)
                    for (cplx b : q) d = std::max(d, std::abs(a - b));
        return d;
    }

    /// Distance from z to the nearest boundary edge.
    double boundary_distance(cplx z) const {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& p : polygons)
            for (std::size_t k = 0; k < p.size(); ++k) {
                const cplx a = p[k];
                const cplx b = p[(k + 1) % p.size()];
                const cplx ab = b - a;
                const double t = std::clamp(std::real((z - a) * std::conj(ab)) / std::norm(ab), 0.0, 1.0);
                d = std::min(d, std::abs(z - (a + t * ab)));
            }
        return d;
    }

    std::optional<cplx> beta_point() const {
        if (!beta) return std::nullopt;
        return polygons.back()[*beta];
    }
};

struct CircularDomain {
    std::vector<cplx> centers;
    std::vector<double> radii;
    bool bounded = true;

    std::size_t size() const { return centers.size(); }
};

inline bool point_in_circular(cplx w, const CircularDomain& c) {
    const std::size_t m = c.size();
    std::size_t inner = m;
    if (c.bounded) {
        if (!(std::abs(w - c.centers.back()) < c.radii.back())) return false;
        inner = m - 1;
    }
    for (std::size_t j = 0; j < inner; ++j)
        if (!(std::abs(w - c.centers[j]) > c.radii[j])) return false;
    return true;
}

/// Checks the disjointness/nesting invariants of a circular domain.
inline bool circles_valid(const CircularDomain& c) {
    const std::size_t m = c.size();
    const std::size_t inner = c.bounded ? m - 1 : m;
    for (double r : c.radii)
        if (!(r > 0.0)) return false;
    for (std::size_t j = 0; j < inner; ++j) {
        if (c.bounded && !(std::abs(c.centers[j] - c.centers.back()) + c.radii[j] < c.radii.back())) return false;
        for (std::size_t k = j + 1; k < inner; ++k)
            if (!(std::abs(c.centers[j] - c.centers[k]) > c.radii[j] + c.radii[k])) return false;
    }
    return true;
}

inline constexpr double cusp_threshold = 1e-6;

/// Validates raw input and returns a domain satisfying all orientation and
/// nesting invariants. A missing alpha marks the unbounded case (alpha = inf).
/// beta is a zero-based vertex index on the last polygon, in input order.
inline PolygonalDomain validate_domain(std::vector<Polygon> polygons, std::optional<cplx> alpha,
                                       std::optional<std::size_t> beta = std::nullopt) {
    PolygonalDomain d;
    d.bounded = alpha.has_value();
    const std::size_t m = polygons.size();
    if (m == 0) throw Error(ErrorCode::too_few_vertices, "domain has no polygons");

    for (std::size_t j = 0; j < m; ++j) {
        const auto& p = polygons[j];
        if (p.size() < 3)
            throw Error(ErrorCode::too_few_vertices, "polygon " + std::to_string(j + 1) + " has fewer than 3 vertices");
        for (cplx z : p)
            if (!is_finite(z)) throw Error(ErrorCode::non_finite, "polygon " + std::to_string(j + 1));
        for (std::size_t k = 0; k < p.size(); ++k)
            if (p[k] == p[(k + 1) % p.size()])
                throw Error(ErrorCode::cusp, "polygon " + std::to_string(j + 1) + " has a repeated vertex");
    }
    if (alpha && !is_finite(*alpha)) throw Error(ErrorCode::non_finite, "alpha");

    // Simplicity: non-adjacent edges must not touch.
    for (std::size_t j = 0; j < m; ++j) {
        const auto& p = polygons[j];
        const std::size_t n = p.size();
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b) {
                if (b == a + 1 || (a == 0 && b == n - 1)) continue;
                if (detail::segments_intersect(p[a], p[(a + 1) % n], p[b], p[(b + 1) % n]))
                    throw Error(ErrorCode::self_intersection, "polygon " + std::to_string(j + 1));
            }
    }

    // Pairwise edge intersections between different polygons.
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            const auto& p = polygons[i];
            const auto& q = polygons[j];
            for (std::size_t a = 0; a < p.size(); ++a)
                for (std::size_t b = 0; b < q.size(); ++b)
                    if (detail::segments_intersect(p[a], p[(a + 1) % p.size()], q[b], q[(b + 1) % q.size()]))
                        throw Error(ErrorCode::polygon_overlap,
                                    "polygons " + std::to_string(i + 1) + " and " + std::to_string(j + 1));
        }

    // Nesting: one containment probe per pair suffices once edges are disjoint.
    const std::size_t inner = d.bounded ? m - 1 : m;
    for (std::size_t i = 0; i < inner; ++i) {
        if (d.bounded && point_in_polygon(polygons[i][0], polygons.back()) != Location::inside)
            throw Error(ErrorCode::polygon_overlap,
                        "polygon " + std::to_string(i + 1) + " is not inside the outer polygon");
        for (std::size_t j = 0; j < inner; ++j) {
            if (i == j) continue;
            if (point_in_polygon(polygons[i][0], polygons[j]) != Location::outside)
                throw Error(ErrorCode::polygon_overlap,
                            "polygon " + std::to_string(i + 1) + " lies inside polygon " + std::to_string(j + 1));
        }
    }

    // Orientation: domain on the left.
    for (std::size_t j = 0; j < m; ++j) {
        const bool outer = d.bounded && j == m - 1;
        const double area = signed_area(polygons[j]);
        if ((outer && area < 0.0) || (!outer && area > 0.0)) {
            std::reverse(polygons[j].begin(), polygons[j].end());
            if (outer && beta) beta = polygons[j].size() - 1 - *beta;
            d.warnings.push_back("polygon " + std::to_string(j + 1) + " reoriented");
        }
    }

    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < polygons[j].size(); ++k) {
            const double a = interior_angle(polygons[j], k);
            if (!(a > cusp_threshold && a < two_pi - cusp_threshold))
                throw Error(ErrorCode::cusp,
                            "polygon " + std::to_string(j + 1) + " vertex " + std::to_string(k + 1));
        }

    d.polygons = std::move(polygons);
    if (d.bounded) {
        d.alpha = *alpha;
        if (d.locate(d.alpha) != Location::inside) throw Error(ErrorCode::alpha_outside, "alpha is not inside the domain");
    }
    if (beta) {
        if (*beta >= d.polygons.back().size())
            throw Error(ErrorCode::beta_invalid, "beta vertex index out of range");
        d.beta = beta;
    }
    return d;
}

/// Revalidates an already validated domain (idempotent).
inline PolygonalDomain validate_domain(const PolygonalDomain& d) {
    PolygonalDomain out = validate_domain(d.polygons, d.bounded ? std::optional<cplx>(d.alpha) : std::nullopt, d.beta);
    out.warnings.insert(out.warnings.begin(), d.warnings.begin(), d.warnings.end());
    return out;
}

} // namespace plgcir
