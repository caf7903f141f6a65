#pragma once

#include "common.hpp"
#include "geometry.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace plgcir {

struct GradingValue {
    double w;    // w(s)
    double dw;   // w'(s)
    double d2w;  // w''(s)
};

/// Kress' sigmoidal substitution on [0, 2*pi]. w'(s) vanishes to order p-1 at
/// both endpoints, which clusters the uniform parameter nodes towards corners.
inline GradingValue kress_grading(double s, int p) {
    const double c = 1.0 / p - 0.5;
    auto v = [&](double x) {
        const double u = (pi - x) / pi;
        return c * u * u * u + (x - pi) / (p * pi) + 0.5;
    };
    auto dv = [&](double x) {
        const double u = (pi - x) / pi;
        return -3.0 * c * u * u / pi + 1.0 / (p * pi);
    };
    auto d2v = [&](double x) {
        const double u = (pi - x) / pi;
        return 6.0 * c * u / (pi * pi);
    };

    const double v1 = v(s), dv1 = dv(s), d2v1 = d2v(s);
    const double v2 = v(two_pi - s), dv2 = -dv(two_pi - s), d2v2 = d2v(two_pi - s);

    auto power_terms = [p](double x, double dx, double d2x, double& f, double& df, double& d2f) {
        const double xp2 = p >= 2 ? std::pow(x, p - 2) : 0.0;
        const double xp1 = xp2 * x;
        f = xp1 * x;
        df = p * xp1 * dx;
        d2f = p * (p - 1) * xp2 * dx * dx + p * xp1 * d2x;
    };
    double a, da, d2a, b, db, d2b;
    power_terms(v1, dv1, d2v1, a, da, d2a);
    power_terms(v2, dv2, d2v2, b, db, d2b);

    const double S = a + b;
    const double dS = da + db;
    const double num = da * b - a * db;
    const double dnum = d2a * b - a * d2b;
    const double R = a / S;
    const double dR = num / (S * S);
    const double d2R = (dnum * S - 2.0 * num * dS) / (S * S * S);
    return {two_pi * R, two_pi * dR, two_pi * d2R};
}

/// Samples of one closed boundary curve on the uniform grid t_r = (2*pi/N)(r + 1/2).
struct BoundaryComponent {
    std::vector<cplx> z;    // positions
    std::vector<cplx> dz;   // d/dt
    std::vector<cplx> d2z;  // d^2/dt^2
    std::vector<double> corners;  // corner parameters; empty for smooth curves
    int grading = 0;              // Kress exponent while the curve still has its corners, else 0

    std::size_t size() const { return z.size(); }
    double weight() const { return two_pi / static_cast<double>(z.size()); }
    double node(std::size_t r) const { return weight() * (static_cast<double>(r) + 0.5); }
};

struct BoundaryDiscretization {
    std::vector<BoundaryComponent> components;
    int n = 0;  // nodes per polygon side
    int p = 3;  // grading exponent

    std::size_t total() const {
        std::size_t s = 0;
        for (const auto& c : components) s += c.size();
        return s;
    }

    std::vector<std::size_t> offsets() const {
        std::vector<std::size_t> off;
        std::size_t s = 0;
        for (const auto& c : components) {
            off.push_back(s);
            s += c.size();
        }
        return off;
    }
};

inline BoundaryComponent discretize_polygon_component(const Polygon& v, int n, int p) {
    const std::size_t sides = v.size();
    const std::size_t N = sides * static_cast<std::size_t>(n);
    BoundaryComponent c;
    c.grading = p;
    c.z.resize(N);
    c.dz.resize(N);
    c.d2z.resize(N);
    const double ell = static_cast<double>(sides);
    for (std::size_t k = 0; k < sides; ++k) {
        c.corners.push_back(two_pi * static_cast<double>(k) / ell);
        const cplx a = v[k];
        const cplx edge = v[(k + 1) % sides] - a;
        for (int r = 0; r < n; ++r) {
            const double s = two_pi * (r + 0.5) / n;
            const GradingValue g = kress_grading(s, p);
            const std::size_t idx = k * static_cast<std::size_t>(n) + static_cast<std::size_t>(r);
            c.z[idx] = a + edge * (g.w / two_pi);
            c.dz[idx] = edge * (ell * g.dw / two_pi);
            c.d2z[idx] = edge * (ell * ell * g.d2w / two_pi);
        }
    }
    return c;
}

inline BoundaryDiscretization discretize_polygon(const PolygonalDomain& domain, int n, int p = 3) {
    if (n < 4 || n % 2 != 0) throw Error(ErrorCode::bad_argument, "points per side must be even and >= 4");
    if (p < 2) throw Error(ErrorCode::bad_argument, "grading exponent must be >= 2");
    BoundaryDiscretization d;
    d.n = n;
    d.p = p;
    for (const auto& poly : domain.polygons) d.components.push_back(discretize_polygon_component(poly, n, p));
    return d;
}

} // namespace plgcir
