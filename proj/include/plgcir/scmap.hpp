#pragma once

// Simply connected building blocks of the Koebe iteration: the interior map of
// a counterclockwise curve onto the unit disk and the exterior map of a
// clockwise curve onto the exterior of the unit disk.

#include "bie.hpp"
#include "circle_fit.hpp"
#include "common.hpp"
#include "discretize.hpp"
#include "geometry.hpp"
#include "spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plgcir {

struct SolverOptions {
    double gmres_tol = 0.5e-12;
    int gmres_maxit = 100;
};

struct SubMap {
    enum class Kind { interior, exterior };
    Kind kind = Kind::interior;
    std::vector<cplx> zeta;       // boundary correspondence, |zeta| = 1
    std::vector<double> mu;
    std::vector<double> dtheta;   // d/dt arg zeta
    cplx base{0.0, 0.0};          // alpha-hat (interior) or beta0 (exterior)

    // exterior kind: f(z) = c z + b + O(1/z)
    double h = 0.0;
    double c = 1.0;
    cplx b{0.0, 0.0};
    double h_residual = 0.0;      // |Im| of the solvability moment
    std::vector<cplx> psi;        // zeta/(eta - beta0) - c

    int gmres_iterations = 0;
    double gmres_residual = 0.0;
};

namespace detail {

inline std::vector<cplx> node_polygon(const BoundaryComponent& curve) { return curve.z; }

/// Midpoint of the first two crossings of the horizontal line through the
/// vertical middle of the curve.
inline std::optional<cplx> median_line_point(const BoundaryComponent& curve) {
    double ymin = curve.z[0].imag(), ymax = ymin;
    for (cplx z : curve.z) {
        ymin = std::min(ymin, z.imag());
        ymax = std::max(ymax, z.imag());
    }
    const double y = 0.5 * (ymin + ymax);
    std::vector<double> xs;
    const std::size_t N = curve.size();
    for (std::size_t k = 0; k < N; ++k) {
        const cplx a = curve.z[k], b = curve.z[(k + 1) % N];
        if ((a.imag() > y) != (b.imag() > y))
            xs.push_back(a.real() + (y - a.imag()) * (b.real() - a.real()) / (b.imag() - a.imag()));
    }
    if (xs.size() < 2) return std::nullopt;
    std::sort(xs.begin(), xs.end());
    return cplx(0.5 * (xs[0] + xs[1]), y);
}

} // namespace detail

/// A point inside the hole bounded by a closed curve: the fitted circle center
/// for nearly circular curves, otherwise the node mean, otherwise the
/// horizontal median-line midpoint.
inline cplx hole_point(const BoundaryComponent& curve) {
    const auto poly = detail::node_polygon(curve);
    const CircleFit fit = fit_circle(curve.z);
    if (fit.deviation < 0.1 && point_in_polygon(fit.center, poly) == Location::inside) return fit.center;
    cplx mean = 0.0;
    for (cplx z : curve.z) mean += z;
    mean /= static_cast<double>(curve.size());
    if (point_in_polygon(mean, poly) == Location::inside) return mean;
    if (auto p = detail::median_line_point(curve); p && point_in_polygon(*p, poly) == Location::inside) return *p;
    throw Error(ErrorCode::bad_argument, "could not find a point inside the hole");
}

namespace detail {

inline GmresResult solve_density(const BoundaryComponent& curve, const KernelConfig& cfg, const SolverOptions& opts) {
    const std::span<const BoundaryComponent> parts(&curve, 1);
    const auto rhs = compute_rhs(parts, cfg);
    const auto corr = corner_corrections(parts, cfg);
    const LinearOperator op = [&](std::span<const double> x) { return apply_I_minus_N(parts, cfg, x, &corr); };
    GmresResult r = gmres_solve(op, rhs, opts.gmres_tol, opts.gmres_maxit);
    if (!r.converged)
        throw Error(ErrorCode::convergence, "GMRES did not converge (" + std::to_string(r.iterations) +
                                                " iterations, residual " + std::to_string(r.residual) + ")");
    return r;
}

inline void fill_correspondence(SubMap& sm, const BoundaryComponent& curve) {
    const std::size_t N = curve.size();
    sm.zeta.resize(N);
    sm.dtheta.resize(N);
    const auto dmu = spectral_derivative(std::span<const double>(sm.mu));
    for (std::size_t k = 0; k < N; ++k) {
        const cplx d = curve.z[k] - sm.base;
        sm.zeta[k] = d / std::abs(d) * std::polar(1.0, sm.mu[k]);
        sm.dtheta[k] = std::imag(curve.dz[k] / d) + dmu[k];
    }
}

} // namespace detail

/// Map of the interior of a counterclockwise curve onto the unit disk with
/// f(base) = 0, f'(base) > 0.
inline SubMap disk_map_bounded(const BoundaryComponent& curve, cplx base, const SolverOptions& opts = {}) {
    if (point_in_polygon(base, curve.z) != Location::inside)
        throw Error(ErrorCode::bad_argument, "interior base point is not inside the curve");
    SubMap sm;
    sm.kind = SubMap::Kind::interior;
    sm.base = base;
    const KernelConfig cfg{KernelConfig::Variant::interior, base};
    GmresResult r = detail::solve_density(curve, cfg, opts);
    sm.mu = std::move(r.x);
    sm.gmres_iterations = r.iterations;
    sm.gmres_residual = r.residual;
    detail::fill_correspondence(sm, curve);
    return sm;
}

/// Map of the exterior of a clockwise curve onto the exterior of the unit disk
/// with f(inf) = inf, f'(inf) = c > 0.
inline SubMap disk_map_unbounded(const BoundaryComponent& curve, const SolverOptions& opts = {}) {
    SubMap sm;
    sm.kind = SubMap::Kind::exterior;
    sm.base = hole_point(curve);
    const KernelConfig cfg{KernelConfig::Variant::exterior, sm.base};
    GmresResult r = detail::solve_density(curve, cfg, opts);
    sm.mu = std::move(r.x);
    sm.gmres_iterations = r.iterations;
    sm.gmres_residual = r.residual;

    const std::size_t N = curve.size();
    const double W = curve.weight();
    const std::span<const BoundaryComponent> parts(&curve, 1);
    const auto gamma = log_distance_data(parts, sm.base);
    const cplx two_pi_i{0.0, two_pi};

    // h is the moment divided by the discrete winding number (-1 for a
    // clockwise curve), so that a discretized circle gives c = 1/r exactly.
    cplx moment = 0.0, winding = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
        const cplx q = W * curve.dz[k] / (curve.z[k] - sm.base);
        moment += cplx(gamma[k], sm.mu[k]) * q;
        winding += q;
    }
    moment /= two_pi_i;
    winding /= two_pi_i;
    sm.h = -moment.real() / winding.real();
    sm.h_residual = std::abs(moment.imag());
    sm.c = std::exp(-sm.h);

    cplx first = 0.0;
    for (std::size_t k = 0; k < N; ++k) first += W * cplx(gamma[k] + sm.h, sm.mu[k]) * curve.dz[k];
    first /= two_pi_i;
    sm.b = sm.c * (-sm.base - first);

    detail::fill_correspondence(sm, curve);
    sm.psi.resize(N);
    for (std::size_t k = 0; k < N; ++k) sm.psi[k] = sm.zeta[k] / (curve.z[k] - sm.base) - sm.c;
    return sm;
}

struct PushResult {
    std::vector<cplx> points;
    std::vector<cplx> derivs;  // input derivatives times the sub-map derivative; empty if none given
    std::vector<cplx> map_derivs;
    std::vector<cplx> map_derivs2;  // f'' at the points, filled when order is 2
};

/// Evaluates a sub-map and its derivative (order 2: also f'') at points off the curve.
inline PushResult submap_push(const SubMap& sm, const BoundaryComponent& curve, std::span<const cplx> points,
                              std::span<const cplx> derivs = {}, int order = 1) {
    order = std::max(order, 1);
    const std::span<const BoundaryComponent> parts(&curve, 1);
    PushResult out;
    if (sm.kind == SubMap::Kind::interior) {
        // f(z) = z + C[zeta - eta](z): near the curve the quadrature error then
        // scales with how far the map is from the identity.
        std::vector<cplx> g(curve.size());
        for (std::size_t k = 0; k < g.size(); ++k) g[k] = sm.zeta[k] - curve.z[k];
        auto r = cauchy_evaluate(parts, g, points, CauchyMode::bounded, order);
        out.points.resize(points.size());
        out.map_derivs.resize(points.size());
        for (std::size_t q = 0; q < points.size(); ++q) {
            out.points[q] = points[q] + r.value[q];
            out.map_derivs[q] = 1.0 + r.deriv[q];
        }
        out.map_derivs2 = std::move(r.deriv2);
    } else {
        auto r = cauchy_evaluate(parts, sm.psi, points, CauchyMode::unbounded, order);
        out.points.resize(points.size());
        out.map_derivs.resize(points.size());
        if (order >= 2) out.map_derivs2.resize(points.size());
        for (std::size_t q = 0; q < points.size(); ++q) {
            const cplx d = points[q] - sm.base;
            out.points[q] = d * (sm.c + r.value[q]);
            out.map_derivs[q] = sm.c + r.value[q] + d * r.deriv[q];
            if (order >= 2) out.map_derivs2[q] = 2.0 * r.deriv[q] + d * r.deriv2[q];
        }
    }
    if (!derivs.empty()) {
        out.derivs.resize(derivs.size());
        for (std::size_t q = 0; q < derivs.size(); ++q) out.derivs[q] = derivs[q] * out.map_derivs[q];
    }
    return out;
}

} // namespace plgcir
