#pragma once

// Koebe's iteration: map one boundary component at a time onto a circle,
// pushing the rest of the boundary through each simply connected map, until
// every image component is a circle.

#include "circle_fit.hpp"
#include "common.hpp"
#include "discretize.hpp"
#include "geometry.hpp"
#include "scmap.hpp"
#include "spectral.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plgcir {

struct KoebeOptions {
    double koebe_tol = 1e-12;
    int koebe_maxit = 100;
    SolverOptions solver;
};

enum class Normalization { eq1, eq2, eq3, eq4 };

inline const char* to_string(Normalization n) {
    switch (n) {
    case Normalization::eq1: return "eq1";
    case Normalization::eq2: return "eq2";
    case Normalization::eq3: return "eq3";
    case Normalization::eq4: return "eq4";
    }
    return "eq1";
}

inline Normalization parse_normalization(const std::string& s) {
    if (s == "eq1") return Normalization::eq1;
    if (s == "eq2") return Normalization::eq2;
    if (s == "eq3") return Normalization::eq3;
    if (s == "eq4") return Normalization::eq4;
    throw Error(ErrorCode::bad_argument, "unknown normalization '" + s + "'");
}

struct KoebeResult {
    std::vector<BoundaryComponent> image;  // Z, Z', Z'' on the parameter grid of each component
    CircularDomain circles;
    bool bounded = true;
    cplx alpha_image{0.0, 0.0};
    double a_tot = 1.0;  // unbounded runs: composite map ~ a_tot z + b_tot at infinity
    cplx b_tot{0.0, 0.0};

    int cycles = 0;
    bool converged = false;
    std::vector<double> deviation_history;
    std::vector<int> gmres_iterations;
    std::vector<double> gmres_residuals;
    std::vector<double> h_residuals;

    Normalization normalization = Normalization::eq1;
    cplx post_sigma{1.0, 0.0};  // w -> sigma w + tau after canonical evaluation
    cplx post_tau{0.0, 0.0};

    double final_deviation() const { return deviation_history.empty() ? 0.0 : deviation_history.back(); }
};

namespace detail {

inline double max_deviation(const std::vector<BoundaryComponent>& image) {
    double dev = 0.0;
    for (const auto& c : image) dev = std::max(dev, fit_circle(c.z).deviation);
    return dev;
}

inline void push_others(const SubMap& sm, const BoundaryComponent& curve, std::vector<BoundaryComponent>& image,
                        std::size_t skip) {
    for (std::size_t k = 0; k < image.size(); ++k) {
        if (k == skip) continue;
        auto& c = image[k];
        auto r = submap_push(sm, curve, c.z, c.dz, 2);
        // Z'' by the chain rule. A spectral derivative of Z' would smear the
        // kink Z' has at a corner, and the kernel divides by the tiny |Z'| there.
        for (std::size_t i = 0; i < c.size(); ++i)
            c.d2z[i] = r.map_derivs2[i] * c.dz[i] * c.dz[i] + r.map_derivs[i] * c.d2z[i];
        c.z = std::move(r.points);
        c.dz = std::move(r.derivs);
    }
}

// Once the outer image is close to a circle, the interior map is close to the
// disk automorphism sending alpha to 0. Applying that Moebius map exactly first
// leaves only a small correction for the integral equation, so the quadrature
// error shrinks with the deviation instead of staying at the level of a full
// Moebius map on the crowded grid.
inline void premap_outer(std::vector<BoundaryComponent>& image, cplx& alpha) {
    const CircleFit fit = fit_circle(image.back().z);
    if (!(fit.deviation < 0.05)) return;
    const cplx a = (alpha - fit.center) / fit.radius;
    if (!(std::abs(a) < 0.9)) return;
    const double s = 1.0 / fit.radius;
    for (auto& c : image) {
        for (std::size_t r = 0; r < c.size(); ++r) {
            const cplx u = (c.z[r] - fit.center) * s;
            const cplx q = 1.0 - std::conj(a) * u;
            const cplx d1 = (1.0 - std::norm(a)) / (q * q);
            const cplx d2 = 2.0 * std::conj(a) * d1 / q;
            const cplx du = s * c.dz[r];
            c.z[r] = (u - a) / q;
            c.d2z[r] = d2 * du * du + d1 * s * c.d2z[r];
            c.dz[r] = d1 * du;
        }
    }
    alpha = 0.0;
}

inline void replace_by_circle(const SubMap& sm, BoundaryComponent& c) {
    // Z'' = (i theta'' - theta'^2) zeta. Errors in theta'' only touch Re(Z''/Z'),
    // which the kernel does not use, and the chain rule keeps it that way.
    const auto d2theta = spectral_derivative(std::span<const double>(sm.dtheta));
    c.z = sm.zeta;
    c.grading = 0;  // smooth from now on; no corner corrections
    for (std::size_t r = 0; r < c.size(); ++r) {
        c.dz[r] = I * sm.dtheta[r] * sm.zeta[r];
        c.d2z[r] = cplx(-sm.dtheta[r] * sm.dtheta[r], d2theta[r]) * sm.zeta[r];
    }
}

} // namespace detail

/// Runs Koebe cycles. Inner components (all components for unbounded domains)
/// are visited first with exterior maps, then the outer component with the
/// interior map based at the current image of alpha.
inline KoebeResult koebe_iterate(const BoundaryDiscretization& disc, const PolygonalDomain& domain,
                                 const KoebeOptions& opts = {}) {
    const std::size_t m = disc.components.size();
    if (m == 0 || m != domain.size()) throw Error(ErrorCode::bad_argument, "discretization does not match domain");
    if (!(opts.koebe_tol > 0.0) || opts.koebe_maxit < 1) throw Error(ErrorCode::bad_argument, "invalid Koebe options");

    KoebeResult kr;
    kr.bounded = domain.bounded;
    kr.image = disc.components;
    kr.alpha_image = domain.alpha;
    const std::size_t inner = domain.bounded ? m - 1 : m;

    for (int cycle = 1; cycle <= opts.koebe_maxit; ++cycle) {
        for (std::size_t j = 0; j < m; ++j) {
            try {
                BoundaryComponent curve = kr.image[j];
                SubMap sm;
                if (j < inner) {
                    sm = disk_map_unbounded(curve, opts.solver);
                    kr.h_residuals.push_back(sm.h_residual);
                    if (domain.bounded) {
                        const std::vector<cplx> a{kr.alpha_image};
                        kr.alpha_image = submap_push(sm, curve, a).points[0];
                    } else {
                        kr.a_tot *= sm.c;
                        kr.b_tot = sm.c * kr.b_tot + sm.b;
                    }
                } else {
                    detail::premap_outer(kr.image, kr.alpha_image);
                    curve = kr.image[j];
                    sm = disk_map_bounded(curve, kr.alpha_image, opts.solver);
                    kr.alpha_image = 0.0;
                }
                kr.gmres_iterations.push_back(sm.gmres_iterations);
                kr.gmres_residuals.push_back(sm.gmres_residual);
                detail::push_others(sm, curve, kr.image, j);
                detail::replace_by_circle(sm, kr.image[j]);
            } catch (const Error& e) {
                throw Error(e.code(), "component " + std::to_string(j + 1) + ", cycle " + std::to_string(cycle) +
                                          ": " + e.what());
            }
        }
        kr.cycles = cycle;
        const double dev = detail::max_deviation(kr.image);
        kr.deviation_history.push_back(dev);
        if (dev < opts.koebe_tol) {
            kr.converged = true;
            break;
        }
    }

    kr.circles.bounded = domain.bounded;
    for (const auto& c : kr.image) {
        const CircleFit f = fit_circle(c.z);
        kr.circles.centers.push_back(f.center);
        kr.circles.radii.push_back(f.radius);
    }
    return kr;
}

namespace detail {

inline void transform_image(KoebeResult& kr, cplx scale, cplx shift) {
    for (auto& c : kr.image) {
        for (auto& z : c.z) z = scale * z + shift;
        for (auto& z : c.dz) z *= scale;
        for (auto& z : c.d2z) z *= scale;
    }
    for (std::size_t j = 0; j < kr.circles.centers.size(); ++j) {
        kr.circles.centers[j] = scale * kr.circles.centers[j] + shift;
        kr.circles.radii[j] *= std::abs(scale);
    }
    kr.alpha_image = scale * kr.alpha_image + shift;
}

/// Image of vertex k of component j by trigonometric interpolation of Z.
inline cplx vertex_image(const BoundaryComponent& c, std::size_t k) {
    const std::vector<double> t{c.corners.at(k)};
    return trig_interpolate(c.z, t)[0];
}

} // namespace detail

/// Applies the requested normalization. eq1/eq2 rotate, eq3 removes the affine
/// behaviour at infinity, eq4 adds a post-map sending the last circle to the
/// unit circle and beta to 1.
inline void normalize(KoebeResult& kr, const BoundaryDiscretization& disc, const PolygonalDomain& domain,
                      Normalization cond) {
    const bool wants_bounded = cond == Normalization::eq1 || cond == Normalization::eq2;
    if (wants_bounded != domain.bounded)
        throw Error(ErrorCode::bad_argument, std::string("normalization ") + to_string(cond) +
                                                 (domain.bounded ? " needs an unbounded domain" : " needs a bounded domain"));
    const bool wants_beta = cond == Normalization::eq2 || cond == Normalization::eq4;
    if (wants_beta && !domain.beta) throw Error(ErrorCode::beta_invalid, "normalization needs a beta vertex");

    kr.normalization = cond;
    kr.post_sigma = 1.0;
    kr.post_tau = 0.0;
    switch (cond) {
    case Normalization::eq1: {
        std::vector<cplx> zeta;
        for (const auto& c : kr.image) zeta.insert(zeta.end(), c.z.begin(), c.z.end());
        const std::vector<cplx> a{domain.alpha};
        const cplx d = cauchy_evaluate(disc.components, zeta, a, CauchyMode::bounded, true).deriv[0];
        detail::transform_image(kr, std::conj(d) / std::abs(d), 0.0);
        break;
    }
    case Normalization::eq2: {
        const cplx w = detail::vertex_image(kr.image.back(), *domain.beta);
        detail::transform_image(kr, std::conj(w) / std::abs(w), 0.0);
        break;
    }
    case Normalization::eq3:
    case Normalization::eq4: {
        detail::transform_image(kr, 1.0 / kr.a_tot, -kr.b_tot / kr.a_tot);
        kr.a_tot = 1.0;
        kr.b_tot = 0.0;
        if (cond == Normalization::eq4) {
            const cplx c = kr.circles.centers.back();
            const double r = kr.circles.radii.back();
            const cplx w = detail::vertex_image(kr.image.back(), *domain.beta) - c;
            kr.post_sigma = std::conj(w) / std::abs(w) / r;
            kr.post_tau = -kr.post_sigma * c;
        }
        break;
    }
    }
}

} // namespace plgcir
