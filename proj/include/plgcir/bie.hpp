#pragma once

// Nyström discretization of the generalized Neumann kernel
//
//   N(s,t) = (1/pi) Im[ A(s)/A(t) * eta'(t) / (eta(t) - eta(s)) ]
//   M(s,t) = (1/pi) Re[ A(s)/A(t) * eta'(t) / (eta(t) - eta(s)) ]
//
// with the trapezoidal rule on each component, plus GMRES and Cauchy-integral
// evaluators. All sums are direct O(N^2).

#include "common.hpp"
#include "discretize.hpp"
#include "parallel.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <span>
#include <tuple>
#include <vector>

namespace plgcir {

struct KernelConfig {
    enum class Variant { interior, exterior };
    Variant variant = Variant::interior;
    cplx base{0.0, 0.0};  // interior base point, or the hole point for exterior right-hand sides

    cplx A(cplx z) const { return variant == Variant::interior ? z - base : cplx(1.0, 0.0); }
    cplx dA(cplx dz) const { return variant == Variant::interior ? dz : cplx(0.0, 0.0); }
};

namespace detail {

struct FlatNodes {
    std::vector<cplx> z, dz, d2z;
    std::vector<double> w;
    std::vector<std::size_t> comp;    // component index per node
    std::vector<std::size_t> local;   // index within component
    std::vector<std::size_t> offset;  // component offsets
    std::vector<std::size_t> sizes;

    explicit FlatNodes(std::span<const BoundaryComponent> parts) {
        std::size_t off = 0;
        for (std::size_t c = 0; c < parts.size(); ++c) {
            const auto& p = parts[c];
            offset.push_back(off);
            sizes.push_back(p.size());
            for (std::size_t r = 0; r < p.size(); ++r) {
                z.push_back(p.z[r]);
                dz.push_back(p.dz[r]);
                d2z.push_back(p.d2z.empty() ? cplx(0.0) : p.d2z[r]);
                w.push_back(p.weight());
                comp.push_back(c);
                local.push_back(r);
            }
            off += p.size();
        }
    }

    std::size_t size() const { return z.size(); }
};

// conj(d)/|d|^2 without the library's overflow-guarded division
inline cplx reciprocal(cplx d) {
    const double n = d.real() * d.real() + d.imag() * d.imag();
    return {d.real() / n, -d.imag() / n};
}

/// Lagrange basis at x for the nodes 0, 1, ..., q-1.
inline std::vector<double> lagrange_weights(double x, int q) {
    std::vector<double> w(static_cast<std::size_t>(q), 1.0);
    for (int j = 0; j < q; ++j)
        for (int k = 0; k < q; ++k)
            if (k != j) w[static_cast<std::size_t>(j)] *= (x - k) / static_cast<double>(j - k);
    return w;
}

// Corner corrections.
//
// Seen from a node half a step away from a corner, the kernel across the
// corner varies on the scale of that step, so the trapezoidal sum over the
// neighbouring side has an O(1) error that does not shrink with n. For rows
// near each corner, the part of the other side weighted by a smooth cut-off
// phi (1 at the corner, 0 a few dozen steps away) is integrated on Gauss
// panels instead. A hard cut-off would leave an Euler-Maclaurin end term at
// the cut, as large as the error removed.
//
// The density is interpolated in the parameter. Positions are interpolated in
// the ungraded side coordinate u, in which a polygon side, or its image under
// a map analytic at the corner, is smooth; in the graded parameter the
// interpolation error would swamp the tiny distances next to the corner.
// Each entry adds w_n (to N) and w_m (to M) times the density at node j to row i.
struct CornerEntry {
    std::size_t i, j;
    double w_n, w_m;
};

inline constexpr double corner_cut = 12.0;   // cut-off centre, in steps
inline constexpr double corner_width = 2.0;  // cut-off width, in steps
inline constexpr int corner_stencil = 12;
inline constexpr double corner_min_turn = 1e-3;  // smaller tangent turns count as smooth

inline const std::vector<std::pair<double, double>>& gauss16() {
    static const std::vector<std::pair<double, double>> rule = [] {
        using G = boost::math::quadrature::gauss<double, 16>;
        std::vector<std::pair<double, double>> r;
        for (std::size_t k = 0; k < G::abscissa().size(); ++k) {
            r.emplace_back(-G::abscissa()[k], G::weights()[k]);
            r.emplace_back(G::abscissa()[k], G::weights()[k]);
        }
        return r;
    }();
    return rule;
}

/// Lagrange basis at x for arbitrary nodes.
inline std::vector<double> lagrange_weights(double x, std::span<const double> nodes) {
    std::vector<double> w(nodes.size(), 1.0);
    for (std::size_t j = 0; j < nodes.size(); ++j)
        for (std::size_t k = 0; k < nodes.size(); ++k)
            if (k != j) w[j] *= (x - nodes[k]) / (nodes[j] - nodes[k]);
    return w;
}

inline std::vector<CornerEntry> corner_corrections(const FlatNodes& nodes, std::span<const BoundaryComponent> parts,
                                                   const KernelConfig& cfg) {
    std::vector<CornerEntry> out;
    for (std::size_t c = 0; c < parts.size(); ++c) {
        const auto& part = parts[c];
        const std::size_t sides = part.corners.size();
        if (sides == 0 || part.grading < 2 || part.size() % sides != 0) continue;
        const long n = static_cast<long>(part.size() / sides);
        const long N = static_cast<long>(part.size());
        const int q = static_cast<int>(std::min<long>(corner_stencil, n));
        const double h = part.weight();
        const double ell = static_cast<double>(sides);
        const std::size_t off = nodes.offset[c];
        // the cut-off must be gone well before the far end of the side
        const double cut = std::min(corner_cut, 0.25 * static_cast<double>(n));
        const double width = std::min(corner_width, cut / 6.0);
        const long srcs = std::min<long>(n, static_cast<long>(std::ceil(cut + 6.0 * width)));
        // every row on the two sides: the kink at the corner costs the plain sum
        // O(h^4 / d^4) at distance d, so far rows gain too
        const long rows = n;
        auto phi = [&](double tau) { return 0.5 * std::erfc((tau / h - cut) / width); };
        // side coordinate u in [0, 1] and du/dtau at parameter distance tau from the corner
        auto side_u = [&](double tau) {
            const GradingValue g = kress_grading(ell * tau, part.grading);
            return std::pair{g.w / two_pi, ell * g.dw / two_pi};
        };

        struct Fine {
            double tau, weight, u, du;
            long start_t, start_u;  // first slot of each stencil
            std::vector<double> lt, lu;
        };
        std::vector<double> slot_u(static_cast<std::size_t>(n)), slot_du(static_cast<std::size_t>(n));
        for (long r = 0; r < n; ++r)
            std::tie(slot_u[static_cast<std::size_t>(r)], slot_du[static_cast<std::size_t>(r)]) =
                side_u((static_cast<double>(r) + 0.5) * h);

        std::vector<Fine> fine;
        std::vector<double> breaks{0.0, h / 32, h / 16, h / 8, h / 4, h / 2};
        for (long r = 1; r <= srcs; ++r) breaks.push_back(static_cast<double>(r) * h);
        for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
            const double lo = breaks[b], hi = breaks[b + 1];
            for (const auto& [x, w] : gauss16()) {
                Fine f;
                f.tau = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x;
                f.weight = 0.5 * (hi - lo) * w * phi(f.tau);
                std::tie(f.u, f.du) = side_u(f.tau);
                const double slot = f.tau / h - 0.5;
                f.start_t = std::clamp<long>(static_cast<long>(std::floor(slot)) - q / 2 + 1, 0, n - q);
                f.lt = lagrange_weights(slot - static_cast<double>(f.start_t), q);
                f.start_u = f.start_t;
                f.lu = lagrange_weights(f.u, std::span<const double>(slot_u).subspan(static_cast<std::size_t>(f.start_u),
                                                                                   static_cast<std::size_t>(q)));
                fine.push_back(std::move(f));
            }
        }

        for (std::size_t k = 0; k < sides; ++k) {
            const long corner = static_cast<long>(k) * n;  // first node after the corner
            // slot r on the side after the corner is node corner + r, before it corner - 1 - r
            auto index = [&](bool after, long r) {
                const long g = after ? corner + r : corner - 1 - r;
                return off + static_cast<std::size_t>(((g % N) + N) % N);
            };
            // (nearly) straight angles need nothing
            const double turn = std::abs(std::arg(nodes.dz[index(true, 0)] / nodes.dz[index(false, 0)]));
            if (!(turn > corner_min_turn)) continue;

            for (int side = 0; side < 2; ++side) {
                const bool row_after = side == 0;
                const bool src_after = !row_after;
                const cplx ref = nodes.z[index(src_after, 0)];
                // positions relative to ref, and d/dtau, on the source side
                std::vector<cplx> fz(fine.size()), fdz(fine.size());
                for (std::size_t f = 0; f < fine.size(); ++f) {
                    cplx z = 0.0, dzdu = 0.0;
                    for (int s = 0; s < q; ++s) {
                        const long slot = fine[f].start_u + s;
                        const std::size_t g = index(src_after, slot);
                        const double l = fine[f].lu[static_cast<std::size_t>(s)];
                        z += l * (nodes.z[g] - ref);
                        // dz/dt over du/dtau; the sign flip on the side before the corner cancels below
                        dzdu += l * nodes.dz[g] / slot_du[static_cast<std::size_t>(slot)];
                    }
                    fz[f] = z;
                    fdz[f] = dzdu * fine[f].du;
                }
                for (long r = 0; r < rows; ++r) {
                    const std::size_t i = index(row_after, r);
                    const cplx zi = nodes.z[i], Ai = cfg.A(zi), di = zi - ref;
                    std::vector<std::pair<double, double>> acc(static_cast<std::size_t>(n), {0.0, 0.0});
                    for (std::size_t f = 0; f < fine.size(); ++f) {
                        const cplx kern =
                            Ai / cfg.A(ref + fz[f]) * fdz[f] * reciprocal(fz[f] - di) * (fine[f].weight / pi);
                        for (int s = 0; s < q; ++s) {
                            const double l = fine[f].lt[static_cast<std::size_t>(s)];
                            auto& e = acc[static_cast<std::size_t>(fine[f].start_t + s)];
                            e.first += l * kern.imag();
                            e.second += l * kern.real();
                        }
                    }
                    for (long r2 = 0; r2 < srcs; ++r2) {
                        const std::size_t j = index(src_after, r2);
                        const double wt = h * phi((static_cast<double>(r2) + 0.5) * h);
                        const cplx kern = Ai / cfg.A(nodes.z[j]) * nodes.dz[j] * reciprocal(nodes.z[j] - zi) * (wt / pi);
                        auto& e = acc[static_cast<std::size_t>(r2)];
                        e.first -= kern.imag();
                        e.second -= kern.real();
                    }
                    for (long r2 = 0; r2 < n; ++r2) {
                        const auto& e = acc[static_cast<std::size_t>(r2)];
                        if (e.first != 0.0 || e.second != 0.0) out.push_back({i, index(src_after, r2), e.first, e.second});
                    }
                }
            }
        }
    }
    return out;
}

} // namespace detail

/// Diagonal N(t,t) = (1/pi) Im[eta''/(2 eta') - A'/A].
inline double neumann_diagonal(cplx z, cplx dz, cplx d2z, const KernelConfig& cfg) {
    return std::imag(d2z / (2.0 * dz) - cfg.dA(dz) / cfg.A(z)) / pi;
}

/// Corner corrections for the given curve and kernel. They only depend on the
/// geometry, so iterative solvers compute them once and pass them in.
inline std::vector<detail::CornerEntry> corner_corrections(std::span<const BoundaryComponent> parts,
                                                           const KernelConfig& cfg) {
    return detail::corner_corrections(detail::FlatNodes(parts), parts, cfg);
}

/// Matrix-free (I - N) mu.
inline std::vector<double> apply_I_minus_N(std::span<const BoundaryComponent> parts, const KernelConfig& cfg,
                                           std::span<const double> mu,
                                           const std::vector<detail::CornerEntry>* corrections = nullptr) {
    const detail::FlatNodes nodes(parts);
    const std::size_t n = nodes.size();
    if (mu.size() != n) throw Error(ErrorCode::bad_argument, "density length does not match node count");
    std::vector<cplx> A(n), q(n);
    std::vector<double> diag(n);
    for (std::size_t j = 0; j < n; ++j) {
        A[j] = cfg.A(nodes.z[j]);
        q[j] = nodes.w[j] * nodes.dz[j] / A[j] * mu[j];
        diag[j] = nodes.w[j] * neumann_diagonal(nodes.z[j], nodes.dz[j], nodes.d2z[j], cfg);
    }
    std::vector<double> out(n);
    parallel_for(n, [&](std::size_t i) {
        const cplx zi = nodes.z[i];
        double sr = 0.0, si = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dr = nodes.z[j].real() - zi.real();
            const double di = nodes.z[j].imag() - zi.imag();
            const double inv = 1.0 / (dr * dr + di * di);
            // q_j / d = q_j * conj(d) / |d|^2
            sr += (q[j].real() * dr + q[j].imag() * di) * inv;
            si += (q[j].imag() * dr - q[j].real() * di) * inv;
        }
        const double im = A[i].real() * si + A[i].imag() * sr;
        out[i] = mu[i] - im / pi - diag[i] * mu[i];
    });
    const auto local = corrections ? std::vector<detail::CornerEntry>{} : detail::corner_corrections(nodes, parts, cfg);
    for (const auto& e : corrections ? *corrections : local) out[e.i] -= e.w_n * mu[e.j];
    return out;
}

/// Dense (I - N), assembled entry by entry. Test oracle for the matrix-free path.
inline std::vector<std::vector<double>> assemble_I_minus_N(std::span<const BoundaryComponent> parts,
                                                           const KernelConfig& cfg) {
    const detail::FlatNodes nodes(parts);
    const std::size_t n = nodes.size();
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double kernel;
            if (i == j)
                kernel = neumann_diagonal(nodes.z[i], nodes.dz[i], nodes.d2z[i], cfg);
            else
                kernel = std::imag(cfg.A(nodes.z[i]) / cfg.A(nodes.z[j]) * nodes.dz[j] / (nodes.z[j] - nodes.z[i])) / pi;
            m[i][j] = (i == j ? 1.0 : 0.0) - nodes.w[j] * kernel;
        }
    for (const auto& e : detail::corner_corrections(nodes, parts, cfg)) m[e.i][e.j] -= e.w_n;
    return m;
}

/// M applied to a real density gamma with parameter derivative dgamma.
///
/// Each component satisfies int_{Gamma_c} M(s,t) dt = 0 for s on Gamma_c, so
/// the same-component sum is taken over gamma(t) - gamma(s); that integrand is
/// bounded, with diagonal limit gamma'(s)/pi. This stays accurate next to
/// graded corners, where a cot-split of the singularity does not.
inline std::vector<double> apply_M(std::span<const BoundaryComponent> parts, const KernelConfig& cfg,
                                   std::span<const double> gamma, std::span<const double> dgamma) {
    const detail::FlatNodes nodes(parts);
    const std::size_t n = nodes.size();
    if (gamma.size() != n || dgamma.size() != n)
        throw Error(ErrorCode::bad_argument, "density length does not match node count");
    std::vector<cplx> q(n);
    for (std::size_t j = 0; j < n; ++j) q[j] = nodes.w[j] * nodes.dz[j] / cfg.A(nodes.z[j]);

    std::vector<double> out(n);
    parallel_for(n, [&](std::size_t i) {
        const cplx zi = nodes.z[i];
        const std::size_t ci = nodes.comp[i];
        double sr = 0.0, si = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double g = nodes.comp[j] == ci ? gamma[j] - gamma[i] : gamma[j];
            const double dr = nodes.z[j].real() - zi.real();
            const double di = nodes.z[j].imag() - zi.imag();
            const double inv = g / (dr * dr + di * di);
            sr += (q[j].real() * dr + q[j].imag() * di) * inv;
            si += (q[j].imag() * dr - q[j].real() * di) * inv;
        }
        const cplx a = cfg.A(zi);
        out[i] = (a.real() * sr - a.imag() * si) / pi + nodes.w[i] * dgamma[i] / pi;
    });
    for (const auto& e : detail::corner_corrections(nodes, parts, cfg)) out[e.i] += e.w_m * (gamma[e.j] - gamma[e.i]);
    return out;
}

/// gamma(t) = -log|eta(t) - base|.
inline std::vector<double> log_distance_data(std::span<const BoundaryComponent> parts, cplx base) {
    std::vector<double> g;
    for (const auto& p : parts)
        for (cplx z : p.z) {
            const double d = std::abs(z - base);
            if (!(d > 0.0)) throw Error(ErrorCode::bad_argument, "base point lies on the curve");
            g.push_back(-std::log(d));
        }
    return g;
}

/// Right-hand side -M gamma with gamma = -log|eta - cfg.base|.
inline std::vector<double> compute_rhs(std::span<const BoundaryComponent> parts, const KernelConfig& cfg) {
    const auto gamma = log_distance_data(parts, cfg.base);
    std::vector<double> dgamma;
    for (const auto& p : parts)
        for (std::size_t r = 0; r < p.size(); ++r) dgamma.push_back(-std::real(p.dz[r] / (p.z[r] - cfg.base)));
    auto m = apply_M(parts, cfg, gamma, dgamma);
    for (auto& v : m) v = -v;
    return m;
}

struct GmresResult {
    std::vector<double> x;
    int iterations = 0;
    double residual = 0.0;  // relative residual ||b - Ax|| / ||b||
    bool converged = false;
    bool breakdown = false;
};

using LinearOperator = std::function<std::vector<double>(std::span<const double>)>;

/// Unrestarted GMRES with modified Gram-Schmidt and Givens rotations, x0 = 0.
inline GmresResult gmres_solve(const LinearOperator& matvec, std::span<const double> rhs, double tol = 0.5e-12,
                               int maxit = 100) {
    const std::size_t n = rhs.size();
    GmresResult res;
    res.x.assign(n, 0.0);
    const double beta = std::sqrt(std::inner_product(rhs.begin(), rhs.end(), rhs.begin(), 0.0));
    if (beta == 0.0) {
        res.converged = true;
        return res;
    }
    const int kmax = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(maxit), n));
    std::vector<std::vector<double>> V;
    V.reserve(static_cast<std::size_t>(kmax) + 1);
    V.emplace_back(rhs.begin(), rhs.end());
    for (auto& v : V[0]) v /= beta;

    std::vector<std::vector<double>> H;  // columns of the Hessenberg matrix, each of length k+2
    std::vector<double> cs, sn, g{beta};
    int k = 0;
    double rel = 1.0;
    for (; k < kmax; ++k) {
        std::vector<double> w = matvec(V[static_cast<std::size_t>(k)]);
        std::vector<double> h(static_cast<std::size_t>(k) + 2, 0.0);
        for (int j = 0; j <= k; ++j) {
            const auto& vj = V[static_cast<std::size_t>(j)];
            const double hj = std::inner_product(w.begin(), w.end(), vj.begin(), 0.0);
            h[static_cast<std::size_t>(j)] = hj;
            for (std::size_t i = 0; i < n; ++i) w[i] -= hj * vj[i];
        }
        const double hnext = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
        h[static_cast<std::size_t>(k) + 1] = hnext;

        for (int j = 0; j < k; ++j) {
            const double a = h[static_cast<std::size_t>(j)];
            const double b = h[static_cast<std::size_t>(j) + 1];
            h[static_cast<std::size_t>(j)] = cs[static_cast<std::size_t>(j)] * a + sn[static_cast<std::size_t>(j)] * b;
            h[static_cast<std::size_t>(j) + 1] = -sn[static_cast<std::size_t>(j)] * a + cs[static_cast<std::size_t>(j)] * b;
        }
        const double a = h[static_cast<std::size_t>(k)];
        const double b = h[static_cast<std::size_t>(k) + 1];
        const double r = std::hypot(a, b);
        cs.push_back(r == 0.0 ? 1.0 : a / r);
        sn.push_back(r == 0.0 ? 0.0 : b / r);
        h[static_cast<std::size_t>(k)] = r;
        h[static_cast<std::size_t>(k) + 1] = 0.0;
        g.push_back(-sn.back() * g[static_cast<std::size_t>(k)]);
        g[static_cast<std::size_t>(k)] *= cs.back();
        H.push_back(std::move(h));

        rel = std::abs(g[static_cast<std::size_t>(k) + 1]) / beta;
        if (rel <= tol) {
            ++k;
            res.converged = true;
            break;
        }
        if (hnext <= 1e-14 * beta) {
            ++k;
            res.breakdown = true;
            break;
        }
        V.push_back(std::move(w));
        for (auto& v : V.back()) v /= hnext;
    }

    // back substitution for the k x k upper-triangular system
    std::vector<double> y(static_cast<std::size_t>(k), 0.0);
    for (int i = k - 1; i >= 0; --i) {
        double s = g[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j) s -= H[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)];
        y[static_cast<std::size_t>(i)] = s / H[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    }
    for (int j = 0; j < k; ++j)
        for (std::size_t i = 0; i < n; ++i) res.x[i] += y[static_cast<std::size_t>(j)] * V[static_cast<std::size_t>(j)][i];

    const auto ax = matvec(res.x);
    double rr = 0.0;
    for (std::size_t i = 0; i < n; ++i) rr += (rhs[i] - ax[i]) * (rhs[i] - ax[i]);
    res.residual = std::sqrt(rr) / beta;
    res.iterations = k;
    if (res.breakdown && res.residual <= std::max(tol, 1e-13)) res.converged = true;
    return res;
}

enum class CauchyMode { bounded, unbounded };

struct CauchyResult {
    std::vector<cplx> value;
    std::vector<cplx> deriv;
    std::vector<cplx> deriv2;       // filled when order >= 2
    std::vector<std::size_t> near;  // targets closer than delta to the node polyline
};

namespace detail {

inline double polyline_distance(std::span<const BoundaryComponent> parts, cplx z) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& p : parts) {
        const std::size_t N = p.size();
        for (std::size_t k = 0; k < N; ++k) {
            const cplx a = p.z[k];
            const cplx ab = p.z[(k + 1) % N] - a;
            const double nab = std::norm(ab);
            const double t = nab > 0.0 ? std::clamp(std::real((z - a) * std::conj(ab)) / nab, 0.0, 1.0) : 0.0;
            d = std::min(d, std::abs(z - (a + t * ab)));
        }
    }
    return d;
}

// Near-curve refinement. A target closer than refine_reach local node spacings
// to a component is summed over that component resampled at K times the node
// density, with positions, derivatives and data interpolated by local
// Lagrange polynomials on the uniform parameter grid.
inline constexpr double refine_reach = 6.0;
inline constexpr int refine_max_factor = 64;
inline constexpr int refine_stencil = 16;

struct FineGrid {
    std::vector<cplx> z, a, ag;  // positions, weights W/K * eta', weights times data
};

inline FineGrid upsample(std::span<const cplx> z, std::span<const cplx> dz, std::span<const cplx> g, double W, int K) {
    const std::size_t N = z.size();
    const int q = static_cast<int>(std::min<std::size_t>(refine_stencil, N));
    FineGrid f;
    f.z.resize(N * static_cast<std::size_t>(K));
    f.a.resize(f.z.size());
    f.ag.resize(f.z.size());
    for (int i = 0; i < K; ++i) {
        // fine point K r + i sits at (r + u) in node units, u in (-1/2, 1/2)
        const double u = (i + 0.5) / K - 0.5;
        const int shift = u < 0.0 ? -1 : 0;
        const double x = (q / 2 - 1) + (u - shift);  // position inside the stencil
        const auto lw = lagrange_weights(x, q);
        for (std::size_t r = 0; r < N; ++r) {
            cplx zz = 0.0, dd = 0.0, gg = 0.0;
            for (int j = 0; j < q; ++j) {
                const long idx = static_cast<long>(r) + shift - (q / 2 - 1) + j;
                const std::size_t k = static_cast<std::size_t>(((idx % static_cast<long>(N)) + static_cast<long>(N)) %
                                                               static_cast<long>(N));
                zz += lw[static_cast<std::size_t>(j)] * z[k];
                dd += lw[static_cast<std::size_t>(j)] * dz[k];
                gg += lw[static_cast<std::size_t>(j)] * g[k];
            }
            const std::size_t m = r * static_cast<std::size_t>(K) + static_cast<std::size_t>(i);
            f.z[m] = zz;
            f.a[m] = (W / K) * dd;
            f.ag[m] = f.a[m] * gg;
        }
    }
    return f;
}

class FineCache {
public:
    FineCache(const FlatNodes& nodes, std::span<const cplx> g) : nodes_(nodes), g_(g), grids_(nodes.sizes.size()) {}

    const FineGrid& get(std::size_t c, int K) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto& slot = grids_[c][K];
        if (!slot) {
            const std::size_t off = nodes_.offset[c], N = nodes_.sizes[c];
            slot = std::make_unique<FineGrid>(upsample(std::span<const cplx>(nodes_.z).subspan(off, N),
                                                       std::span<const cplx>(nodes_.dz).subspan(off, N),
                                                       g_.subspan(off, N), nodes_.w[off], K));
        }
        return *slot;
    }

private:
    const FlatNodes& nodes_;
    std::span<const cplx> g_;
    std::vector<std::map<int, std::unique_ptr<FineGrid>>> grids_;
    std::mutex mutex_;
};

struct Sums {
    cplx sg{0.0}, s1{0.0}, sg2{0.0}, s12{0.0}, sg3{0.0}, s13{0.0};
    Sums& operator+=(const Sums& o) {
        sg += o.sg;
        s1 += o.s1;
        sg2 += o.sg2;
        s12 += o.s12;
        sg3 += o.sg3;
        s13 += o.s13;
        return *this;
    }
};

inline void accumulate(Sums& s, cplx a, cplx ag, cplx d, int order) {
    const cplx r = reciprocal(d);
    s.sg += ag * r;
    s.s1 += a * r;
    if (order >= 1) {
        const cplx r2 = r * r;
        s.sg2 += ag * r2;
        s.s12 += a * r2;
        if (order >= 2) {
            const cplx r3 = r2 * r;
            s.sg3 += ag * r3;
            s.s13 += a * r3;
        }
    }
}

} // namespace detail

/// Cauchy integral of boundary data g (concatenated over components).
///
/// bounded:   f(z) = sum a_k g_k/(eta_k - z) / sum a_k/(eta_k - z),  a_k = W eta'_k
/// unbounded: f(z) = C(z) / (1 + D(z)), C and D the discrete Cauchy integrals
///            of g and of 1; exact identity for data with g(inf) = 0.
///
/// Derivatives (order 1 or 2) are the exact derivatives of these rational
/// representations.
/// With refine set, targets close to a component are summed over a locally
/// interpolated finer grid of that component.
inline CauchyResult cauchy_evaluate(std::span<const BoundaryComponent> parts, std::span<const cplx> g,
                                    std::span<const cplx> targets, CauchyMode mode, int order = 1,
                                    double delta = 0.0, bool refine = true) {
    const bool with_deriv = order >= 1;
    const detail::FlatNodes nodes(parts);
    const std::size_t n = nodes.size();
    if (g.size() != n) throw Error(ErrorCode::bad_argument, "boundary data length does not match node count");
    std::vector<cplx> a(n), ag(n);
    for (std::size_t k = 0; k < n; ++k) {
        a[k] = nodes.w[k] * nodes.dz[k];
        ag[k] = a[k] * g[k];
    }
    detail::FineCache cache(nodes, g);
    CauchyResult out;
    out.value.resize(targets.size());
    if (with_deriv) out.deriv.resize(targets.size());
    if (order >= 2) out.deriv2.resize(targets.size());
    std::vector<char> near(targets.size(), 0);
    const cplx two_pi_i{0.0, two_pi};

    parallel_for(targets.size(), [&](std::size_t q) {
        const cplx z = targets[q];
        detail::Sums total;
        for (std::size_t c = 0; c < nodes.sizes.size(); ++c) {
            const std::size_t off = nodes.offset[c], N = nodes.sizes[c];
            detail::Sums part;
            double dmin = std::numeric_limits<double>::infinity();
            std::size_t kmin = off;
            for (std::size_t k = off; k < off + N; ++k) {
                const cplx d = nodes.z[k] - z;
                if (d == cplx(0.0)) {
                    // target on a node: return the datum itself
                    out.value[q] = g[k];
                    if (with_deriv) out.deriv[q] = complex_nan();
                    if (order >= 2) out.deriv2[q] = complex_nan();
                    near[q] = 1;
                    return;
                }
                const double ad = std::abs(d);
                if (ad < dmin) {
                    dmin = ad;
                    kmin = k;
                }
                detail::accumulate(part, a[k], ag[k], d, order);
            }
            if (refine) {
                const std::size_t prev = kmin == off ? off + N - 1 : kmin - 1;
                const std::size_t next = kmin + 1 == off + N ? off : kmin + 1;
                const double h = nodes.w[kmin] * std::max({std::abs(nodes.dz[kmin]), std::abs(nodes.dz[prev]),
                                                           std::abs(nodes.dz[next])});
                if (dmin < detail::refine_reach * h) {
                    int K = 2;
                    while (K < detail::refine_max_factor && dmin * K < detail::refine_reach * h) K *= 2;
                    const auto& fine = cache.get(c, K);
                    detail::Sums fs;
                    for (std::size_t m = 0; m < fine.z.size(); ++m) {
                        const cplx d = fine.z[m] - z;
                        if (d == cplx(0.0)) continue;
                        detail::accumulate(fs, fine.a[m], fine.ag[m], d, order);
                    }
                    part = fs;
                }
            }
            total += part;
        }
        if (mode == CauchyMode::bounded) {
            // f S1 = Sg, differentiated; the k-th derivative of 1/(eta - z) is k!/(eta - z)^(k+1)
            const cplx f = total.sg / total.s1;
            out.value[q] = f;
            if (with_deriv) {
                const cplx df = (total.sg2 - f * total.s12) / total.s1;
                out.deriv[q] = df;
                if (order >= 2) out.deriv2[q] = 2.0 * (total.sg3 - df * total.s12 - f * total.s13) / total.s1;
            }
        } else {
            // f (1 + D) = C
            const cplx C = total.sg / two_pi_i, D = total.s1 / two_pi_i;
            const cplx f = C / (1.0 + D);
            out.value[q] = f;
            if (with_deriv) {
                const cplx dC = total.sg2 / two_pi_i, dD = total.s12 / two_pi_i;
                const cplx df = (dC - f * dD) / (1.0 + D);
                out.deriv[q] = df;
                if (order >= 2)
                    out.deriv2[q] = 2.0 * (total.sg3 / two_pi_i - df * dD - f * total.s13 / two_pi_i) / (1.0 + D);
            }
        }
        if (delta > 0.0 && detail::polyline_distance(parts, z) < delta) near[q] = 1;
    });
    for (std::size_t q = 0; q < targets.size(); ++q)
        if (near[q]) out.near.push_back(q);
    return out;
}

inline std::vector<cplx> cauchy_eval(std::span<const BoundaryComponent> parts, std::span<const cplx> g,
                                     std::span<const cplx> targets, CauchyMode mode) {
    return cauchy_evaluate(parts, g, targets, mode, 0).value;
}

inline std::vector<cplx> cauchy_deriv(std::span<const BoundaryComponent> parts, std::span<const cplx> g,
                                      std::span<const cplx> targets, CauchyMode mode) {
    return cauchy_evaluate(parts, g, targets, mode, 1).deriv;
}

/// D(z) = (1/2 pi i) sum W eta'/(eta - z): the discrete winding number.
inline std::vector<cplx> cauchy_winding(std::span<const BoundaryComponent> parts, std::span<const cplx> targets) {
    const detail::FlatNodes nodes(parts);
    std::vector<cplx> out(targets.size());
    for (std::size_t q = 0; q < targets.size(); ++q) {
        cplx s = 0.0;
        for (std::size_t k = 0; k < nodes.size(); ++k) s += nodes.w[k] * nodes.dz[k] / (nodes.z[k] - targets[q]);
        out[q] = s / cplx(0.0, two_pi);
    }
    return out;
}

} // namespace plgcir
