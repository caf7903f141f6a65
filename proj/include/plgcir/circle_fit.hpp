#pragma once

#include "common.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <span>

namespace plgcir {

struct CircleFit {
    cplx center;
    double radius;
    double deviation;  // max | |p - center| - radius | / radius
};

namespace detail {

// Solves the 3x3 system m x = b by Gaussian elimination with partial pivoting.
// Returns false when the matrix is numerically singular.
inline bool solve3(std::array<std::array<double, 3>, 3> m, std::array<double, 3> b, std::array<double, 3>& x) {
    double scale = 0.0;
    for (auto& row : m)
        for (double v : row) scale = std::max(scale, std::abs(v));
    for (int c = 0; c < 3; ++c) {
        int piv = c;
        for (int r = c + 1; r < 3; ++r)
            if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
        if (!(std::abs(m[piv][c]) > 1e-12 * scale)) return false;
        std::swap(m[c], m[piv]);
        std::swap(b[c], b[piv]);
        for (int r = c + 1; r < 3; ++r) {
            const double f = m[r][c] / m[c][c];
            for (int k = c; k < 3; ++k) m[r][k] -= f * m[c][k];
            b[r] -= f * b[c];
        }
    }
    for (int r = 2; r >= 0; --r) {
        double s = b[r];
        for (int k = r + 1; k < 3; ++k) s -= m[r][k] * x[k];
        x[r] = s / m[r][r];
    }
    return true;
}

} // namespace detail

/// Algebraic (Kasa) least-squares circle. Exact for points on a circle however
/// they are distributed along it. Falls back to the centroid when the points
/// do not determine a circle (fewer than three distinct points).
inline CircleFit fit_circle(std::span<const cplx> pts) {
    cplx mean = 0.0;
    for (cplx p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    double s = 0.0;
    for (cplx p : pts) s = std::max(s, std::abs(p - mean));
    if (s == 0.0) return {mean, 0.0, 0.0};

    // x^2 + y^2 + D x + E y + F = 0 in centered, scaled coordinates
    std::array<std::array<double, 3>, 3> m{};
    std::array<double, 3> b{};
    for (cplx p : pts) {
        const cplx u = (p - mean) / s;
        const std::array<double, 3> row{u.real(), u.imag(), 1.0};
        const double rhs = -std::norm(u);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) m[i][j] += row[i] * row[j];
            b[i] += row[i] * rhs;
        }
    }
    cplx center = mean;
    std::array<double, 3> x{};
    if (detail::solve3(m, b, x)) center = mean + s * cplx(-x[0] / 2.0, -x[1] / 2.0);

    double r = 0.0;
    for (cplx p : pts) r += std::abs(p - center);
    r /= static_cast<double>(pts.size());
    double dev = 0.0;
    for (cplx p : pts) dev = std::max(dev, std::abs(std::abs(p - center) - r));
    return {center, r, r > 0.0 ? dev / r : 0.0};
}

} // namespace plgcir
