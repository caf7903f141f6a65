#pragma once

// Periodic FFT operators on the half-step grid t_r = (2*pi/N)(r + 1/2).
// Multiplier operators are shift invariant, so the grid offset only enters
// trig_interpolate.

#include "common.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace plgcir {

namespace detail {

class FftPlans {
public:
    static FftPlans& instance() {
        static FftPlans plans;
        return plans;
    }

    fftw_plan get(int n, int sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(n, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        fftw_complex* buf = fftw_alloc_complex(static_cast<std::size_t>(n));
        fftw_plan plan = fftw_plan_dft_1d(n, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(buf);
        plans_.emplace(key, plan);
        return plan;
    }

    FftPlans(const FftPlans&) = delete;
    FftPlans& operator=(const FftPlans&) = delete;

private:
    FftPlans() = default;
    ~FftPlans() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    std::mutex mutex_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
};

/// In-place unnormalized DFT; sign = FFTW_FORWARD (-1) or FFTW_BACKWARD (+1).
inline void fft_inplace(std::vector<cplx>& x, int sign) {
    fftw_plan plan = FftPlans::instance().get(static_cast<int>(x.size()), sign);
    auto* data = reinterpret_cast<fftw_complex*>(x.data());
    fftw_execute_dft(plan, data, data);
}

/// Signed frequency of DFT bin k.
inline long frequency(std::size_t k, std::size_t n) {
    return k <= n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

template <class Multiplier>
std::vector<cplx> apply_multiplier(std::span<const cplx> values, Multiplier&& mult) {
    const std::size_t n = values.size();
    std::vector<cplx> x(values.begin(), values.end());
    fft_inplace(x, FFTW_FORWARD);
    for (std::size_t k = 0; k < n; ++k) {
        const long f = frequency(k, n);
        if (n % 2 == 0 && k == n / 2)
            x[k] = 0.0;
        else
            x[k] *= mult(f);
    }
    fft_inplace(x, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : x) v *= scale;
    return x;
}

inline std::vector<double> real_part(const std::vector<cplx>& x) {
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i].real();
    return r;
}

inline std::vector<cplx> to_complex(std::span<const double> x) { return {x.begin(), x.end()}; }

} // namespace detail

/// Circular Hilbert transform: multiplies mode k by -i*sgn(k).
inline std::vector<cplx> conjugate_operator(std::span<const cplx> phi) {
    return detail::apply_multiplier(phi, [](long k) { return cplx(0.0, -static_cast<double>((k > 0) - (k < 0))); });
}

inline std::vector<double> conjugate_operator(std::span<const double> phi) {
    const auto c = detail::to_complex(phi);
    return detail::real_part(conjugate_operator(std::span<const cplx>(c)));
}

/// d/dt: multiplies mode k by i*k.
inline std::vector<cplx> spectral_derivative(std::span<const cplx> phi) {
    return detail::apply_multiplier(phi, [](long k) { return cplx(0.0, static_cast<double>(k)); });
}

inline std::vector<double> spectral_derivative(std::span<const double> phi) {
    const auto c = detail::to_complex(phi);
    return detail::real_part(spectral_derivative(std::span<const cplx>(c)));
}

/// Evaluates the trigonometric interpolant of samples on the half-step grid.
/// The Nyquist mode enters as a cosine so the interpolant reproduces every sample.
inline std::vector<cplx> trig_interpolate(std::span<const cplx> phi, std::span<const double> tq) {
    const std::size_t n = phi.size();
    std::vector<cplx> x(phi.begin(), phi.end());
    detail::fft_inplace(x, FFTW_FORWARD);
    const double h = two_pi / static_cast<double>(n);
    // Coefficients relative to t: c_k = X_k e^{-ik h/2} / N.
    std::vector<cplx> coef(n);
    for (std::size_t k = 0; k < n; ++k) {
        const long f = detail::frequency(k, n);
        coef[k] = x[k] * std::polar(1.0 / static_cast<double>(n), -static_cast<double>(f) * h / 2.0);
    }
    std::vector<cplx> out(tq.size());
    for (std::size_t q = 0; q < tq.size(); ++q) {
        cplx s = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const long f = detail::frequency(k, n);
            if (n % 2 == 0 && k == n / 2) {
                // X_{N/2}/N * cos(N/2 (t - h/2))
                s += x[k] / static_cast<double>(n) * std::cos(static_cast<double>(f) * (tq[q] - h / 2.0));
            } else {
                s += coef[k] * std::polar(1.0, static_cast<double>(f) * tq[q]);
            }
        }
        out[q] = s;
    }
    return out;
}

} // namespace plgcir
