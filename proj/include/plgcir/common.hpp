#pragma once

#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace plgcir {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

inline cplx complex_nan() {
    const double q = std::numeric_limits<double>::quiet_NaN();
    return {q, q};
}

inline bool is_finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

enum class ErrorCode {
    too_few_vertices,
    non_finite,
    cusp,
    self_intersection,
    polygon_overlap,
    alpha_outside,
    beta_invalid,
    bad_argument,
    convergence,
    io,
    schema,
    version_mismatch,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::too_few_vertices: return "too_few_vertices";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::cusp: return "cusp";
    case ErrorCode::self_intersection: return "self_intersection";
    case ErrorCode::polygon_overlap: return "polygon_overlap";
    case ErrorCode::alpha_outside: return "alpha_outside";
    case ErrorCode::beta_invalid: return "beta_invalid";
    case ErrorCode::bad_argument: return "bad_argument";
    case ErrorCode::convergence: return "convergence";
    case ErrorCode::io: return "io";
    case ErrorCode::schema: return "schema";
    case ErrorCode::version_mismatch: return "version_mismatch";
    }
    return "unknown";
}

/// Geometry errors are the ones a user fixes by editing the domain file.
inline bool is_geometry_error(ErrorCode code) {
    switch (code) {
    case ErrorCode::too_few_vertices:
    case ErrorCode::non_finite:
    case ErrorCode::cusp:
    case ErrorCode::self_intersection:
    case ErrorCode::polygon_overlap:
    case ErrorCode::alpha_outside:
    case ErrorCode::beta_invalid:
        return true;
    default:
        return false;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace plgcir
