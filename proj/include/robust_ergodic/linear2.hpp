#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "errors.hpp"

namespace robust_ergodic {

struct Linear2Result {
    std::array<double, 2> x{};
    double determinant = 0.0;        ///< det of the matrix as given (row order preserved)
    double scaled_determinant = 0.0; ///< det after normalising each row to unit max-norm
    double condition = 0.0;          ///< 1-norm condition number of the row-scaled matrix
};

inline constexpr double kSingularTol = 64.0 * std::numeric_limits<double>::epsilon();

/// Solves [[a11 a12] [a21 a22]] x = (b1, b2) by row scaling and partial pivoting.
/// Throws SingularSystem when the scaled determinant is below kSingularTol.
inline Linear2Result solve_linear2(double a11, double a12, double a21, double a22, double b1, double b2) {
    Linear2Result out;
    out.determinant = a11 * a22 - a12 * a21;

    const double s1 = std::max(std::abs(a11), std::abs(a12));
    const double s2 = std::max(std::abs(a21), std::abs(a22));
    if (!(s1 > 0.0) || !(s2 > 0.0) || !std::isfinite(s1) || !std::isfinite(s2)) {
        throw SingularSystem("2x2 system has a zero or non-finite row");
    }
    double m11 = a11 / s1, m12 = a12 / s1, r1 = b1 / s1;
    double m21 = a21 / s2, m22 = a22 / s2, r2 = b2 / s2;
    out.scaled_determinant = m11 * m22 - m12 * m21;
    if (!(std::abs(out.scaled_determinant) >= kSingularTol)) {
        throw SingularSystem("2x2 system is numerically singular (scaled determinant " +
                             std::to_string(out.scaled_determinant) + ")");
    }

    const double inv_norm = (std::max(std::abs(m22) + std::abs(m12), std::abs(m21) + std::abs(m11))) /
                            std::abs(out.scaled_determinant);
    const double norm = std::max(std::abs(m11) + std::abs(m21), std::abs(m12) + std::abs(m22));
    out.condition = norm * inv_norm;

    if (std::abs(m21) > std::abs(m11)) {
        std::swap(m11, m21);
        std::swap(m12, m22);
        std::swap(r1, r2);
    }
    const double l = m21 / m11;
    const double u22 = m22 - l * m12;
    const double y2 = r2 - l * r1;
    out.x[1] = y2 / u22;
    out.x[0] = (r1 - m12 * out.x[1]) / m11;
    return out;
}

} // namespace robust_ergodic
