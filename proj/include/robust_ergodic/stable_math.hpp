#pragma once

#include <cmath>

namespace robust_ergodic {

/// e^x - 1 without cancellation near 0.
inline double expm1_stable(double x) { return std::expm1(x); }

/// (e^x - 1) / x, equal to 1 at x = 0.
inline double exprel_stable(double x) {
    if (std::abs(x) < 1e-5) {
        // Truncation error below x^4/120 ~ 1e-22.
        return 1.0 + x * (0.5 + x * (1.0 / 6.0 + x / 24.0));
    }
    return std::expm1(x) / x;
}

/// phi_k(z) = sum_j z^j / (j + k)!, so phi_1 = exprel and phi_{k+1}(z) = (phi_k(z) - 1/k!) / z.
inline double phi_stable(int k, double z) {
    if (std::abs(z) <= 1.0) {
        double term = 1.0;
        for (int i = 2; i <= k; ++i) term /= i;
        double sum = term;
        for (int j = 1; j < 30; ++j) {
            term *= z / (j + k);
            sum += term;
        }
        return sum;
    }
    double phi = std::expm1(z) / z;
    double inv_fact = 1.0;
    for (int n = 1; n < k; ++n) {
        inv_fact /= n;
        phi = (phi - inv_fact) / z;
    }
    return phi;
}

} // namespace robust_ergodic
