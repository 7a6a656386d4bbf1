#pragma once

#include <cmath>

namespace dlss::detail {

// a*b - c*d with a single rounding error (Kahan).
inline double diff_of_products(double a, double b, double c, double d) noexcept {
    const double cd = c * d;
    const double err = std::fma(-c, d, cd);
    const double dop = std::fma(a, b, -cd);
    return dop + err;
}

// r0 - sqrt(rp * rm) without cancellation.
inline double sqrt_gap(double r0, double rp, double rm) noexcept {
    const double g = std::sqrt(rp) * std::sqrt(rm);
    return diff_of_products(r0, r0, rp, rm) / (r0 + g);
}

// e^{-y} - 1 + y, accurate for small y.
inline double expm1_defect(double y) noexcept {
    if (std::abs(y) < 0.1) {
        double term = y * y / 2.0, s = 0.0;
        for (int n = 2; n < 20; ++n) {
            s += term;
            term *= -y / (n + 1);
        }
        return s;
    }
    return std::expm1(-y) + y;
}

// eta(1 - x) = (1 - x) log(1 - x) + x, accurate for small x; requires x <= 1.
inline double eta_shift(double x) noexcept {
    if (std::abs(x) < 0.1) {
        double p = x * x, s = 0.0;
        for (int n = 2; n < 20; ++n) {
            s += p / (n * (n - 1.0));
            p *= x;
        }
        return s;
    }
    if (x == 1.0) return 1.0;
    return (1.0 - x) * std::log1p(-x) + x;
}

}  // namespace dlss::detail
