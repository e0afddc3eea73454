#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace dsrs {

// Sign/log-magnitude representation for quantities (dual variables, densities,
// Lambert-W arguments) whose linear value can overflow or underflow a double.
struct LogScalar {
    int sign = 0;  // -1, 0 or +1
    double log_mag = -std::numeric_limits<double>::infinity();

    static LogScalar zero() { return LogScalar{}; }

    // Positive value given by its natural log; +inf encodes a saturated
    // (infinite) magnitude, used by the degenerate dual handlers.
    static LogScalar from_log(double lm) { return LogScalar{+1, lm}; }

    static LogScalar from_value(double v) {
        if (v == 0.0) return zero();
        return LogScalar{v > 0.0 ? +1 : -1, std::log(std::fabs(v))};
    }

    double value() const {
        if (sign == 0) return 0.0;
        return sign * std::exp(log_mag);
    }

    bool is_zero() const { return sign == 0; }
    bool is_inf() const { return sign != 0 && std::isinf(log_mag) && log_mag > 0; }
};

// Regularized lower incomplete gamma P(a, x).  Stable for shapes up to ~1e5
// via the log-prefactor series (x < a+1) / continued-fraction (x >= a+1) split.
double reg_gamma_cdf(double a, double x);

// Inverse of reg_gamma_cdf in x: Newton from a normal-approximation seed with
// a bisection fallback.  Requires 0 <= p < 1.
double reg_gamma_cdf_inv(double a, double p);

// CDF of Beta(a, a) at x, with x clamped to [0, 1] first (integrand call
// sites legitimately produce out-of-range sphere-cap arguments).
double reg_beta_cdf_sym(double a, double x);

// Principal branch W0 of the Lambert W function, x >= -1/e.
double lambert_w0(double x);

// W0(e^logx) without materializing e^logx; for large logx solves
// w + ln w = logx directly.  logx = -inf maps to 0.
double lambert_w0_of_exp(double logx);

// Sum of c_i * e^{x_i} with the maximum exponent factored out; exact sign.
LogScalar signed_log_sum(const std::vector<std::pair<double, double>>& terms);

// Inverse CDF of the standard normal, 0 < p < 1.
double std_normal_quantile(double p);

namespace detail {

// General regularized incomplete beta I_x(a, b), 0 <= x <= 1 (no clamping).
double reg_beta_cdf(double a, double b, double x);

// Inverse of reg_beta_cdf in x (used by the exact binomial intervals).
double reg_beta_cdf_inv(double a, double b, double p);

}  // namespace detail

}  // namespace dsrs
