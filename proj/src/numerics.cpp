#include "dsrs/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dsrs {

namespace {

constexpr double kEps = 1e-16;
constexpr double kFpMin = 1e-300;
constexpr int kSeriesMax = 1000000;

// Lower-tail series for P(a,x), valid (and used) for x < a+1.
double gamma_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < kSeriesMax; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * kEps) {
            return sum * std::exp(a * std::log(x) - x - std::lgamma(a));
        }
    }
    throw std::runtime_error("gamma series failed to converge");
}

// Upper-tail continued fraction (modified Lentz) for Q(a,x), x >= a+1.
double gamma_cont_frac(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kFpMin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kSeriesMax; ++i) {
        double an = -static_cast<double>(i) * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = b + an / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) {
            return h * std::exp(a * std::log(x) - x - std::lgamma(a));
        }
    }
    throw std::runtime_error("gamma continued fraction failed to converge");
}

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cont_frac(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m < kSeriesMax; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw std::runtime_error("beta continued fraction failed to converge");
}

}  // namespace

double reg_gamma_cdf(double a, double x) {
    if (!(a > 0.0)) throw std::invalid_argument("reg_gamma_cdf: shape must be positive");
    if (!(x >= 0.0)) throw std::invalid_argument("reg_gamma_cdf: x must be nonnegative");
    if (x == 0.0) return 0.0;
    double p = (x < a + 1.0) ? gamma_series(a, x) : 1.0 - gamma_cont_frac(a, x);
    return std::clamp(p, 0.0, 1.0);
}

double reg_gamma_cdf_inv(double a, double p) {
    if (!(a > 0.0)) throw std::invalid_argument("reg_gamma_cdf_inv: shape must be positive");
    if (!(p >= 0.0 && p < 1.0)) {
        throw std::invalid_argument("reg_gamma_cdf_inv: p must lie in [0, 1)");
    }
    if (p == 0.0) return 0.0;

    // Wilson-Hilferty normal-approximation seed, with a small-x fallback.
    const double z = std_normal_quantile(p);
    const double wh = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * std::sqrt(a));
    double x = a * wh * wh * wh;
    if (!(x > 0.0) || !std::isfinite(x)) {
        x = std::exp((std::log(p) + std::lgamma(a + 1.0)) / a);
    }

    // Establish a bracket [lo, hi] with P(lo) < p <= P(hi).
    double lo = 0.0;
    double hi = x;
    for (int i = 0; i < 1100 && reg_gamma_cdf(a, hi) < p; ++i) {
        lo = hi;
        hi *= 2.0;
    }

    x = std::clamp(x, lo + 0.25 * (hi - lo), hi);
    for (int it = 0; it < 200; ++it) {
        const double f = reg_gamma_cdf(a, x) - p;
        if (f >= 0.0) {
            hi = x;
        } else {
            lo = x;
        }
        // Relative tolerance: deep in either tail the CDF value is tiny, so an
        // absolute criterion would leave a large relative error in x.
        if (std::fabs(f) <= 1e-13 * std::min(p, 1.0 - p) || hi - lo <= 4.0 * kEps * hi) break;
        const double log_pdf = (a - 1.0) * std::log(x) - x - std::lgamma(a);
        double xn = x - f / std::exp(log_pdf);
        if (!(xn > lo && xn < hi) || !std::isfinite(xn)) xn = 0.5 * (lo + hi);
        x = xn;
    }
    return x;
}

namespace detail {

double reg_beta_cdf(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw std::invalid_argument("reg_beta_cdf: shapes must be positive");
    }
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("reg_beta_cdf: x outside [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
    const double bt = std::exp(log_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return std::clamp(bt * beta_cont_frac(a, b, x) / a, 0.0, 1.0);
    }
    return std::clamp(1.0 - bt * beta_cont_frac(b, a, 1.0 - x) / b, 0.0, 1.0);
}

double reg_beta_cdf_inv(double a, double b, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("reg_beta_cdf_inv: p outside [0,1]");
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;

    double lo = 0.0, hi = 1.0;
    double x = a / (a + b);  // mean seed
    for (int it = 0; it < 300; ++it) {
        const double f = reg_beta_cdf(a, b, x) - p;
        if (f >= 0.0) {
            hi = x;
        } else {
            lo = x;
        }
        if (std::fabs(f) <= 1e-14 || hi - lo <= 4.0 * kEps) break;
        const double log_pdf = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                               (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
        double xn = x - f / std::exp(log_pdf);
        if (!(xn > lo && xn < hi) || !std::isfinite(xn)) xn = 0.5 * (lo + hi);
        x = xn;
    }
    return x;
}

}  // namespace detail

double reg_beta_cdf_sym(double a, double x) {
    if (!(a > 0.0)) throw std::invalid_argument("reg_beta_cdf_sym: shape must be positive");
    if (std::isnan(x)) throw std::invalid_argument("reg_beta_cdf_sym: x is NaN");
    x = std::clamp(x, 0.0, 1.0);
    if (x == 0.5) return 0.5;  // exact symmetry point
    return detail::reg_beta_cdf(a, a, x);
}

double lambert_w0(double x) {
    constexpr double kNegInvE = -0.36787944117144233;  // -1/e
    if (x < kNegInvE - 1e-12) throw std::invalid_argument("lambert_w0: x below -1/e");
    x = std::max(x, kNegInvE);
    if (x == 0.0) return 0.0;

    double w;
    if (x < -0.25) {
        // Branch-point expansion around x = -1/e.
        const double p = std::sqrt(std::max(0.0, 2.0 * (std::exp(1.0) * x + 1.0)));
        w = -1.0 + p - p * p / 3.0 + (11.0 / 72.0) * p * p * p;
    } else if (x < 2.0) {
        w = std::log1p(x) * (1.0 - std::log1p(std::log1p(x)) / (2.0 + std::log1p(x)));
    } else {
        w = std::log(x) - std::log(std::log(x));
    }

    for (int it = 0; it < 100; ++it) {
        const double ew = std::exp(w);
        const double f = w * ew - x;
        if (std::fabs(f) <= 1e-14 * (std::fabs(x) + kFpMin)) break;
        const double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
        double wn = w - f / denom;
        if (!std::isfinite(wn) || wn < -1.0) wn = std::max(-1.0, 0.5 * (w - 1.0));
        if (wn == w) break;
        w = wn;
    }
    return w;
}

double lambert_w0_of_exp(double logx) {
    if (std::isnan(logx)) throw std::invalid_argument("lambert_w0_of_exp: NaN argument");
    if (logx == -std::numeric_limits<double>::infinity()) return 0.0;
    if (logx == std::numeric_limits<double>::infinity()) return logx;
    if (logx <= 690.0) return lambert_w0(std::exp(logx));
    // Solve w + ln w = logx by Newton; in this regime w ~ logx >> 1.
    double w = logx - std::log(logx);
    for (int it = 0; it < 100; ++it) {
        const double f = w + std::log(w) - logx;
        if (std::fabs(f) <= 1e-13) break;
        w -= f * w / (w + 1.0);
    }
    return w;
}

LogScalar signed_log_sum(const std::vector<std::pair<double, double>>& terms) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& [c, lv] : terms) {
        if (c == 0.0 || lv == -std::numeric_limits<double>::infinity()) continue;
        if (!std::isfinite(c)) throw std::invalid_argument("signed_log_sum: non-finite coefficient");
        m = std::max(m, std::log(std::fabs(c)) + lv);
    }
    if (m == -std::numeric_limits<double>::infinity()) return LogScalar::zero();
    double s = 0.0;
    for (const auto& [c, lv] : terms) {
        if (c == 0.0 || lv == -std::numeric_limits<double>::infinity()) continue;
        const double sign = c > 0.0 ? 1.0 : -1.0;
        s += sign * std::exp(std::log(std::fabs(c)) + lv - m);
    }
    if (s == 0.0) return LogScalar::zero();
    return LogScalar{s > 0.0 ? +1 : -1, m + std::log(std::fabs(s))};
}

double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("std_normal_quantile: p must lie in (0, 1)");
    }
    // Reflect into the lower half so the erfc refinement always works in the
    // accurate tail; this also makes the symmetry Phi^{-1}(p) = -Phi^{-1}(1-p)
    // hold exactly whenever 1-p is exact.
    if (p > 0.5) return -std_normal_quantile(1.0 - p);
    // Acklam's rational approximation, then one Halley step on the erfc-based CDF.
    static const double A[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double B[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double C[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double D[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double plow = 0.02425;

    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
            ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q /
            (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
            ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
    }

    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace dsrs
