#include "dsrs/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dsrs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBoundaryTol = 1e-9;  // degenerate-case detection
constexpr double kLogDomainLo = -500.0;
constexpr double kLogDomainHi = 500.0;

// Two-term log-sum-exp of positive terms given by their logs.
double log_add2(double la, double lb) {
    if (la == -kInf) return lb;
    if (lb == -kInf) return la;
    if (la == kInf || lb == kInf) return kInf;
    const double m = std::max(la, lb);
    return m + std::log1p(std::exp(std::min(la, lb) - m));
}

// Radius-independent geometry shared by all truncated-family integrands.
struct Geom {
    double d;      // ambient dimension
    double k;      // generalized shape
    double shape;  // d/2 - k (gamma mixing law)
    double sp;     // sigma'
    double r;      // perturbation norm
    double delta;  // quadrature tolerance
};

Geom geom_of(const SmoothingSpec& p_spec, double r, double delta) {
    Geom g;
    g.d = p_spec.d;
    g.k = p_spec.k;
    g.shape = p_spec.shape();
    g.sp = sigma_prime(p_spec);
    g.r = r;
    g.delta = delta;
    return g;
}

Geom geom_of(const CertContext& ctx) { return geom_of(ctx.p_spec, ctx.r, ctx.delta_int); }

double cap_prob(const Geom& g, double arg) { return reg_beta_cdf_sym(0.5 * (g.d - 1.0), arg); }

// Squared radius at which the P-density falls to (factor)·p(sigma'·sqrt(2t)),
// i.e. r_p^{-1}(factor · r_p(sigma'√2t))².  `log_factor` may be ±inf; the
// u3 integrand passes +ln λ, the u1/u2 integrands -ln a.
double density_inv_sq(const Geom& g, double t, double log_factor) {
    if (g.k == 0.0) {
        if (log_factor == kInf) return -kInf;
        if (log_factor == -kInf) return kInf;
        return 2.0 * g.sp * g.sp * (t - log_factor);
    }
    // W-argument in log scale: ln(t/k) + t/k - ln(factor)/k.
    double logw;
    if (log_factor == kInf) {
        logw = -kInf;
    } else if (log_factor == -kInf) {
        logw = kInf;
    } else {
        logw = std::log(t / g.k) + t / g.k - log_factor / g.k;
    }
    if (logw == kInf) return kInf;
    return 2.0 * g.k * g.sp * g.sp * lambert_w0_of_exp(logw);
}

double u3_geo(const Geom& g, double t, const LogScalar& lambda) {
    if (lambda.is_zero()) return 0.0;
    const double s = g.sp * std::sqrt(2.0 * t);
    const double x = density_inv_sq(g, t, lambda.log_mag);
    if (x == kInf) return 0.0;
    const double denom = 4.0 * g.r * s;
    return cap_prob(g, x == -kInf ? kInf : ((g.r + s) * (g.r + s) - x) / denom);
}

// Single-constraint (lambda2 = 0) functionals used by the NP baseline and by
// the worst-case box resolution; they do not depend on Q at all.
double np_P_val(const Geom& g, const LogScalar& lambda) {
    if (lambda.is_zero()) return 0.0;
    if (lambda.is_inf()) return 1.0;
    return gamma_expectation(g.shape, g.delta, [&](double t) { return u3_geo(g, t, lambda); });
}

double np_R_val(const Geom& g, const LogScalar& lambda) {
    if (lambda.is_zero()) return 0.0;
    if (lambda.is_inf()) return 1.0;
    return gamma_expectation(g.shape, g.delta, [&](double t) {
        const double s = g.sp * std::sqrt(2.0 * t);
        const double x = density_inv_sq(g, t, -lambda.log_mag);
        if (x == -kInf) return 0.0;
        const double denom = 4.0 * g.r * s;
        return cap_prob(g, x == kInf ? kInf : (x - (s - g.r) * (s - g.r)) / denom);
    });
}

struct Bracket {
    double lo, hi;
};

// Binary search for a monotone nondecreasing fn (of the log-domain variable)
// against `target`, followed by the sound bracket expansion: widen until the
// quadrature-error-inflated targets are straddled at both endpoints.
Bracket log_solve(const std::function<double(double)>& fn, double target, double delta,
                  double eps_log) {
    double lo = kLogDomainLo, hi = kLogDomainHi;
    while (hi - lo > eps_log) {
        const double mid = 0.5 * (lo + hi);
        if (fn(mid) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    double vlo = fn(lo), vhi = fn(hi);
    for (int it = 0; vlo + delta > target || vhi - delta < target; ++it) {
        if (it >= 200) throw abstain_error("dual solve: bracket expansion cap exceeded");
        const double w = hi - lo;
        lo -= 0.5 * w;
        hi += 0.5 * w;
        vlo = fn(lo);
        vhi = fn(hi);
    }
    // The doubling can overshoot badly where fn is flat, and where fn is
    // steep even an eps_log-wide bracket leaves a large value gap.  Re-bisect
    // each endpoint against its inflated target, down to a width floor well
    // below eps_log, so the bracket stays as tight as the local slope allows
    // while keeping fn(lo) <= target - delta and fn(hi) >= target + delta.
    const double fine = std::min(eps_log, 1e-12);
    for (double a = lo, b = hi; b - a > fine;) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;  // width at the ulp limit
        (fn(mid) <= target - delta ? a : b) = mid;
        lo = a;
    }
    for (double a = lo, b = hi; b - a > fine;) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        (fn(mid) >= target + delta ? b : a) = mid;
        hi = b;
    }
    return {lo, hi};
}

// Q as a function of the sum a = lambda1 + nu*lambda2 alone.
double compute_Q_sum(const LogScalar& a, const CertContext& ctx) {
    if (a.is_zero()) return 0.0;
    if (a.is_inf()) return 1.0;  // nu * Pr[t <= t*] exactly
    const Geom g = geom_of(ctx);
    const double ts = ctx.t_star();
    const double nuv = ctx.nu;
    return gamma_expectation(
        g.shape, ctx.delta_int,
        [&](double t) { return t <= ts ? nuv * u3_geo(g, t, a) : 0.0; }, {ts});
}

// ---- different-variance (var) family integrands -------------------------

struct VarGeom {
    Geom g;          // geometry of P (d, k, sigma', r, delta)
    double bq;       // beta' of Q
    double c_pq;     // sigma'^2 / beta'^2
    double c_qp;     // beta'^2 / sigma'^2
    double log_ratio;  // (d - 2k) * ln(sigma'/beta')
};

VarGeom var_geom(const CertContext& ctx) {
    VarGeom v;
    v.g = geom_of(ctx);
    v.bq = ctx.bq();
    v.c_pq = (v.g.sp * v.g.sp) / (v.bq * v.bq);
    v.c_qp = 1.0 / v.c_pq;
    v.log_ratio = (v.g.d - 2.0 * v.g.k) * std::log(v.g.sp / v.bq);
    return v;
}

// g^{-1}(lambda1 g(rho) + lambda2 h(rho))² evaluated at rho on the P-side
// (rho = sigma'√2x) or the Q-side (rho = beta'√2x), in the simplified
// Lambert-W / log closed forms.
double var_inv_sq(const VarGeom& v, double x, const LogScalar& l1, const LogScalar& l2,
                  bool q_side) {
    const double log_s =
        q_side ? log_add2(l1.sign ? l1.log_mag - v.c_qp * x : -kInf,
                          l2.sign ? l2.log_mag + v.log_ratio - x : -kInf)
               : log_add2(l1.sign ? l1.log_mag - x : -kInf,
                          l2.sign ? l2.log_mag + v.log_ratio - v.c_pq * x : -kInf);
    const Geom& g = v.g;
    if (g.k == 0.0) {
        if (log_s == -kInf) return kInf;
        if (log_s == kInf) return -kInf;
        return -2.0 * g.sp * g.sp * log_s;
    }
    double logw;
    if (log_s == -kInf) {
        logw = kInf;
    } else if (log_s == kInf) {
        logw = -kInf;
    } else {
        logw = std::log(x / g.k) + (q_side ? std::log(v.c_qp) : 0.0) - log_s / g.k;
    }
    if (logw == kInf) return kInf;
    return 2.0 * g.k * g.sp * g.sp * lambert_w0_of_exp(logw);
}

double var_P_val(const VarGeom& v, const LogScalar& l1, const LogScalar& l2) {
    if (l1.is_zero() && l2.is_zero()) return 0.0;
    if (l1.is_inf() || l2.is_inf()) return 1.0;
    const Geom& g = v.g;
    return gamma_expectation(g.shape, g.delta, [&](double x) {
        const double rho = g.sp * std::sqrt(2.0 * x);
        const double inv = var_inv_sq(v, x, l1, l2, /*q_side=*/false);
        if (inv == kInf) return 0.0;
        const double denom = 4.0 * g.r * rho;
        return cap_prob(g, inv == -kInf ? kInf : ((g.r + rho) * (g.r + rho) - inv) / denom);
    });
}

double var_Q_val(const VarGeom& v, const LogScalar& l1, const LogScalar& l2) {
    if (l1.is_zero() && l2.is_zero()) return 0.0;
    if (l1.is_inf() || l2.is_inf()) return 1.0;
    const Geom& g = v.g;
    return gamma_expectation(g.shape, g.delta, [&](double x) {
        const double rho = v.bq * std::sqrt(2.0 * x);
        const double inv = var_inv_sq(v, x, l1, l2, /*q_side=*/true);
        if (inv == kInf) return 0.0;
        const double denom = 4.0 * g.r * rho;
        return cap_prob(g, inv == -kInf ? kInf : ((g.r + rho) * (g.r + rho) - inv) / denom);
    });
}

// Largest squared norm y*² with lambda1·g(y) + lambda2·h(y) >= g(rho): the
// radial mixture is strictly decreasing for nonnegative duals, so its
// superlevel sets are intervals [0, y*] found by bisection.
double var_level_sq(const CertContext& ctx, const VarGeom& v, double rho,
                    const LogScalar& l1, const LogScalar& l2) {
    if (l1.is_inf() || l2.is_inf()) return kInf;
    if (l1.is_zero() && l2.is_zero()) return 0.0;
    const double target = log_radial_density(ctx.p_spec, rho).log_mag;
    auto log_mix = [&](double y) {
        const double lg = l1.sign ? l1.log_mag + log_radial_density(ctx.p_spec, y).log_mag : -kInf;
        const double lh = l2.sign ? l2.log_mag + log_radial_density(ctx.q_spec, y).log_mag : -kInf;
        return log_add2(lg, lh);
    };
    double hi = rho + v.g.r + v.bq + 1.0;
    for (int it = 0; log_mix(hi) > target; ++it) {
        if (it >= 200) return kInf;
        hi *= 2.0;
    }
    double lo = 0.0;  // mixture -> +inf (k>0) or a finite max (k=0) as y -> 0
    if (v.g.k == 0.0 && log_mix(1e-300) <= target) return 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (log_mix(mid) > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo * lo;
}

double var_R_val(const CertContext& ctx, const VarGeom& v, const LogScalar& l1,
                 const LogScalar& l2) {
    if (l1.is_zero() && l2.is_zero()) return 0.0;
    if (l1.is_inf() || l2.is_inf()) return 1.0;
    const Geom& g = v.g;
    return gamma_expectation(g.shape, g.delta, [&](double x) {
        const double rho = g.sp * std::sqrt(2.0 * x);
        const double y2 = var_level_sq(ctx, v, rho, l1, l2);
        if (y2 == kInf) return 1.0;
        const double denom = 4.0 * g.r * rho;
        return cap_prob(g, 0.5 + (y2 - g.r * g.r - rho * rho) / denom);
    });
}

// Inner step of the joint var-family search: smallest log(lambda2) with
// P(lambda1, lambda2) >= P_A, or -inf when lambda2 = 0 already overshoots.
double var_inner_l2(const VarGeom& v, double log_l1, double P_A, double eps_log) {
    const LogScalar l1 = LogScalar::from_log(log_l1);
    if (var_P_val(v, l1, LogScalar::zero()) >= P_A) return -kInf;
    double lo = kLogDomainLo, hi = kLogDomainHi;
    for (int it = 0; var_P_val(v, l1, LogScalar::from_log(hi)) < P_A; ++it) {
        if (it >= 60) throw abstain_error("var dual: lambda2 out of range");
        lo = hi;
        hi *= 2.0;
    }
    while (hi - lo > eps_log) {
        const double mid = 0.5 * (lo + hi);
        if (var_P_val(v, l1, LogScalar::from_log(mid)) < P_A) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

}  // namespace

CertContext CertContext::make(const SmoothingSpec& p_spec, const SmoothingSpec& q_spec,
                              double r, double delta_int, double eps_radius) {
    p_spec.validate();
    q_spec.validate();
    if (p_spec.truncated()) {
        throw std::invalid_argument("CertContext: p_spec must be non-truncated");
    }
    if (q_spec.d != p_spec.d || q_spec.k != p_spec.k) {
        throw std::invalid_argument("CertContext: p and q must share d and k");
    }
    if (!(r > 0.0)) throw std::invalid_argument("CertContext: radius must be positive");
    CertContext ctx;
    ctx.p_spec = p_spec;
    ctx.q_spec = q_spec;
    ctx.r = r;
    ctx.delta_int = delta_int;
    ctx.eps_radius = eps_radius;
    if (q_spec.truncated()) {
        if (q_spec.sigma != p_spec.sigma) {
            throw std::invalid_argument("CertContext: truncated q must share p's sigma");
        }
        ctx.nu = dsrs::nu(q_spec);
    } else {
        if (q_spec.sigma == p_spec.sigma) {
            throw std::invalid_argument("CertContext: var-family q must differ in sigma");
        }
        ctx.nu = 1.0;
    }
    return ctx;
}

double CertContext::t_star() const {
    const double s = sp();
    return q_spec.T * q_spec.T / (2.0 * s * s);
}

double u3(double t, const LogScalar& lambda, const CertContext& ctx) {
    return u3_geo(geom_of(ctx), t, lambda);
}

double u1(double t, const LogScalar& a, const CertContext& ctx) {
    if (a.is_zero()) return 0.0;
    const Geom g = geom_of(ctx);
    const double s = g.sp * std::sqrt(2.0 * t);
    const double x = density_inv_sq(g, t, -a.log_mag);
    const double T2 = ctx.q_spec.T * ctx.q_spec.T;
    const double m = std::min(T2, x);
    if (m == -kInf) return 0.0;
    return cap_prob(g, (m - (s - g.r) * (s - g.r)) / (4.0 * g.r * s));
}

double u2(double t, const LogScalar& lambda1, const CertContext& ctx) {
    if (lambda1.is_zero()) return 0.0;
    const Geom g = geom_of(ctx);
    const double s = g.sp * std::sqrt(2.0 * t);
    const double x = density_inv_sq(g, t, -lambda1.log_mag);
    if (x == -kInf) return 0.0;
    const double denom = 4.0 * g.r * s;
    const double c2 = (s - g.r) * (s - g.r);
    const double T2 = ctx.q_spec.T * ctx.q_spec.T;
    const double hi = cap_prob(g, x == kInf ? kInf : (x - c2) / denom);
    return std::max(0.0, hi - cap_prob(g, (T2 - c2) / denom));
}

double compute_P(const DualPoint& dual, const CertContext& ctx) {
    if (ctx.qkind() == QKind::Var) {
        return var_P_val(var_geom(ctx), dual.lambda1, dual.lambda2);
    }
    if (dual.lambda1.is_inf() && dual.sum.is_inf()) return 1.0;
    const Geom g = geom_of(ctx);
    const double ts = ctx.t_star();
    return gamma_expectation(
        g.shape, ctx.delta_int,
        [&](double t) { return u3_geo(g, t, t >= ts ? dual.lambda1 : dual.sum); }, {ts});
}

double compute_Q(const DualPoint& dual, const CertContext& ctx) {
    if (ctx.qkind() == QKind::Var) {
        return var_Q_val(var_geom(ctx), dual.lambda1, dual.lambda2);
    }
    return compute_Q_sum(dual.sum, ctx);
}

double compute_R(const DualPoint& dual, const CertContext& ctx) {
    if (ctx.qkind() == QKind::Var) {
        return var_R_val(ctx, var_geom(ctx), dual.lambda1, dual.lambda2);
    }
    if (dual.lambda1.is_inf() && dual.sum.is_inf()) return 1.0;
    const double ts = ctx.t_star();
    const bool with_u2 = dual.lambda1.sign > 0;
    return gamma_expectation(
        geom_of(ctx).shape, ctx.delta_int,
        [&](double t) {
            return u1(t, dual.sum, ctx) + (with_u2 ? u2(t, dual.lambda1, ctx) : 0.0);
        },
        {ts});
}

double h(const LogScalar& lambda1, const CertContext& ctx) {
    if (ctx.qkind() != QKind::Trunc) throw std::invalid_argument("h: truncated family only");
    if (lambda1.is_zero()) return 0.0;
    if (lambda1.is_inf()) return 1.0 - 1.0 / ctx.nu;
    const Geom g = geom_of(ctx);
    const double ts = ctx.t_star();
    return gamma_expectation(
        g.shape, ctx.delta_int,
        [&](double t) { return t >= ts ? u3_geo(g, t, lambda1) : 0.0; }, {ts});
}

DualPoint dual_solve_truncated(double P_A, double Q_A, const CertContext& ctx) {
    if (ctx.qkind() != QKind::Trunc) {
        throw std::invalid_argument("dual_solve_truncated: truncated family only");
    }
    const double nuv = ctx.nu;
    if (P_A < Q_A / nuv - kBoundaryTol || P_A > 1.0 - (1.0 - Q_A) / nuv + kBoundaryTol ||
        Q_A < -kBoundaryTol || Q_A > 1.0 + kBoundaryTol) {
        throw infeasible_error("dual_solve_truncated: (P_A, Q_A) outside the feasible region");
    }
    Q_A = std::clamp(Q_A, 0.0, 1.0);
    P_A = std::clamp(P_A, Q_A / nuv, 1.0 - (1.0 - Q_A) / nuv);

    DualPoint dp;

    // Sum a = lambda1 + nu*lambda2 from the Q constraint.
    if (Q_A <= kBoundaryTol) {
        dp.sum = LogScalar::zero();
        dp.sum_bracket = {-kInf, -kInf};
    } else if (Q_A >= 1.0 - kBoundaryTol) {
        dp.sum = LogScalar::from_log(kInf);
        dp.lambda2 = LogScalar::from_log(kInf);
        dp.sum_bracket = {kInf, kInf};
    } else {
        const Bracket b = log_solve(
            [&](double la) { return compute_Q_sum(LogScalar::from_log(la), ctx); }, Q_A,
            ctx.delta_int, ctx.eps_dual_log);
        dp.sum = LogScalar::from_log(b.lo);
        dp.sum_bracket = {b.lo, b.hi};
    }

    // lambda1 from h(lambda1) = P_A - Q_A/nu.
    const double h_target = P_A - Q_A / nuv;
    const double h_max = 1.0 - 1.0 / nuv;
    if (h_target <= kBoundaryTol) {
        dp.lambda1 = LogScalar::zero();
        dp.lambda1_bracket = {-kInf, -kInf};
    } else if (h_target >= h_max - kBoundaryTol) {
        dp.lambda1 = LogScalar::from_log(kInf);
        dp.lambda1_bracket = {kInf, kInf};
    } else {
        const Bracket b =
            log_solve([&](double ll) { return h(LogScalar::from_log(ll), ctx); }, h_target,
                      ctx.delta_int, ctx.eps_dual_log);
        dp.lambda1 = LogScalar::from_log(b.lo);
        dp.lambda1_bracket = {b.lo, b.hi};
    }

    // lambda2 from the bracket gap (a_lo - lambda1_lo)/nu, clamped at zero.
    // R is jointly nondecreasing in (lambda1, a) at fixed a -- inside the
    // truncation radius q = nu * p, so lambda1 only adds acceptance mass
    // outside it -- hence assembling both variables from the sound lower
    // endpoints keeps R an under-estimate without leaking the lambda1
    // bracket width (which can be large where h is flat) into the sum.
    if (!dp.sum.is_inf() && !dp.sum.is_zero() && !dp.lambda1.is_inf()) {
        const double l1_lo_log = dp.lambda1.sign ? dp.lambda1.log_mag : -kInf;
        const LogScalar gap =
            signed_log_sum({{1.0, dp.sum_bracket.first}, {-1.0, l1_lo_log}});
        if (gap.sign <= 0) {
            dp.lambda2 = LogScalar::zero();
            dp.sum = dp.lambda1;
        } else {
            dp.lambda2 = LogScalar::from_log(gap.log_mag - std::log(nuv));
            dp.sum = signed_log_sum(
                {{1.0, dp.lambda1.sign ? dp.lambda1.log_mag : -kInf}, {1.0, gap.log_mag}});
        }
        if (dp.sum.sign > 0) {
            dp.sum_bracket.first = std::min(dp.sum_bracket.first, dp.sum.log_mag);
        } else {
            dp.sum_bracket.first = -kInf;
        }
    } else if (dp.sum.is_zero()) {
        dp.lambda2 = LogScalar::zero();
    }
    return dp;
}

DualPoint dual_solve_var(double P_A, double Q_A, const CertContext& ctx) {
    if (ctx.qkind() != QKind::Var) {
        throw std::invalid_argument("dual_solve_var: different-variance family only");
    }
    if (P_A < -kBoundaryTol || P_A > 1.0 + kBoundaryTol || Q_A < -kBoundaryTol ||
        Q_A > 1.0 + kBoundaryTol) {
        throw infeasible_error("dual_solve_var: probabilities outside [0, 1]");
    }
    const VarGeom v = var_geom(ctx);
    DualPoint dp;

    if (P_A >= 1.0 - kBoundaryTol || Q_A >= 1.0 - kBoundaryTol) {
        // Saturated constraints have no finite joint solution; the caller
        // falls back to the sound NP value.
        throw abstain_error("dual_solve_var: constraint at saturation");
    }
    if (Q_A <= kBoundaryTol || P_A <= kBoundaryTol) {
        // No usable Q information: single-constraint (NP) solution.
        if (P_A <= kBoundaryTol) {
            dp.lambda1 = dp.lambda2 = dp.sum = LogScalar::zero();
            dp.lambda1_bracket = dp.sum_bracket = {-kInf, -kInf};
            return dp;
        }
        const Bracket b =
            log_solve([&](double ll) { return np_P_val(v.g, LogScalar::from_log(ll)); }, P_A,
                      ctx.delta_int, ctx.eps_dual_log);
        dp.lambda1 = LogScalar::from_log(b.lo);
        dp.lambda2 = LogScalar::zero();
        dp.sum = dp.lambda1;
        dp.lambda1_bracket = dp.sum_bracket = {b.lo, b.hi};
        return dp;
    }

    // The curve P(l1, l2(l1)) = P_A with l2 >= 0 only exists up to the
    // single-constraint solution l1*: beyond it P(l1, 0) already overshoots.
    const Bracket np_b =
        log_solve([&](double ll) { return np_P_val(v.g, LogScalar::from_log(ll)); }, P_A,
                  ctx.delta_int, ctx.eps_dual_log);

    // Joint search: along the curve P(l1, l2(l1)) = P_A the Q value decreases
    // in l1, so bisect l1 on [lo, l1*] and keep the lower endpoints of both
    // variables.
    double lo = kLogDomainLo, hi = np_b.lo;
    double l2_at_hi = var_inner_l2(v, hi, P_A, ctx.eps_dual_log);
    {
        const double q_hi = var_Q_val(v, LogScalar::from_log(hi),
                                      l2_at_hi == -kInf ? LogScalar::zero()
                                                        : LogScalar::from_log(l2_at_hi));
        if (q_hi >= Q_A) {
            // Even at l1* the Q value meets the target: the Q constraint is
            // inactive and the answer is the single-constraint point.
            lo = hi;
        }
    }
    while (hi - lo > ctx.eps_dual_log) {
        const double mid = 0.5 * (lo + hi);
        const double l2mid = var_inner_l2(v, mid, P_A, ctx.eps_dual_log);
        const double qmid = var_Q_val(v, LogScalar::from_log(mid),
                                      l2mid == -kInf ? LogScalar::zero()
                                                     : LogScalar::from_log(l2mid));
        if (qmid < Q_A) {
            hi = mid;
            l2_at_hi = l2mid;
        } else {
            lo = mid;
        }
    }
    dp.lambda1 = LogScalar::from_log(lo);
    dp.lambda2 = l2_at_hi == -kInf ? LogScalar::zero() : LogScalar::from_log(l2_at_hi);
    dp.lambda1_bracket = {lo, hi};
    dp.sum = signed_log_sum({{1.0, dp.lambda1.log_mag},
                             {ctx.nu, dp.lambda2.sign ? dp.lambda2.log_mag : -kInf}});
    dp.sum_bracket = {dp.sum.log_mag, dp.sum.log_mag};
    return dp;
}

std::pair<double, double> worst_case_pa_qa(const ProbBound& p_box, const ProbBound& q_box,
                                           const CertContext& ctx) {
    if (!(p_box.lo >= 0.0 && p_box.lo <= p_box.hi && p_box.hi <= 1.0) ||
        !(q_box.lo >= 0.0 && q_box.lo <= q_box.hi && q_box.hi <= 1.0)) {
        throw std::invalid_argument("worst_case_pa_qa: malformed probability boxes");
    }
    const bool trunc = ctx.qkind() == QKind::Trunc;
    const double nuv = ctx.nu;
    if (trunc && (p_box.hi < q_box.lo / nuv - kBoundaryTol ||
                  p_box.lo > 1.0 - (1.0 - q_box.hi) / nuv + kBoundaryTol)) {
        throw infeasible_error("worst_case_pa_qa: box misses the feasible region");
    }
    const Geom g = geom_of(ctx);
    const VarGeom v = trunc ? VarGeom{} : var_geom(ctx);

    // Q value of the NP-optimal (lambda2 = 0) solution at the P lower bound,
    // under-estimated for soundness.
    double q_under;
    if (p_box.lo >= 1.0 - kBoundaryTol) {
        q_under = 1.0;
    } else if (p_box.lo <= kBoundaryTol) {
        q_under = 0.0;
    } else {
        const Bracket b =
            log_solve([&](double ll) { return np_P_val(g, LogScalar::from_log(ll)); },
                      p_box.lo, ctx.delta_int, ctx.eps_dual_log);
        const LogScalar lam = LogScalar::from_log(b.lo);
        const double q =
            trunc ? compute_Q_sum(lam, ctx) : var_Q_val(v, lam, LogScalar::zero());
        q_under = std::max(0.0, q - ctx.delta_int);
    }
    if (q_under > q_box.lo) return {p_box.lo, std::min(q_under, q_box.hi)};

    // Q-constraint-active branch: P value of the lambda1 = 0 solution at the
    // Q lower bound.
    double p_under;
    if (trunc) {
        p_under = q_box.lo / nuv;  // P(0, mu) = Q(0, mu)/nu identically
    } else if (q_box.lo <= kBoundaryTol) {
        p_under = 0.0;
    } else if (q_box.lo >= 1.0 - kBoundaryTol) {
        p_under = 1.0;
    } else {
        const Bracket b = log_solve(
            [&](double ll) {
                return var_Q_val(v, LogScalar::zero(), LogScalar::from_log(ll));
            },
            q_box.lo, ctx.delta_int, ctx.eps_dual_log);
        p_under = std::max(
            0.0, var_P_val(v, LogScalar::zero(), LogScalar::from_log(b.lo)) - ctx.delta_int);
    }
    double pa = std::max(std::min(p_under, p_box.hi), p_box.lo);
    if (trunc) pa = std::clamp(pa, q_box.lo / nuv, 1.0 - (1.0 - q_box.lo) / nuv);
    return {pa, q_box.lo};
}

double np_radius(double P_A, const SmoothingSpec& p_spec, double r_max, double delta_int,
                 double eps_radius) {
    if (!(P_A >= 0.0 && P_A <= 1.0)) throw std::invalid_argument("np_radius: P_A outside [0,1]");
    if (P_A <= 0.5) return 0.0;
    if (p_spec.family == Family::StandardGaussian) {
        if (P_A >= 1.0) return r_max;
        return std::min(r_max, p_spec.sigma * std_normal_quantile(P_A));
    }
    // Generalized family: binary search on the radius through the
    // single-constraint dual.
    auto ok = [&](double r) {
        const Geom g = geom_of(p_spec, r, delta_int);
        if (P_A >= 1.0 - kBoundaryTol) return true;
        const Bracket b =
            log_solve([&](double ll) { return np_P_val(g, LogScalar::from_log(ll)); }, P_A,
                      delta_int, 1e-9);
        return np_R_val(g, LogScalar::from_log(b.lo)) - delta_int > 0.5;
    };
    double lo = 0.0, hi = r_max;
    if (ok(hi)) return hi;
    while (hi - lo > eps_radius) {
        const double mid = 0.5 * (lo + hi);
        if (ok(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

bool check_radius(double r, const ProbBound& p_box, const ProbBound& q_box,
                  const SmoothingSpec& p_spec, const SmoothingSpec& q_spec, double delta_int,
                  double eps_radius) {
    const CertContext ctx = CertContext::make(p_spec, q_spec, r, delta_int, eps_radius);
    const auto [pa, qa] = worst_case_pa_qa(p_box, q_box, ctx);
    if (pa <= 0.5) return false;
    const DualPoint dual = ctx.qkind() == QKind::Trunc ? dual_solve_truncated(pa, qa, ctx)
                                                       : dual_solve_var(pa, qa, ctx);
    return compute_R(dual, ctx) - delta_int > 0.5;
}

CertOutcome certify(const ProbBound& p_box, const ProbBound& q_box,
                    const SmoothingSpec& p_spec, const SmoothingSpec& q_spec, double r_max,
                    double delta_int, double eps_radius) {
    CertOutcome out;
    try {
        out.radius_np = np_radius(p_box.lo, p_spec, r_max, delta_int, eps_radius);
    } catch (const abstain_error&) {
        out.abstained = true;
        out.diagnostics["np_abstained"] = 1.0;
        return out;
    }
    if (p_box.lo <= 0.5) {
        out.diagnostics["below_half"] = 1.0;
        return out;
    }

    int abstains = 0;
    auto chk = [&](double r) {
        try {
            return check_radius(r, p_box, q_box, p_spec, q_spec, delta_int, eps_radius);
        } catch (const abstain_error&) {
            ++abstains;
            return false;
        }
    };

    double lo = 0.0, hi = r_max;
    if (chk(hi)) {
        lo = hi;
    } else {
        while (hi - lo > eps_radius) {
            const double mid = 0.5 * (lo + hi);
            if (chk(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    out.radius_dsrs = lo;
    out.diagnostics["abstained_checks"] = abstains;
    if (abstains > 0 && out.radius_dsrs < out.radius_np) {
        // Sound fallback: the NP radius never needs the Q machinery.
        out.radius_dsrs = out.radius_np;
        out.diagnostics["np_fallback"] = 1.0;
    }
    return out;
}

}  // namespace dsrs
