#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>

#include "dsrs/confidence.hpp"
#include "dsrs/distributions.hpp"
#include "dsrs/numerics.hpp"
#include "dsrs/quadrature.hpp"

namespace dsrs {

// (P_A, Q_A) outside the region reachable by any classifier under (P, Q).
struct infeasible_error : std::runtime_error {
    explicit infeasible_error(const std::string& what) : std::runtime_error(what) {}
};

// How the additional distribution Q relates to P: truncation of P's family at
// radius T, or the same generalized family with a different noise level.
enum class QKind { Trunc, Var };

// Everything needed to evaluate the dual integrands at one candidate radius.
struct CertContext {
    SmoothingSpec p_spec;  // non-truncated
    SmoothingSpec q_spec;  // truncated same-shape, or generalized with beta != sigma
    double r = 0.0;        // candidate l2 radius (delta = (r, 0, ..., 0))
    double nu = 1.0;       // truncation constant; 1 for the var family
    double delta_int = 1.5e-8;   // absolute quadrature tolerance
    double eps_dual_log = 1e-9;  // dual binary-search precision (log domain)
    double eps_radius = 1e-4;    // radius binary-search precision

    static CertContext make(const SmoothingSpec& p_spec, const SmoothingSpec& q_spec,
                            double r, double delta_int = 1.5e-8,
                            double eps_radius = 1e-4);

    QKind qkind() const { return q_spec.truncated() ? QKind::Trunc : QKind::Var; }
    double sp() const { return sigma_prime(p_spec); }
    double bq() const { return sigma_prime(q_spec); }
    // Gamma-domain breakpoint of the truncation: t* = T^2 / (2 sigma'^2).
    double t_star() const;
};

// Dual variables with the bracket endpoints that make the reported value a
// sound under-estimate.  A log_mag of +inf encodes a saturated variable
// (degenerate boundary case); brackets are in the log domain.
struct DualPoint {
    LogScalar lambda1;
    LogScalar lambda2;
    LogScalar sum;  // a = lambda1 + nu * lambda2, as used by the integrands
    std::pair<double, double> lambda1_bracket{0.0, 0.0};
    std::pair<double, double> sum_bracket{0.0, 0.0};
};

struct CertOutcome {
    double radius_np = 0.0;
    double radius_dsrs = 0.0;
    bool abstained = false;
    std::map<std::string, double> diagnostics;
};

// Integrands of the truncated-family dual (probabilities of sphere caps).
double u3(double t, const LogScalar& lambda, const CertContext& ctx);
double u1(double t, const LogScalar& a, const CertContext& ctx);
double u2(double t, const LogScalar& lambda1, const CertContext& ctx);

// The three dual functionals P, Q, R (gamma expectations to delta_int).
double compute_P(const DualPoint& dual, const CertContext& ctx);
double compute_Q(const DualPoint& dual, const CertContext& ctx);
double compute_R(const DualPoint& dual, const CertContext& ctx);

// h(lambda1) = P - Q/nu = E[u3(t, lambda1) ; t >= t*], nondecreasing,
// with range [0, 1 - 1/nu].  Truncated family only.
double h(const LogScalar& lambda1, const CertContext& ctx);

// Nested binary search: a = lambda1 + nu*lambda2 against Q_A, then lambda1
// against h = P_A - Q_A/nu, with sound bracket expansion; boundary values
// dispatch to the degenerate handlers.
DualPoint dual_solve_truncated(double P_A, double Q_A, const CertContext& ctx);

// Joint binary search for the different-variance family (unique feasible pair).
DualPoint dual_solve_var(double P_A, double Q_A, const CertContext& ctx);

// Worst-case (P_A, Q_A) over the confidence box (the primal minimizer).
std::pair<double, double> worst_case_pa_qa(const ProbBound& p_box, const ProbBound& q_box,
                                           const CertContext& ctx);

// Neyman-Pearson baseline radius from P_A alone: closed form for the standard
// Gaussian, single-constraint dual search otherwise.
double np_radius(double P_A, const SmoothingSpec& p_spec, double r_max,
                 double delta_int = 1.5e-8, double eps_radius = 1e-4);

// True iff the sound dual value at radius r exceeds 1/2 by more than the
// quadrature margin.  Throws abstain_error when tolerances cannot be met.
bool check_radius(double r, const ProbBound& p_box, const ProbBound& q_box,
                  const SmoothingSpec& p_spec, const SmoothingSpec& q_spec,
                  double delta_int = 1.5e-8, double eps_radius = 1e-4);

// Outer radius binary search on [0, r_max]; left endpoint (sound).
CertOutcome certify(const ProbBound& p_box, const ProbBound& q_box,
                    const SmoothingSpec& p_spec, const SmoothingSpec& q_spec,
                    double r_max, double delta_int = 1.5e-8, double eps_radius = 1e-4);

}  // namespace dsrs
