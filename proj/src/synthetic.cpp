#include "dsrs/synthetic.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "dsrs/numerics.hpp"
#include "dsrs/quadrature.hpp"

namespace dsrs {

double analytic_shifted_prob(const BallClassifier& clf, const SmoothingSpec& p_spec,
                             double u, double delta_int) {
    if (!(u >= 0.0)) throw std::invalid_argument("analytic_shifted_prob: u must be nonnegative");
    if (clf.T_true <= 0.0) return 0.0;
    if (u == 0.0) return ball_mass(p_spec, clf.T_true);
    const double sp = sigma_prime(p_spec);
    const double T2 = clf.T_true * clf.T_true;
    const double half_d = 0.5 * (p_spec.d - 1.0);
    auto cap = [&](double t) {
        const double rho = sp * std::sqrt(2.0 * t);
        return reg_beta_cdf_sym(half_d, (T2 - (rho - u) * (rho - u)) / (4.0 * u * rho));
    };
    if (!p_spec.truncated()) {
        return gamma_expectation(p_spec.shape(), delta_int, cap);
    }
    // Truncated law: condition the radial gamma on t <= T^2/(2 sigma'^2).
    const double ts = p_spec.T * p_spec.T / (2.0 * sp * sp);
    const double nuv = nu(p_spec);
    return gamma_expectation(
        p_spec.shape(), delta_int, [&](double t) { return t <= ts ? nuv * cap(t) : 0.0; },
        {ts});
}

double true_radius(const BallClassifier& clf, const SmoothingSpec& p_spec, double eps_radius,
                   double delta_int) {
    if (analytic_shifted_prob(clf, p_spec, 0.0, delta_int) <= 0.5) return 0.0;
    double lo = 0.0;
    double hi = sigma_prime(p_spec) * std::sqrt(static_cast<double>(p_spec.d)) + clf.T_true;
    for (int it = 0; analytic_shifted_prob(clf, p_spec, hi, delta_int) > 0.5; ++it) {
        if (it >= 200) return hi;  // effectively unbounded radius
        lo = hi;
        hi *= 2.0;
    }
    while (hi - lo > eps_radius) {
        const double mid = 0.5 * (lo + hi);
        if (analytic_shifted_prob(clf, p_spec, mid, delta_int) > 0.5) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

std::pair<double, double> exact_pa_qa(const BallClassifier& clf, const SmoothingSpec& p_spec,
                                      const SmoothingSpec& q_spec) {
    return {ball_mass(p_spec, clf.T_true), ball_mass(q_spec, clf.T_true)};
}

SamplingRecord mc_sample_classifier(const BallClassifier& clf, const SmoothingSpec& spec,
                                    long long N, std::uint64_t seed) {
    if (N < 1) throw std::invalid_argument("mc_sample_classifier: N must be positive");
    std::mt19937_64 rng(seed);
    SamplingRecord rec;
    rec.trials = N;
    for (long long i = 0; i < N; ++i) {
        if (sample(spec, rng).radius <= clf.T_true) ++rec.successes;
    }
    return rec;
}

}  // namespace dsrs
