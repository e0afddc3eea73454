#include "dsrs/confidence.hpp"

#include <stdexcept>

#include "dsrs/numerics.hpp"

namespace dsrs {

ProbBound binom_interval(const SamplingRecord& rec, double alpha, Sidedness side) {
    if (rec.trials <= 0 || rec.successes < 0 || rec.successes > rec.trials) {
        throw std::invalid_argument("binom_interval: malformed sampling record");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("binom_interval: alpha must lie in (0, 1)");
    }
    const double n = static_cast<double>(rec.trials);
    const double s = static_cast<double>(rec.successes);
    const double a_side = (side == Sidedness::two_sided) ? 0.5 * alpha : alpha;

    ProbBound out;
    out.confidence = 1.0 - alpha;
    // Lower bound: p with Pr[X >= s | p] = a_side, i.e. I_p(s, n-s+1) = a_side.
    out.lo = (rec.successes == 0) ? 0.0 : detail::reg_beta_cdf_inv(s, n - s + 1.0, a_side);
    if (side == Sidedness::lower_only) {
        out.hi = 1.0;
        return out;
    }
    // Upper bound: p with Pr[X <= s | p] = a_side, i.e. I_p(s+1, n-s) = 1 - a_side.
    out.hi = (rec.successes == rec.trials)
                 ? 1.0
                 : detail::reg_beta_cdf_inv(s + 1.0, n - s, 1.0 - a_side);
    return out;
}

std::pair<double, double> split_budget(double alpha_total) {
    if (!(alpha_total > 0.0 && alpha_total < 1.0)) {
        throw std::invalid_argument("split_budget: alpha must lie in (0, 1)");
    }
    return {0.5 * alpha_total, 0.5 * alpha_total};
}

bool fallback_decision(const SamplingRecord& p_record) {
    if (p_record.trials <= 0 || p_record.successes < 0 || p_record.successes > p_record.trials) {
        throw std::invalid_argument("fallback_decision: malformed sampling record");
    }
    return p_record.successes == p_record.trials;
}

}  // namespace dsrs
