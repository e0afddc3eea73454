#pragma once

#include <utility>

namespace dsrs {

struct SamplingRecord {
    long long trials = 0;
    long long successes = 0;
};

// Two-sided probability interval with its confidence budget.
struct ProbBound {
    double lo = 0.0;
    double hi = 1.0;
    double confidence = 0.0;  // 1 - allocated alpha
};

enum class Sidedness { two_sided, lower_only };

// Exact (Clopper-Pearson) binomial bounds.  two_sided splits alpha evenly per
// side; lower_only spends the whole budget on the lower bound and returns hi = 1.
ProbBound binom_interval(const SamplingRecord& rec, double alpha, Sidedness side);

// Evenly split the total budget between the P and Q estimates (union bound).
std::pair<double, double> split_budget(double alpha_total);

// True iff the empirical P estimate is exactly 1, in which case callers merge
// both sampling budgets into a single P-only record and certify via NP.
bool fallback_decision(const SamplingRecord& p_record);

}  // namespace dsrs
