#pragma once

#include "dsrs/distributions.hpp"

namespace dsrs {

// Constants of the empirical truncation-radius rule T(P_A).
struct HeuristicConfig {
    double p_floor = 0.5;
    double p_ceiling = 0.999;
    double slope = -0.08;
    double intercept = 0.2;
};

// Truncation radius for Q from the P_A lower bound: the radius whose ball
// mass under the parent distribution is p = clamp(slope·ln(1-pa) + intercept).
double t_from_pa(double pa_lower, const SmoothingSpec& spec,
                 const HeuristicConfig& cfg = {});

// Benchmark-dimension defaults for the generalized shape k, d/2 - 8 elsewhere.
int default_k(int d);

}  // namespace dsrs
