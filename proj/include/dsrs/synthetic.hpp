#pragma once

#include <cstdint>
#include <utility>

#include "dsrs/confidence.hpp"
#include "dsrs/distributions.hpp"

namespace dsrs {

// Base classifier that predicts the true class exactly on the ball
// ‖x - x0‖ <= T_true (x0 at the origin by isotropy).  Its smoothed prediction
// probability has a closed-form gamma-beta expectation, giving analytic
// ground truth for the certification pipeline.
struct BallClassifier {
    double T_true = 1.0;
    int d = 1;
};

// Pr_{eps ~ p_spec}[‖(x0 + u·e1) + eps - x0‖ <= T_true]: prediction
// probability at a point shifted by u from the center.
double analytic_shifted_prob(const BallClassifier& clf, const SmoothingSpec& p_spec,
                             double u, double delta_int = 1.5e-8);

// Largest shift u with shifted probability > 1/2 (the exact robust radius).
double true_radius(const BallClassifier& clf, const SmoothingSpec& p_spec,
                   double eps_radius = 1e-4, double delta_int = 1.5e-8);

// Exact prediction probabilities under P and Q at the clean input.
std::pair<double, double> exact_pa_qa(const BallClassifier& clf, const SmoothingSpec& p_spec,
                                      const SmoothingSpec& q_spec);

// Draw N radii from spec's radial law and count hits inside the ball.
SamplingRecord mc_sample_classifier(const BallClassifier& clf, const SmoothingSpec& spec,
                                    long long N, std::uint64_t seed);

}  // namespace dsrs
