#pragma once

#include <random>
#include <vector>

#include "dsrs/numerics.hpp"

namespace dsrs {

enum class Family {
    StandardGaussian,
    GeneralizedGaussian,
    TruncatedStandardGaussian,
    TruncatedGeneralizedGaussian,
};

// One of the four isotropic smoothing families: density ∝ ‖ε‖^{-2k} exp(-‖ε‖²/(2σ'²)),
// optionally restricted to the ball ‖ε‖ ≤ T, with σ' = √(d/(d-2k))·σ.
struct SmoothingSpec {
    Family family = Family::StandardGaussian;
    int d = 1;
    double sigma = 1.0;
    int k = 0;      // 0 for the standard families
    double T = 0.0; // truncation radius, truncated families only

    static SmoothingSpec standard(int d, double sigma);
    static SmoothingSpec generalized(int d, double sigma, int k);
    static SmoothingSpec truncated_standard(int d, double sigma, double T);
    static SmoothingSpec truncated_generalized(int d, double sigma, int k, double T);

    bool truncated() const {
        return family == Family::TruncatedStandardGaussian ||
               family == Family::TruncatedGeneralizedGaussian;
    }
    // Shape of the radial gamma law: radius = σ'·√(2t) with t ~ Γ(d/2 - k, 1).
    double shape() const { return 0.5 * d - k; }

    void validate() const;  // throws std::invalid_argument on malformed specs
};

struct RadialSample {
    double radius = 0.0;
    std::vector<double> direction;  // unit vector; empty unless requested
};

double sigma_prime(const SmoothingSpec& spec);

// Pr[‖ε‖ ≤ R]; conditional mass for truncated families.
double ball_mass(const SmoothingSpec& spec, double R);

// Truncation constant ν = 1 / (parent mass of the T-ball) > 1.
double nu(const SmoothingSpec& spec);

// Log of the normalized d-dimensional density at any point of norm r.
// Returns the zero LogScalar beyond the truncation radius.
LogScalar log_radial_density(const SmoothingSpec& spec, double r);

RadialSample sample(const SmoothingSpec& spec, std::mt19937_64& rng,
                    bool with_direction = false);

}  // namespace dsrs
