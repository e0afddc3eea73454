#include "dsrs/distributions.hpp"

#include <cmath>
#include <stdexcept>

namespace dsrs {

SmoothingSpec SmoothingSpec::standard(int d, double sigma) {
    SmoothingSpec s{Family::StandardGaussian, d, sigma, 0, 0.0};
    s.validate();
    return s;
}

SmoothingSpec SmoothingSpec::generalized(int d, double sigma, int k) {
    SmoothingSpec s{Family::GeneralizedGaussian, d, sigma, k, 0.0};
    s.validate();
    return s;
}

SmoothingSpec SmoothingSpec::truncated_standard(int d, double sigma, double T) {
    SmoothingSpec s{Family::TruncatedStandardGaussian, d, sigma, 0, T};
    s.validate();
    return s;
}

SmoothingSpec SmoothingSpec::truncated_generalized(int d, double sigma, int k, double T) {
    SmoothingSpec s{Family::TruncatedGeneralizedGaussian, d, sigma, k, T};
    s.validate();
    return s;
}

void SmoothingSpec::validate() const {
    if (d <= 0) throw std::invalid_argument("SmoothingSpec: d must be positive");
    if (!(sigma > 0.0)) throw std::invalid_argument("SmoothingSpec: sigma must be positive");
    if (k < 0) throw std::invalid_argument("SmoothingSpec: k must be nonnegative");
    if (2 * k >= d) throw std::invalid_argument("SmoothingSpec: requires 2k < d");
    const bool generalized =
        family == Family::GeneralizedGaussian || family == Family::TruncatedGeneralizedGaussian;
    if (!generalized && k != 0) {
        throw std::invalid_argument("SmoothingSpec: standard families require k = 0");
    }
    if (truncated() && !(T > 0.0)) {
        throw std::invalid_argument("SmoothingSpec: truncated families require T > 0");
    }
}

double sigma_prime(const SmoothingSpec& spec) {
    return std::sqrt(static_cast<double>(spec.d) / (spec.d - 2.0 * spec.k)) * spec.sigma;
}

double ball_mass(const SmoothingSpec& spec, double R) {
    if (!(R >= 0.0)) throw std::invalid_argument("ball_mass: R must be nonnegative");
    if (R == 0.0) return 0.0;
    const double sp = sigma_prime(spec);
    const double a = spec.shape();
    const double parent = reg_gamma_cdf(a, R * R / (2.0 * sp * sp));
    if (!spec.truncated()) return parent;
    const double tmass = reg_gamma_cdf(a, spec.T * spec.T / (2.0 * sp * sp));
    return std::min(1.0, parent / tmass);
}

double nu(const SmoothingSpec& spec) {
    if (!spec.truncated()) throw std::invalid_argument("nu: spec is not truncated");
    const double sp = sigma_prime(spec);
    return 1.0 / reg_gamma_cdf(spec.shape(), spec.T * spec.T / (2.0 * sp * sp));
}

LogScalar log_radial_density(const SmoothingSpec& spec, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("log_radial_density: r must be positive");
    if (spec.truncated() && r > spec.T) return LogScalar::zero();
    const double sp = sigma_prime(spec);
    const double a = spec.shape();
    // Normalization of ‖ε‖^{-2k} exp(-‖ε‖²/(2σ'²)) over ℝ^d:
    // C = Γ(d/2) / (Γ(d/2-k) · (2σ'²)^{d/2-k} · π^{d/2}).
    double log_c = std::lgamma(0.5 * spec.d) - std::lgamma(a) -
                   a * std::log(2.0 * sp * sp) - 0.5 * spec.d * std::log(M_PI);
    if (spec.truncated()) log_c += std::log(nu(spec));
    return LogScalar::from_log(log_c - 2.0 * spec.k * std::log(r) -
                               r * r / (2.0 * sp * sp));
}

RadialSample sample(const SmoothingSpec& spec, std::mt19937_64& rng, bool with_direction) {
    const double sp = sigma_prime(spec);
    const double a = spec.shape();
    // 53-bit uniform in (0,1), kept away from the endpoints.
    double u = ((rng() >> 11) + 0.5) * 0x1.0p-53;
    double t;
    if (spec.truncated()) {
        // Inverse-CDF conditioning on t ≤ T²/(2σ'²).
        const double tmass = reg_gamma_cdf(a, spec.T * spec.T / (2.0 * sp * sp));
        t = reg_gamma_cdf_inv(a, u * tmass);
    } else {
        t = reg_gamma_cdf_inv(a, u);
    }
    RadialSample out;
    out.radius = sp * std::sqrt(2.0 * t);
    if (spec.truncated() && out.radius > spec.T) out.radius = spec.T;
    if (with_direction) {
        out.direction.resize(spec.d);
        std::normal_distribution<double> gauss(0.0, 1.0);
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (auto& c : out.direction) {
                c = gauss(rng);
                norm2 += c * c;
            }
        } while (norm2 == 0.0);
        const double inv = 1.0 / std::sqrt(norm2);
        for (auto& c : out.direction) c *= inv;
    }
    return out;
}

}  // namespace dsrs
