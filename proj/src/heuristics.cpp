#include "dsrs/heuristics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dsrs/numerics.hpp"

namespace dsrs {

double t_from_pa(double pa_lower, const SmoothingSpec& spec, const HeuristicConfig& cfg) {
    if (!(pa_lower > 0.0 && pa_lower < 1.0)) {
        throw std::invalid_argument("t_from_pa: pa_lower must lie in (0, 1)");
    }
    if (!(cfg.p_floor > 0.0 && cfg.p_floor <= cfg.p_ceiling && cfg.p_ceiling < 1.0)) {
        throw std::invalid_argument("t_from_pa: malformed heuristic config");
    }
    const double p =
        std::clamp(cfg.slope * std::log1p(-pa_lower) + cfg.intercept, cfg.p_floor,
                   cfg.p_ceiling);
    // T = sigma * sqrt((2d/(d-2k)) * GammaCDF^{-1}_{d/2-k}(p)), i.e. the
    // radius with parent ball mass exactly p.
    const double sp = sigma_prime(spec);
    return sp * std::sqrt(2.0 * reg_gamma_cdf_inv(spec.shape(), p));
}

int default_k(int d) {
    switch (d) {
        case 784: return 380;
        case 3072: return 1530;
        case 150528: return 75260;
        default: break;
    }
    if (d < 26) throw std::invalid_argument("default_k: d must be at least 26");
    return d / 2 - 8;
}

}  // namespace dsrs
