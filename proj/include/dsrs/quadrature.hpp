#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

namespace dsrs {

// Raised when a numerical tolerance cannot be met; callers treat it as an
// abstention (the certification falls back to a sound default).
struct abstain_error : std::runtime_error {
    explicit abstain_error(const std::string& what) : std::runtime_error(what) {}
};

// E_{t ~ Gamma(shape, 1)}[f(t)] by adaptive Gauss-Kronrod quadrature to the
// given absolute tolerance.  The semi-infinite domain is truncated where the
// gamma tails fall below ~1e-15 of mass; `breakpoints` marks known kinks of f
// (piecewise definitions, indicator edges) that seed the initial partition.
// Throws abstain_error if the tolerance cannot be reached.
double gamma_expectation(double shape, double tol, const std::function<double(double)>& f,
                         const std::vector<double>& breakpoints = {});

}  // namespace dsrs
