#pragma once

#include <vector>

#include "rsgnet/rng.hpp"

namespace rsgnet {

enum class StoppingKind { Uniform, StepsizeCoupled, Custom };

/// Normalized pmf over the stopping iteration R in {1..N}.
struct StoppingDistribution {
    StoppingKind kind = StoppingKind::Uniform;
    int max_iterations = 1;   // N
    std::vector<double> pmf;  // p^1..p^N, sums to 1

    void validate() const;
};

/// Uniform: p^k = 1/N. Stepsize-coupled: p^k proportional to
/// gamma^k (1 - (13/16) gamma^k) with gamma^k = gamma / k^rho, which requires
/// gamma^k < 16/13 at every k.
StoppingDistribution build_stopping(StoppingKind kind, int max_iterations, double gamma = 0.0,
                                    double rho = 0.0);

StoppingDistribution custom_stopping(std::vector<double> weights);

/// Point mass at a single iteration (used to pin trajectories in tests).
StoppingDistribution point_stopping(int max_iterations, int at);

/// Inverse-CDF draw; consumes exactly one uniform variate.
int sample_stopping(const StoppingDistribution& dist, Rng& rng);

}  // namespace rsgnet
