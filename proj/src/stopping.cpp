#include "rsgnet/stopping.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rsgnet {

void StoppingDistribution::validate() const {
    if (max_iterations < 1) throw std::invalid_argument("stopping needs N >= 1");
    if (static_cast<int>(pmf.size()) != max_iterations)
        throw std::invalid_argument("stopping pmf size must equal N");
    double sum = 0.0;
    for (double p : pmf) {
        if (p < 0.0) throw std::invalid_argument("stopping pmf entries must be >= 0");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("stopping pmf must sum to 1");
}

namespace {

StoppingDistribution normalized(StoppingKind kind, std::vector<double> weights) {
    double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (sum <= 0.0) throw std::invalid_argument("stopping weights must have positive mass");
    for (double& w : weights) w /= sum;
    StoppingDistribution dist{kind, static_cast<int>(weights.size()), std::move(weights)};
    dist.validate();
    return dist;
}

}  // namespace

StoppingDistribution build_stopping(StoppingKind kind, int max_iterations, double gamma,
                                    double rho) {
    if (max_iterations < 1) throw std::invalid_argument("stopping needs N >= 1");
    std::vector<double> weights(static_cast<std::size_t>(max_iterations));
    switch (kind) {
        case StoppingKind::Uniform:
            std::fill(weights.begin(), weights.end(), 1.0);
            break;
        case StoppingKind::StepsizeCoupled: {
            if (gamma <= 0.0) throw std::invalid_argument("stepsize-coupled stopping needs gamma > 0");
            for (int k = 1; k <= max_iterations; ++k) {
                const double gk = gamma / std::pow(static_cast<double>(k), rho);
                if (gk >= 16.0 / 13.0)
                    throw std::invalid_argument(
                        "stepsize-coupled stopping needs gamma/k^rho < 16/13; violated at k=" +
                        std::to_string(k));
                weights[k - 1] = gk * (1.0 - 13.0 / 16.0 * gk);
            }
            break;
        }
        case StoppingKind::Custom:
            throw std::invalid_argument("custom stopping takes explicit weights");
    }
    return normalized(kind, std::move(weights));
}

StoppingDistribution custom_stopping(std::vector<double> weights) {
    if (weights.empty()) throw std::invalid_argument("stopping needs N >= 1");
    for (double w : weights)
        if (w < 0.0) throw std::invalid_argument("stopping weights must be >= 0");
    return normalized(StoppingKind::Custom, std::move(weights));
}

StoppingDistribution point_stopping(int max_iterations, int at) {
    if (at < 1 || at > max_iterations)
        throw std::invalid_argument("point stopping iteration out of range");
    std::vector<double> weights(static_cast<std::size_t>(max_iterations), 0.0);
    weights[at - 1] = 1.0;
    return normalized(StoppingKind::Custom, std::move(weights));
}

int sample_stopping(const StoppingDistribution& dist, Rng& rng) {
    dist.validate();
    const double u = uniform01(rng);
    double acc = 0.0;
    for (int k = 1; k <= dist.max_iterations; ++k) {
        acc += dist.pmf[k - 1];
        if (u < acc) return k;
    }
    return dist.max_iterations;  // guard against accumulated rounding
}

}  // namespace rsgnet
