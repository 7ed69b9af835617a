#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rsgnet/data.hpp"
#include "rsgnet/networks.hpp"
#include "rsgnet/rng.hpp"
#include "rsgnet/stopping.hpp"

namespace rsgnet {

/// Optimization description for one family of runs. `gamma` is the base
/// stepsize; iteration k uses gamma / k^rho (rho = 0 keeps it constant).
/// `layer_gammas`, when nonempty, overrides the base per layer.
struct TrainConfig {
    int batch_size = 1;   // B
    int iterations = 1;   // N
    double gamma = 0.1;
    double rho = 0.0;
    std::vector<double> layer_gammas;
    double keep_prob = 1.0;  // zeta
    int runs = 1;            // T
    std::uint64_t seed = 0;
    StoppingDistribution stopping;  // empty pmf = uniform over {1..N}
    bool record_trace = false;
    double init_scale = 0.0;  // 0 = min(w_m, 1/sqrt(d_in*d_out)) per layer

    double stepsize(int iteration, int layer = 1) const;
    StoppingDistribution resolved_stopping() const;
    void validate() const;
};

struct RunResult {
    std::vector<WeightMatrix> final_weights;  // W^R per layer
    int stopping_iter = 1;                    // R
    double grad_norm_sq = 0.0;                // (projected) gradient norm^2 on eval set
    std::optional<double> clipped_grad_norm_sq;  // entrywise-clip alternative, boxed runs only
    double initial_objective = 0.0;              // f(W^1) on eval set
    std::vector<double> objective_trace;         // per-iteration batch loss when recorded
    int run_index = 0;
};

/// Evaluation-set view of a network: full-set objective and gradient with
/// all-ones masks; box-constrained layers report the gradient mapping (and the
/// clipped-gradient alternative) instead of the raw gradient.
struct NetEvaluation {
    double objective = 0.0;
    std::vector<Matrix> gradients;  // raw per-layer gradients
    double grad_norm_sq = 0.0;
    std::optional<double> clipped_grad_norm_sq;
};

NetEvaluation evaluate_supervised(const std::vector<WeightMatrix>& weights, const Dataset& eval,
                                  const std::vector<double>& mapping_steps);
NetEvaluation evaluate_autoencoder(const WeightMatrix& weights, const Dataset& eval,
                                   double mapping_step);

/// Forward-only objective averages over the evaluation set.
double supervised_objective(const std::vector<WeightMatrix>& weights, const Dataset& eval);
double autoencoder_objective(const WeightMatrix& weights, const Dataset& eval);

/// Single-layer randomized-stopping mini-batch SGD (spec must have L = 1).
RunResult train_single_rsg(const NetworkSpec& spec, const TrainConfig& config,
                           const Dataset& train, const Dataset& eval, Rng& rng,
                           const std::vector<WeightMatrix>* init = nullptr);

/// Box-constrained denoising-autoencoder RSG: corrupt, step, project.
RunResult train_da_rsg(const NetworkSpec& spec, const TrainConfig& config, double box_limit,
                       const Dataset& train, const Dataset& eval, Rng& rng,
                       const WeightMatrix* init = nullptr);

/// Multi-layer RSG with per-iteration dropout masks and optional pretrained
/// initialization; reduces exactly to train_single_rsg when L = 1, zeta = 1
/// and no layer is box-constrained.
RunResult train_multilayer_rsg(const NetworkSpec& spec, const TrainConfig& config,
                               const std::vector<WeightMatrix>* init, const Dataset& train,
                               const Dataset& eval, Rng& rng);

struct PretrainLayerConfig {
    TrainConfig config;
    double box_limit = 0.1;  // w_m
};

struct PretrainSpec {
    std::vector<PretrainLayerConfig> layers;  // size L-1, or size 1 broadcast to all
    double target_alpha = 0.0;                // per-layer gradient-mapping norm^2 target
    double target_delta = 0.05;               // recorded; not enforced separately
};

struct PretrainResult {
    std::vector<WeightMatrix> weights;    // W_1..W_{L-1}
    std::vector<double> achieved_norms;   // minimal mapping norm^2 per layer
    bool reached_target = false;
};

/// Layer-wise DA pretraining: layer 1 on the inputs, layer l on the previous
/// deterministic hidden representation. Each layer runs best-of-T until the
/// target alpha is met or the run budget is exhausted (that case is reported,
/// not thrown).
PretrainResult pretrain_layers(const NetworkSpec& spec, const PretrainSpec& pretrain,
                               const Dataset& train, Rng& rng);

/// Argmin of grad_norm_sq; ties break to the lowest run index.
std::size_t best_of_T_index(const std::vector<RunResult>& runs);
const RunResult& best_of_T(const std::vector<RunResult>& runs);

enum class ProblemKind { SingleLayer, Autoencoder, MultiLayer };

struct GradNormEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::vector<double> per_trajectory;
};

/// Monte-Carlo estimate of E_{R,eta} |grad f(W^R)|^2: exact pmf weighting over
/// the stopping index, M independent trajectories over the data draws. All
/// trajectories share one initial W^1 so the estimate conditions on it the way
/// the bounds do.
///
/// Stream contract: the estimator draws base = rng() once; a missing init is
/// drawn from make_rng(derive_seed(base, 0)) and trajectory m runs on
/// make_rng(derive_seed(base, m + 1)). Each trajectory consumes one stopping
/// draw before its batch/mask draws, so a trainer run seeded with the same
/// trajectory engine and a point-mass stopping pmf at k reproduces iterate k
/// of that trajectory exactly.
GradNormEstimate estimate_expected_grad_norm(ProblemKind kind, const NetworkSpec& spec,
                                             const TrainConfig& config, int trajectories,
                                             const Dataset& train, const Dataset& eval, Rng& rng,
                                             const std::vector<WeightMatrix>* init = nullptr);

}  // namespace rsgnet
