#include "rsgnet/trainer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rsgnet {

double TrainConfig::stepsize(int iteration, int layer) const {
    double base = gamma;
    if (!layer_gammas.empty()) base = layer_gammas.at(static_cast<std::size_t>(layer) - 1);
    if (rho == 0.0) return base;
    return base / std::pow(static_cast<double>(iteration), rho);
}

StoppingDistribution TrainConfig::resolved_stopping() const {
    if (stopping.pmf.empty()) return build_stopping(StoppingKind::Uniform, iterations);
    if (stopping.max_iterations != iterations)
        throw std::invalid_argument("stopping distribution N does not match iterations");
    return stopping;
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (gamma <= 0.0) throw std::invalid_argument("gamma must be > 0");
    for (double g : layer_gammas)
        if (g <= 0.0) throw std::invalid_argument("layer gammas must be > 0");
    if (rho < 0.0) throw std::invalid_argument("rho must be >= 0");
    if (!(keep_prob > 0.0 && keep_prob <= 1.0))
        throw std::invalid_argument("keep_prob must lie in (0,1]");
    if (runs < 1) throw std::invalid_argument("runs must be >= 1");
    if (!stopping.pmf.empty()) resolved_stopping().validate();
}

namespace {

double default_init_scale(int d_in, int d_out, std::optional<double> box_limit) {
    double s = 1.0 / std::sqrt(static_cast<double>(d_in) * static_cast<double>(d_out));
    if (box_limit) s = std::min(s, *box_limit);
    return s;
}

WeightMatrix draw_weights(int rows, int cols, double scale, std::optional<double> box_limit,
                          Rng& rng) {
    WeightMatrix W{Matrix(rows, cols), box_limit};
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) W.entries(r, c) = uniform_range(rng, -scale, scale);
    return W;
}

std::vector<WeightMatrix> initial_weights(const NetworkSpec& spec, const TrainConfig& config,
                                          const std::vector<WeightMatrix>* init, Rng& rng) {
    const int L = spec.layer_count();
    std::vector<WeightMatrix> weights;
    weights.reserve(static_cast<std::size_t>(L));
    if (init) {
        if (static_cast<int>(init->size()) != L)
            throw std::invalid_argument("init weight count does not match layer count");
        for (int l = 1; l <= L; ++l) {
            const WeightMatrix& w = (*init)[static_cast<std::size_t>(l) - 1];
            if (w.rows() != spec.widths[static_cast<std::size_t>(l)] ||
                w.cols() != spec.widths[static_cast<std::size_t>(l) - 1])
                throw std::invalid_argument("init shape mismatch at layer " + std::to_string(l));
            WeightMatrix copy{w.entries, spec.box_limit_for(l)};
            if (copy.box_limit) project_box_in_place(copy);
            weights.push_back(std::move(copy));
        }
        return weights;
    }
    for (int l = 1; l <= L; ++l) {
        const int d_in = spec.widths[static_cast<std::size_t>(l) - 1];
        const int d_out = spec.widths[static_cast<std::size_t>(l)];
        const auto box = spec.box_limit_for(l);
        const double scale =
            config.init_scale > 0.0 ? config.init_scale : default_init_scale(d_in, d_out, box);
        weights.push_back(draw_weights(d_out, d_in, scale, box, rng));
    }
    return weights;
}

void check_finite(const std::vector<WeightMatrix>& weights, int iteration) {
    for (const auto& w : weights)
        if (!w.entries.allFinite())
            throw std::runtime_error("numeric divergence at iteration " +
                                     std::to_string(iteration));
}

using IterateCallback = std::function<void(int iterate, const std::vector<WeightMatrix>&)>;

/// Shared supervised loop. Always draws R (stream stays aligned across uses);
/// runs forced_updates instead of R-1 when forced_updates >= 0.
struct LoopOutput {
    std::vector<WeightMatrix> weights;
    int stopping_iter = 1;
    std::vector<double> trace;
};

LoopOutput supervised_loop(const NetworkSpec& spec, const TrainConfig& config,
                           const Dataset& train, Rng& rng, const std::vector<WeightMatrix>* init,
                           int forced_updates, const IterateCallback& on_iterate) {
    spec.validate();
    config.validate();
    train.validate();
    if (!train.targets) throw std::invalid_argument("supervised training needs targets");
    if (train.input_dim() != spec.widths.front() || train.target_dim() != spec.widths.back())
        throw std::invalid_argument("dataset dims do not match network widths");

    const int L = spec.layer_count();
    LoopOutput out;
    out.weights = initial_weights(spec, config, init, rng);

    const auto stopping = config.resolved_stopping();
    out.stopping_iter = sample_stopping(stopping, rng);
    const int updates = forced_updates >= 0 ? forced_updates : out.stopping_iter - 1;

    if (on_iterate) on_iterate(1, out.weights);

    std::vector<DropoutMask> masks;
    std::vector<Matrix> grad_sum(static_cast<std::size_t>(L));
    for (int k = 1; k <= updates; ++k) {
        const auto idx = sample_indices(train.size(), config.batch_size, rng);
        if (config.keep_prob < 1.0) {
            masks.clear();
            for (int l = 0; l < L; ++l)
                masks.push_back(sample_mask(out.weights[static_cast<std::size_t>(l)].cols(),
                                            config.keep_prob, rng));
        }
        for (auto& g : grad_sum) g.setZero(0, 0);
        double batch_loss = 0.0;
        for (int i : idx) {
            const Sample s = train.sample(i);
            LayeredLossGrad lg = loss_and_grad_lnn(out.weights, s, masks);
            batch_loss += lg.loss;
            for (int l = 0; l < L; ++l) {
                if (grad_sum[static_cast<std::size_t>(l)].size() == 0)
                    grad_sum[static_cast<std::size_t>(l)] = std::move(lg.grads[static_cast<std::size_t>(l)]);
                else
                    grad_sum[static_cast<std::size_t>(l)] += lg.grads[static_cast<std::size_t>(l)];
            }
        }
        const double inv_b = 1.0 / static_cast<double>(config.batch_size);
        for (int l = 1; l <= L; ++l) {
            auto& W = out.weights[static_cast<std::size_t>(l) - 1];
            W.entries -= config.stepsize(k, l) * inv_b * grad_sum[static_cast<std::size_t>(l) - 1];
            if (W.box_limit) project_box_in_place(W);
        }
        check_finite(out.weights, k);
        if (config.record_trace) out.trace.push_back(batch_loss * inv_b);
        if (on_iterate) on_iterate(k + 1, out.weights);
    }
    return out;
}

LoopOutput autoencoder_loop(const NetworkSpec& spec, const TrainConfig& config, double box_limit,
                            const Dataset& train, Rng& rng, const WeightMatrix* init,
                            int forced_updates, const IterateCallback& on_iterate) {
    spec.validate();
    config.validate();
    train.validate();
    if (spec.layer_count() != 1)
        throw std::invalid_argument("autoencoder spec is one encoding layer (widths d_x, d_h)");
    if (box_limit <= 0.0) throw std::invalid_argument("autoencoder needs box limit > 0");
    if (train.input_dim() != spec.widths.front())
        throw std::invalid_argument("dataset dims do not match autoencoder input width");

    const int d_x = spec.widths[0];
    const int d_h = spec.widths[1];
    LoopOutput out;
    if (init) {
        if (init->rows() != d_h || init->cols() != d_x)
            throw std::invalid_argument("init shape mismatch for autoencoder");
        WeightMatrix W{init->entries, box_limit};
        project_box_in_place(W);
        out.weights.push_back(std::move(W));
    } else {
        const double scale = config.init_scale > 0.0
                                 ? config.init_scale
                                 : default_init_scale(d_x, d_h, box_limit);
        out.weights.push_back(draw_weights(d_h, d_x, scale, box_limit, rng));
    }

    const auto stopping = config.resolved_stopping();
    out.stopping_iter = sample_stopping(stopping, rng);
    const int updates = forced_updates >= 0 ? forced_updates : out.stopping_iter - 1;

    if (on_iterate) on_iterate(1, out.weights);

    for (int k = 1; k <= updates; ++k) {
        const auto idx = sample_indices(train.size(), config.batch_size, rng);
        Matrix grad_sum = Matrix::Zero(d_h, d_x);
        double batch_loss = 0.0;
        for (int i : idx) {
            const Vector x = train.inputs.row(i).transpose();
            const DropoutMask mask = sample_mask(x.size(), config.keep_prob, rng);
            LossGrad lg = loss_and_grad_da(out.weights[0], x, mask);
            batch_loss += lg.loss;
            grad_sum += lg.grad;
        }
        const double inv_b = 1.0 / static_cast<double>(config.batch_size);
        auto& W = out.weights[0];
        W.entries -= config.stepsize(k) * inv_b * grad_sum;
        project_box_in_place(W);
        check_finite(out.weights, k);
        if (config.record_trace) out.trace.push_back(batch_loss * inv_b);
        if (on_iterate) on_iterate(k + 1, out.weights);
    }
    return out;
}

}  // namespace

NetEvaluation evaluate_supervised(const std::vector<WeightMatrix>& weights, const Dataset& eval,
                                  const std::vector<double>& mapping_steps) {
    eval.validate();
    if (!eval.targets) throw std::invalid_argument("evaluation set needs targets");
    if (mapping_steps.size() != weights.size())
        throw std::invalid_argument("need one mapping step per layer");

    const int L = static_cast<int>(weights.size());
    NetEvaluation ev;
    ev.gradients.assign(static_cast<std::size_t>(L), Matrix());
    for (int l = 0; l < L; ++l)
        ev.gradients[static_cast<std::size_t>(l)] =
            Matrix::Zero(weights[static_cast<std::size_t>(l)].rows(),
                         weights[static_cast<std::size_t>(l)].cols());
    for (int i = 0; i < eval.size(); ++i) {
        LayeredLossGrad lg = loss_and_grad_lnn(weights, eval.sample(i), {});
        ev.objective += lg.loss;
        for (int l = 0; l < L; ++l) ev.gradients[static_cast<std::size_t>(l)] += lg.grads[static_cast<std::size_t>(l)];
    }
    const double inv_s = 1.0 / static_cast<double>(eval.size());
    ev.objective *= inv_s;

    bool any_box = false;
    double clipped = 0.0;
    for (int l = 0; l < L; ++l) {
        auto& g = ev.gradients[static_cast<std::size_t>(l)];
        g *= inv_s;
        const auto& W = weights[static_cast<std::size_t>(l)];
        if (W.box_limit) {
            any_box = true;
            ev.grad_norm_sq += gradient_mapping(W, g, mapping_steps[static_cast<std::size_t>(l)]).squaredNorm();
            clipped += clip_entries(g, *W.box_limit).squaredNorm();
        } else {
            ev.grad_norm_sq += g.squaredNorm();
            clipped += g.squaredNorm();
        }
    }
    if (any_box) ev.clipped_grad_norm_sq = clipped;
    return ev;
}

NetEvaluation evaluate_autoencoder(const WeightMatrix& weights, const Dataset& eval,
                                   double mapping_step) {
    eval.validate();
    NetEvaluation ev;
    Matrix grad = Matrix::Zero(weights.rows(), weights.cols());
    const DropoutMask full = ones_mask(weights.cols());
    for (int i = 0; i < eval.size(); ++i) {
        const Vector x = eval.inputs.row(i).transpose();
        LossGrad lg = loss_and_grad_da(weights, x, full);
        ev.objective += lg.loss;
        grad += lg.grad;
    }
    const double inv_s = 1.0 / static_cast<double>(eval.size());
    ev.objective *= inv_s;
    grad *= inv_s;
    ev.grad_norm_sq = gradient_mapping(weights, grad, mapping_step).squaredNorm();
    ev.clipped_grad_norm_sq = clip_entries(grad, *weights.box_limit).squaredNorm();
    ev.gradients.push_back(std::move(grad));
    return ev;
}

double supervised_objective(const std::vector<WeightMatrix>& weights, const Dataset& eval) {
    eval.validate();
    if (!eval.targets) throw std::invalid_argument("evaluation set needs targets");
    double sum = 0.0;
    for (int i = 0; i < eval.size(); ++i) {
        Vector h = eval.inputs.row(i).transpose();
        for (const auto& w : weights) h = sigmoid(Vector(w.entries * h));
        sum += (h - eval.targets->row(i).transpose()).squaredNorm();
    }
    return sum / static_cast<double>(eval.size());
}

double autoencoder_objective(const WeightMatrix& weights, const Dataset& eval) {
    eval.validate();
    double sum = 0.0;
    for (int i = 0; i < eval.size(); ++i) {
        const Vector x = eval.inputs.row(i).transpose();
        const Vector h = sigmoid(Vector(weights.entries * x));
        const Vector p = sigmoid(Vector(weights.entries.transpose() * h));
        sum += (p - x).squaredNorm();
    }
    return sum / static_cast<double>(eval.size());
}

namespace {

std::vector<double> mapping_steps_at(const TrainConfig& config, int iteration, int layers) {
    std::vector<double> steps(static_cast<std::size_t>(layers));
    for (int l = 1; l <= layers; ++l)
        steps[static_cast<std::size_t>(l) - 1] = config.stepsize(iteration, l);
    return steps;
}

RunResult finish_supervised(const NetworkSpec& spec, const TrainConfig& config, LoopOutput&& loop,
                            const Dataset& eval) {
    RunResult result;
    result.stopping_iter = loop.stopping_iter;
    result.objective_trace = std::move(loop.trace);
    const auto steps = mapping_steps_at(config, loop.stopping_iter, spec.layer_count());
    NetEvaluation ev = evaluate_supervised(loop.weights, eval, steps);
    result.grad_norm_sq = ev.grad_norm_sq;
    result.clipped_grad_norm_sq = ev.clipped_grad_norm_sq;
    result.final_weights = std::move(loop.weights);
    return result;
}

}  // namespace

RunResult train_single_rsg(const NetworkSpec& spec, const TrainConfig& config,
                           const Dataset& train, const Dataset& eval, Rng& rng,
                           const std::vector<WeightMatrix>* init) {
    if (spec.layer_count() != 1)
        throw std::invalid_argument("train_single_rsg needs a single-layer spec");
    return train_multilayer_rsg(spec, config, init, train, eval, rng);
}

RunResult train_multilayer_rsg(const NetworkSpec& spec, const TrainConfig& config,
                               const std::vector<WeightMatrix>* init, const Dataset& train,
                               const Dataset& eval, Rng& rng) {
    double f_w1 = 0.0;
    const IterateCallback capture_initial = [&](int iterate, const std::vector<WeightMatrix>& w) {
        if (iterate == 1) f_w1 = supervised_objective(w, eval);
    };
    LoopOutput loop = supervised_loop(spec, config, train, rng, init, -1, capture_initial);
    RunResult result = finish_supervised(spec, config, std::move(loop), eval);
    result.initial_objective = f_w1;
    return result;
}

RunResult train_da_rsg(const NetworkSpec& spec, const TrainConfig& config, double box_limit,
                       const Dataset& train, const Dataset& eval, Rng& rng,
                       const WeightMatrix* init) {
    double f_w1 = 0.0;
    const IterateCallback capture_initial = [&](int iterate, const std::vector<WeightMatrix>& w) {
        if (iterate == 1) f_w1 = autoencoder_objective(w[0], eval);
    };
    LoopOutput loop =
        autoencoder_loop(spec, config, box_limit, train, rng, init, -1, capture_initial);
    RunResult result;
    result.stopping_iter = loop.stopping_iter;
    result.objective_trace = std::move(loop.trace);
    result.initial_objective = f_w1;
    NetEvaluation ev =
        evaluate_autoencoder(loop.weights[0], eval, config.stepsize(loop.stopping_iter));
    result.grad_norm_sq = ev.grad_norm_sq;
    result.clipped_grad_norm_sq = ev.clipped_grad_norm_sq;
    result.final_weights = std::move(loop.weights);
    return result;
}

PretrainResult pretrain_layers(const NetworkSpec& spec, const PretrainSpec& pretrain,
                               const Dataset& train, Rng& rng) {
    spec.validate();
    const int L = spec.layer_count();
    if (L < 2) throw std::invalid_argument("pretraining needs at least two layers");
    if (pretrain.layers.empty())
        throw std::invalid_argument("pretrain spec needs at least one layer config");
    if (pretrain.layers.size() != 1 && static_cast<int>(pretrain.layers.size()) != L - 1)
        throw std::invalid_argument("pretrain spec needs one config or one per hidden layer");

    const std::uint64_t base = rng();
    PretrainResult result;
    result.reached_target = true;

    Dataset reps = train;
    reps.targets.reset();
    for (int l = 1; l <= L - 1; ++l) {
        const auto& layer_cfg = pretrain.layers.size() == 1
                                    ? pretrain.layers[0]
                                    : pretrain.layers[static_cast<std::size_t>(l) - 1];
        NetworkSpec da_spec;
        da_spec.widths = {spec.widths[static_cast<std::size_t>(l) - 1],
                          spec.widths[static_cast<std::size_t>(l)]};
        da_spec.keep_prob = layer_cfg.config.keep_prob;

        double best_norm = std::numeric_limits<double>::infinity();
        WeightMatrix best_weights;
        for (int t = 0; t < layer_cfg.config.runs; ++t) {
            Rng run_rng = make_rng(derive_seed(base, (static_cast<std::uint64_t>(l) << 32) |
                                                         static_cast<std::uint64_t>(t)));
            RunResult run = train_da_rsg(da_spec, layer_cfg.config, layer_cfg.box_limit, reps,
                                         reps, run_rng);
            if (run.grad_norm_sq < best_norm) {
                best_norm = run.grad_norm_sq;
                best_weights = std::move(run.final_weights[0]);
            }
            if (best_norm <= pretrain.target_alpha) break;
        }
        result.achieved_norms.push_back(best_norm);
        if (!(best_norm <= pretrain.target_alpha)) result.reached_target = false;

        // Next layer trains on the deterministic hidden representation.
        Matrix next(reps.size(), best_weights.rows());
        for (int i = 0; i < reps.size(); ++i)
            next.row(i) =
                sigmoid(Vector(best_weights.entries * reps.inputs.row(i).transpose())).transpose();
        reps.inputs = std::move(next);
        reps.provenance = train.provenance + ":h" + std::to_string(l);
        result.weights.push_back(std::move(best_weights));
    }
    return result;
}

std::size_t best_of_T_index(const std::vector<RunResult>& runs) {
    if (runs.empty()) throw std::invalid_argument("best_of_T needs at least one run");
    std::size_t best = 0;
    for (std::size_t t = 1; t < runs.size(); ++t)
        if (runs[t].grad_norm_sq < runs[best].grad_norm_sq) best = t;
    return best;
}

const RunResult& best_of_T(const std::vector<RunResult>& runs) {
    return runs[best_of_T_index(runs)];
}

GradNormEstimate estimate_expected_grad_norm(ProblemKind kind, const NetworkSpec& spec,
                                             const TrainConfig& config, int trajectories,
                                             const Dataset& train, const Dataset& eval, Rng& rng,
                                             const std::vector<WeightMatrix>* init) {
    if (trajectories < 2) throw std::invalid_argument("need at least two trajectories");
    config.validate();
    const auto stopping = config.resolved_stopping();
    const int n = config.iterations;

    if (kind == ProblemKind::Autoencoder && (spec.box_limits.empty() || !spec.box_limits[0]))
        throw std::invalid_argument("autoencoder estimation needs a box limit in the spec");

    const std::uint64_t base = rng();
    // One shared W^1 across trajectories.
    std::vector<WeightMatrix> shared_init;
    if (init) {
        shared_init = *init;
    } else {
        Rng init_rng = make_rng(derive_seed(base, 0));
        if (kind == ProblemKind::Autoencoder) {
            const double scale = config.init_scale > 0.0
                                     ? config.init_scale
                                     : default_init_scale(spec.widths[0], spec.widths[1],
                                                          spec.box_limits[0]);
            shared_init.push_back(
                draw_weights(spec.widths[1], spec.widths[0], scale, spec.box_limits[0], init_rng));
        } else {
            shared_init = initial_weights(spec, config, nullptr, init_rng);
        }
    }

    GradNormEstimate est;
    est.per_trajectory.resize(static_cast<std::size_t>(trajectories));
    for (int m = 0; m < trajectories; ++m) {
        Rng traj_rng = make_rng(derive_seed(base, static_cast<std::uint64_t>(m) + 1));
        std::vector<double> norms(static_cast<std::size_t>(n), 0.0);
        const IterateCallback record = [&](int iterate, const std::vector<WeightMatrix>& w) {
            if (iterate > n) return;
            if (kind == ProblemKind::Autoencoder) {
                norms[static_cast<std::size_t>(iterate) - 1] =
                    evaluate_autoencoder(w[0], eval, config.stepsize(iterate)).grad_norm_sq;
            } else {
                norms[static_cast<std::size_t>(iterate) - 1] =
                    evaluate_supervised(w, eval,
                                        mapping_steps_at(config, iterate, spec.layer_count()))
                        .grad_norm_sq;
            }
        };
        if (kind == ProblemKind::Autoencoder) {
            autoencoder_loop(spec, config, *spec.box_limits[0], train, traj_rng, &shared_init[0],
                             n - 1, record);
        } else {
            if (kind == ProblemKind::SingleLayer && spec.layer_count() != 1)
                throw std::invalid_argument("single-layer estimation needs a single-layer spec");
            supervised_loop(spec, config, train, traj_rng, &shared_init, n - 1, record);
        }
        double acc = 0.0;
        for (int k = 1; k <= n; ++k) acc += stopping.pmf[static_cast<std::size_t>(k) - 1] * norms[static_cast<std::size_t>(k) - 1];
        est.per_trajectory[static_cast<std::size_t>(m)] = acc;
    }

    double mean = 0.0;
    for (double v : est.per_trajectory) mean += v;
    mean /= static_cast<double>(trajectories);
    double var = 0.0;
    for (double v : est.per_trajectory) var += (v - mean) * (v - mean);
    var /= static_cast<double>(trajectories - 1);
    est.mean = mean;
    est.std_error = std::sqrt(var / static_cast<double>(trajectories));
    return est;
}

}  // namespace rsgnet
