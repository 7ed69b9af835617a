#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "rsgnet/rng.hpp"

namespace rsgnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense layer transform, optionally box-constrained to [-box_limit, +box_limit].
struct WeightMatrix {
    Matrix entries;
    std::optional<double> box_limit;

    Eigen::Index rows() const { return entries.rows(); }
    Eigen::Index cols() const { return entries.cols(); }
};

/// Architecture description: layer widths d_0..d_L, per-layer box limits and
/// the shared keep probability. keep_prob = 1 means no unit is ever dropped.
struct NetworkSpec {
    std::vector<int> widths;                        // d_0..d_L
    std::vector<std::optional<double>> box_limits;  // per layer; empty = all unconstrained
    double keep_prob = 1.0;

    int layer_count() const { return static_cast<int>(widths.size()) - 1; }
    std::optional<double> box_limit_for(int layer) const;  // layer in [1..L]
    void validate() const;
};

/// Bernoulli keep mask; bit i = 0 drops unit i of the masked vector.
struct DropoutMask {
    Vector bits;       // entries are exactly 0.0 or 1.0
    double keep_prob = 1.0;
};

struct Sample {
    Vector x;                 // in [0,1]^{d_x}
    std::optional<Vector> y;  // in [0,1]^{d_y}; absent for autoencoder data
};

double sigmoid(double v);
Vector sigmoid(const Vector& v);

struct LossGrad {
    double loss = 0.0;
    Matrix grad;
};

/// Squared-error loss of a single sigmoid layer, |y - sigmoid(Wx)|^2, with its
/// exact gradient in W.
LossGrad loss_and_grad_1nn(const WeightMatrix& W, const Sample& sample);

/// Draws a keep mask with i.i.d. Bernoulli(keep_prob) bits and applies it to x.
/// keep_prob = 1 short-circuits to an all-ones mask without consuming any
/// randomness, so masked and unmasked streams stay aligned.
std::pair<Vector, DropoutMask> corrupt(const Vector& x, double keep_prob, Rng& rng);

DropoutMask ones_mask(Eigen::Index size, double keep_prob = 1.0);
DropoutMask sample_mask(Eigen::Index size, double keep_prob, Rng& rng);

/// Tied-weight denoising autoencoder loss |x - sigmoid(W^T sigmoid(W(x*z)))|^2.
/// W appears twice; the gradient accumulates both paths.
LossGrad loss_and_grad_da(const WeightMatrix& W, const Vector& x, const DropoutMask& mask);

struct LayeredLossGrad {
    double loss = 0.0;
    std::vector<Matrix> grads;        // one per layer
    std::vector<Vector> activations;  // h^1..h^{L-1}
};

/// Masked multi-layer forward/backward pass: h^l = sigmoid(W_l (h^{l-1} * z^l)),
/// loss |y - sigmoid(W_L (h^{L-1} * z^L))|^2. Pass an empty mask vector for the
/// deterministic full network; gradient columns of dropped inputs come out
/// exactly zero.
LayeredLossGrad loss_and_grad_lnn(const std::vector<WeightMatrix>& params,
                                  const Sample& sample,
                                  const std::vector<DropoutMask>& masks);

/// Euclidean projection onto the box; idempotent.
WeightMatrix project_box(const WeightMatrix& W);
void project_box_in_place(WeightMatrix& W);

/// Projected-gradient mapping (W - P(W - step*grad))/step. Equals grad whenever
/// the step stays inside the box.
Matrix gradient_mapping(const WeightMatrix& W, const Matrix& grad, double step);

/// Entrywise clipping of a gradient to [-limit, +limit]; the alternative
/// constrained-gradient measurement mode reported alongside the mapping.
Matrix clip_entries(const Matrix& grad, double limit);

}  // namespace rsgnet
