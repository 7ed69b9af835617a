#include "rsgnet/networks.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rsgnet {

std::optional<double> NetworkSpec::box_limit_for(int layer) const {
    if (box_limits.empty()) return std::nullopt;
    return box_limits.at(static_cast<std::size_t>(layer) - 1);
}

void NetworkSpec::validate() const {
    if (widths.size() < 2)
        throw std::invalid_argument("network spec needs at least widths d_0 and d_1");
    for (int w : widths)
        if (w < 1) throw std::invalid_argument("layer widths must be >= 1");
    if (!box_limits.empty() && box_limits.size() != widths.size() - 1)
        throw std::invalid_argument("box_limits must have one entry per layer");
    for (const auto& b : box_limits)
        if (b && *b <= 0.0) throw std::invalid_argument("box limits must be positive");
    if (!(keep_prob > 0.0 && keep_prob <= 1.0))
        throw std::invalid_argument("keep_prob must lie in (0,1]");
}

double sigmoid(double v) {
    // Branch keeps exp() argument nonpositive so large |v| cannot overflow.
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

Vector sigmoid(const Vector& v) {
    return v.unaryExpr([](double u) { return sigmoid(u); });
}

namespace {

void check_shapes_1nn(const WeightMatrix& W, const Sample& sample) {
    if (!sample.y)
        throw std::invalid_argument("single-layer loss needs a target vector y");
    if (W.cols() != sample.x.size() || W.rows() != sample.y->size())
        throw std::invalid_argument("weight shape " + std::to_string(W.rows()) + "x" +
                                    std::to_string(W.cols()) + " does not match sample dims " +
                                    std::to_string(sample.y->size()) + "x" +
                                    std::to_string(sample.x.size()));
}

}  // namespace

LossGrad loss_and_grad_1nn(const WeightMatrix& W, const Sample& sample) {
    check_shapes_1nn(W, sample);
    // Shares the L-NN kernel so the L = 1 reduction is bitwise exact.
    std::vector<WeightMatrix> params;
    params.push_back(W);
    LayeredLossGrad r = loss_and_grad_lnn(params, sample, {});
    return {r.loss, std::move(r.grads[0])};
}

DropoutMask ones_mask(Eigen::Index size, double keep_prob) {
    return {Vector::Ones(size), keep_prob};
}

DropoutMask sample_mask(Eigen::Index size, double keep_prob, Rng& rng) {
    if (!(keep_prob > 0.0 && keep_prob <= 1.0))
        throw std::invalid_argument("keep_prob must lie in (0,1]");
    if (keep_prob == 1.0) return ones_mask(size, keep_prob);
    DropoutMask mask{Vector(size), keep_prob};
    std::bernoulli_distribution keep(keep_prob);
    for (Eigen::Index i = 0; i < size; ++i) mask.bits[i] = keep(rng) ? 1.0 : 0.0;
    return mask;
}

std::pair<Vector, DropoutMask> corrupt(const Vector& x, double keep_prob, Rng& rng) {
    DropoutMask mask = sample_mask(x.size(), keep_prob, rng);
    if (keep_prob == 1.0) return {x, std::move(mask)};
    return {x.cwiseProduct(mask.bits), std::move(mask)};
}

LossGrad loss_and_grad_da(const WeightMatrix& W, const Vector& x, const DropoutMask& mask) {
    if (!W.box_limit)
        throw std::invalid_argument("denoising autoencoder weights need a box limit");
    if (W.cols() != x.size() || mask.bits.size() != x.size())
        throw std::invalid_argument("autoencoder input/mask length must match weight columns");

    const Vector xt = x.cwiseProduct(mask.bits);  // corrupted input
    const Vector h = sigmoid(W.entries * xt);
    const Vector p = sigmoid(W.entries.transpose() * h);

    const Vector residual = p - x;
    const double loss = residual.squaredNorm();

    // d loss / d pre-activation of the reconstruction
    const Vector s = 2.0 * residual.cwiseProduct(p).cwiseProduct(Vector::Ones(p.size()) - p);
    // path through the W^T occurrence
    Matrix grad = h * s.transpose();
    // path through the encoder occurrence
    const Vector t =
        (W.entries * s).cwiseProduct(h).cwiseProduct(Vector::Ones(h.size()) - h);
    grad.noalias() += t * xt.transpose();
    return {loss, std::move(grad)};
}

LayeredLossGrad loss_and_grad_lnn(const std::vector<WeightMatrix>& params,
                                  const Sample& sample,
                                  const std::vector<DropoutMask>& masks) {
    const int L = static_cast<int>(params.size());
    if (L < 1) throw std::invalid_argument("need at least one layer");
    if (!sample.y) throw std::invalid_argument("supervised loss needs a target vector y");
    const bool masked = !masks.empty();
    if (masked && static_cast<int>(masks.size()) != L)
        throw std::invalid_argument("expected one mask per layer");

    // Forward pass; inputs[l] is the (masked) input actually fed to layer l+1.
    std::vector<Vector> inputs(L);
    std::vector<Vector> acts;  // h^1..h^{L-1}
    Vector h = sample.x;
    for (int l = 0; l < L; ++l) {
        if (masked) {
            if (masks[l].bits.size() != h.size())
                throw std::invalid_argument("mask " + std::to_string(l + 1) +
                                            " has length " + std::to_string(masks[l].bits.size()) +
                                            ", expected " + std::to_string(h.size()));
            inputs[l] = h.cwiseProduct(masks[l].bits);
        } else {
            inputs[l] = h;
        }
        if (params[l].cols() != inputs[l].size())
            throw std::invalid_argument("layer " + std::to_string(l + 1) + " weight columns " +
                                        std::to_string(params[l].cols()) + " do not match input " +
                                        std::to_string(inputs[l].size()));
        h = sigmoid(params[l].entries * inputs[l]);
        if (l + 1 < L) acts.push_back(h);
    }

    const Vector residual = h - *sample.y;
    LayeredLossGrad out;
    out.loss = residual.squaredNorm();
    out.grads.resize(L);
    out.activations = std::move(acts);

    // Backward pass. delta is d loss / d pre-activation of the current layer.
    Vector delta = 2.0 * residual.cwiseProduct(h).cwiseProduct(Vector::Ones(h.size()) - h);
    for (int l = L - 1; l >= 0; --l) {
        out.grads[l] = delta * inputs[l].transpose();
        if (l > 0) {
            Vector back = params[l].entries.transpose() * delta;
            if (masked) back = back.cwiseProduct(masks[l].bits);
            const Vector& hl = out.activations[l - 1];
            delta = back.cwiseProduct(hl).cwiseProduct(Vector::Ones(hl.size()) - hl);
        }
    }
    return out;
}

WeightMatrix project_box(const WeightMatrix& W) {
    WeightMatrix out = W;
    project_box_in_place(out);
    return out;
}

void project_box_in_place(WeightMatrix& W) {
    if (!W.box_limit) throw std::invalid_argument("project_box needs a box limit");
    const double m = *W.box_limit;
    W.entries = W.entries.cwiseMax(-m).cwiseMin(m);
}

Matrix gradient_mapping(const WeightMatrix& W, const Matrix& grad, double step) {
    if (step <= 0.0) throw std::invalid_argument("gradient mapping needs step > 0");
    if (!W.box_limit) throw std::invalid_argument("gradient mapping needs a box limit");
    const double m = *W.box_limit;
    const Matrix stepped = (W.entries - step * grad).cwiseMax(-m).cwiseMin(m);
    return (W.entries - stepped) / step;
}

Matrix clip_entries(const Matrix& grad, double limit) {
    if (limit <= 0.0) throw std::invalid_argument("clip limit must be positive");
    return grad.cwiseMax(-limit).cwiseMin(limit);
}

}  // namespace rsgnet
