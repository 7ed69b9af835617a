#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rsgnet/networks.hpp"
#include "rsgnet/rng.hpp"

namespace rsgnet {

/// Immutable after load; rows are samples, all entries in [0,1].
struct Dataset {
    Matrix inputs;                  // S x d_x
    std::optional<Matrix> targets;  // S x d_y
    std::string provenance;

    int size() const { return static_cast<int>(inputs.rows()); }
    int input_dim() const { return static_cast<int>(inputs.cols()); }
    int target_dim() const { return targets ? static_cast<int>(targets->cols()) : 0; }
    Sample sample(int row) const;
    void validate() const;
};

struct DataMoments {
    double mu_x = 0.0;   // average per-dimension first moment
    double tau_x = 0.0;  // average squared per-dimension first moment
};

struct MomentReport {
    DataMoments moments;
    Vector per_dim_means;
};

enum class FileFormat { Csv, Idx };
enum class Normalization { None, MinMax, Scale255 };

struct LoadOptions {
    Normalization normalization = Normalization::None;
    int label_column = -1;    // CSV only; -1 = no labels
    std::string labels_path;  // IDX only; companion idx1 label file
};

Dataset load_dataset(const std::string& path, FileFormat format, const LoadOptions& opts = {});
Dataset load_csv(const std::string& path, const LoadOptions& opts = {});
Dataset load_idx(const std::string& image_path, const LoadOptions& opts = {});

/// mu = mean of per-dimension means m_j, tau = mean of m_j^2 (the mean is
/// squared, not the samples).
MomentReport estimate_moments(const Dataset& data);

/// Synthetic dataset whose per-dimension means hit the requested moments via a
/// two-point construction; entries drawn from Beta distributions around each
/// mean, targets from a fixed random sigmoid teacher. Feasible targets need
/// mu^2 <= tau <= mu (Jensen on means in [0,1]).
Dataset synthesize_dataset(int d_x, int d_y, int samples, const DataMoments& target, Rng& rng);

/// B indices drawn uniformly with replacement.
std::vector<int> sample_indices(int count, int batch, Rng& rng);
Dataset minibatch(const Dataset& data, int batch, Rng& rng);

/// Appends a constant-1 column; widths downstream must count it.
Dataset augment_with_bias(const Dataset& data);

}  // namespace rsgnet
