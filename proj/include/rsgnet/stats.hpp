#pragma once

#include <optional>
#include <utility>
#include <vector>

namespace rsgnet {

/// Sample mean and standard error (Bessel-corrected); needs >= 2 values for a
/// nonzero standard error.
std::pair<double, double> mean_and_stderr(const std::vector<double>& values);

/// Fractional ranks with ties averaged.
std::vector<double> ranks(const std::vector<double>& values);

/// Spearman rank correlation; nullopt when fewer than two points or either
/// side has zero rank variance.
std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace rsgnet
