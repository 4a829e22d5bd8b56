#pragma once

#include <cstdint>
#include <string>

#include "mixboost/dataset.hpp"

namespace mixboost {

/// Reproducible synthetic datasets for tests and demos.
///
/// "linear":       y follows a random linear model with mild noise.
/// "axis-aligned": y is a two-feature, two-threshold step function (a
///                 depth-2 tree fits it almost exactly).
/// "rbf":          y is a smooth mixture of Gaussian bumps (gamma = 1.5),
///                 the shape a projected ridge learner captures well.
///
/// Classification tasks threshold the regression target at its median and
/// emit {0,1} labels.
Dataset make_synthetic(const std::string& generator, const std::string& task, std::size_t n_rows,
                       std::size_t n_cols, std::uint64_t seed);

} // namespace mixboost
