// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#pragma once

#include <cstdint>
#include <span>

#include "spbench/issue.hpp"
#include "spbench/metrics.hpp"

namespace spbench::baselines {

struct BaselineConfig {
    // Adds 1.0 to Mean and Median estimates. Only for reproducing tables of
    // the original Deep-SE study, which shifted its baselines this way.
    bool legacy_offset = false;
    std::uint64_t rng_seed = 0;
};

PredictionSet mean_estimator(std::span<const double> train_sps, std::span<const Issue> test,
                             const BaselineConfig& cfg = {});

PredictionSet median_estimator(std::span<const double> train_sps, std::span<const Issue> test,
                               const BaselineConfig& cfg = {});

/// Each test issue gets the story point of a training issue drawn uniformly
/// with replacement. Test and training sets are disjoint, so a target never
/// draws its own estimate.
PredictionSet random_guess(std::span<const double> train_sps, std::span<const Issue> test, std::uint64_t seed);

}  // namespace spbench::baselines
