// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#include "spbench/baselines.hpp"

#include <Eigen/Core>

#include "spbench/rng.hpp"

namespace spbench::baselines {

namespace {

void require_train(std::span<const double> train_sps) {
    if (train_sps.empty()) throw InvalidArgument("baseline needs at least one training story point");
}

PredictionSet constant(double value, std::span<const Issue> test) {
    PredictionSet out;
    for (const auto& issue : test) out.add({issue.issue_key, issue.story_point, value});
    return out;
}

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> v) {
    return {v.data(), static_cast<Eigen::Index>(v.size())};
}

}  // namespace

PredictionSet mean_estimator(std::span<const double> train_sps, std::span<const Issue> test, const BaselineConfig& cfg) {
    require_train(train_sps);
    const double estimate = as_vector(train_sps).mean() + (cfg.legacy_offset ? 1.0 : 0.0);
    return constant(estimate, test);
}

PredictionSet median_estimator(std::span<const double> train_sps, std::span<const Issue> test,
                               const BaselineConfig& cfg) {
    require_train(train_sps);
    const double estimate = metrics::median(as_vector(train_sps)) + (cfg.legacy_offset ? 1.0 : 0.0);
    return constant(estimate, test);
}

PredictionSet random_guess(std::span<const double> train_sps, std::span<const Issue> test, std::uint64_t seed) {
    require_train(train_sps);
    Rng rng(seed);
    PredictionSet out;
    for (const auto& issue : test) out.add({issue.issue_key, issue.story_point, train_sps[rng.index(train_sps.size())]});
    return out;
}

}  // namespace spbench::baselines
