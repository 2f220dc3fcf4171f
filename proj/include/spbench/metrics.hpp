// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>

#include "spbench/error.hpp"

namespace spbench {

struct Prediction {
    std::string issue_key;
    double actual = 0.0;
    double predicted = 0.0;
};

/// Paired actual/predicted story points over one test set. Keys are unique.
class PredictionSet {
public:
    PredictionSet() = default;
    explicit PredictionSet(std::vector<Prediction> entries);

    void add(Prediction p);

    std::span<const Prediction> entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    Eigen::VectorXd actual() const;
    Eigen::VectorXd predicted() const;
    Eigen::VectorXd absolute_errors() const;

    /// CSV with header `issue_key,actual,predicted`, full double precision.
    void write_csv(std::ostream& out) const;
    void write_csv(const std::filesystem::path& path) const;
    static PredictionSet read_csv(std::istream& in);
    static PredictionSet read_csv(const std::filesystem::path& path);

private:
    std::vector<Prediction> entries_;
    std::unordered_set<std::string> keys_;
};

struct EvalReport {
    double mae = 0.0;
    double mdae = 0.0;
    double sa = 0.0;
    double mae_random_mean = 0.0;  // MAE of the random-guess reference, averaged over runs
    int runs = 0;
};

namespace metrics {

template <typename Derived>
typename Derived::Scalar median(const Eigen::DenseBase<Derived>& values) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = values.size();
    if (n == 0) throw InvalidArgument("median of an empty sample");
    std::vector<Scalar> sorted(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) sorted[static_cast<std::size_t>(i)] = values(i);
    std::sort(sorted.begin(), sorted.end());
    const auto mid = static_cast<std::size_t>(n / 2);
    return n % 2 == 1 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / Scalar(2);
}

template <typename A, typename B>
typename A::Scalar mean_absolute_error(const Eigen::MatrixBase<A>& actual, const Eigen::MatrixBase<B>& predicted) {
    if (actual.size() != predicted.size()) throw InvalidArgument("actual/predicted size mismatch");
    if (actual.size() == 0) throw InvalidArgument("MAE of an empty prediction set");
    return (actual - predicted).cwiseAbs().mean();
}

template <typename A, typename B>
typename A::Scalar median_absolute_error(const Eigen::MatrixBase<A>& actual, const Eigen::MatrixBase<B>& predicted) {
    if (actual.size() != predicted.size()) throw InvalidArgument("actual/predicted size mismatch");
    if (actual.size() == 0) throw InvalidArgument("MdAE of an empty prediction set");
    return median((actual - predicted).cwiseAbs());
}

/// (1 - mae / mae_random) * 100. Throws InvalidArgument when mae_random is 0.
double standardized_accuracy(double mae, double mae_random);

}  // namespace metrics

double mae(const PredictionSet& p);
double mdae(const PredictionSet& p);

/// Mean MAE of `runs` random-guess prediction sets over the same test actuals,
/// each guess drawn uniformly from `train_sps`. Run r uses a stream derived
/// from (seed, r), so the result does not depend on evaluation order.
double random_guess_mae(std::span<const double> actuals, std::span<const double> train_sps, int runs,
                        std::uint64_t seed);

/// MAE, MdAE and SA against `runs` random guesses. Throws InvalidArgument when
/// the random-guess MAE is zero (SA undefined).
EvalReport sa(const PredictionSet& p, std::span<const double> train_sps, int runs = 1000, std::uint64_t seed = 0);

/// Independent stream seed for (seed, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

}  // namespace spbench
