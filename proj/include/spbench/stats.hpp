// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace spbench::stats {

/// Midranks (1-based, ties share the average rank) of `values`.
Eigen::VectorXd midranks(std::span<const double> values);

enum class WilcoxonMethod { automatic, exact, normal };

std::string_view to_string(WilcoxonMethod m);

struct WilcoxonResult {
    double p_value = 0.5;
    double u_statistic = 0.0;  // rank sum of `a` minus m(m+1)/2
    WilcoxonMethod method = WilcoxonMethod::exact;
};

/// Size at or below which `automatic` uses the exact permutation distribution.
inline constexpr std::size_t kExactMaxCombined = 20;

/// One-sided rank-sum test, alternative: values of `a` are stochastically
/// smaller than values of `b`. Ties get midranks.
///   exact:  P(U <= u_obs) under the permutation distribution of the midranks.
///   normal: Phi((u_obs - mn/2 + 0.5) / sigma) with tie-corrected sigma.
/// When every value of both samples is identical, p = 0.5.
/// Both samples need at least two values.
WilcoxonResult wilcoxon_one_sided(std::span<const double> a, std::span<const double> b,
                                  WilcoxonMethod method = WilcoxonMethod::automatic);

/// alpha / k
double bonferroni(double alpha, int k);

enum class Magnitude { negligible, small, medium, large };

std::string_view to_string(Magnitude m);
char letter(Magnitude m);

enum class MagnitudeMode { directional, symmetric };

/// < 0.6 negligible, [0.6, 0.7) small, [0.7, 0.8) medium, >= 0.8 large. The
/// symmetric mode classifies max(a12, 1 - a12).
Magnitude classify(double a12, MagnitudeMode mode = MagnitudeMode::directional);

struct A12Result {
    double value = 0.5;
    Magnitude magnitude = Magnitude::negligible;
    double rank_sum_first = 0.0;
};

/// Vargha-Delaney: (R1/m - (m+1)/2) / n, R1 the midrank sum of `first`.
A12Result a12(std::span<const double> first, std::span<const double> second,
              MagnitudeMode mode = MagnitudeMode::directional);

struct StatConfig {
    double alpha = 0.05;
    int k_hypotheses = 1;
    WilcoxonMethod method = WilcoxonMethod::automatic;
};

struct StatTestResult {
    std::string method_a;
    std::string method_b;
    double p_value = 0.5;
    double a12 = 0.5;  // > 0.5: method_a has smaller errors
    Magnitude magnitude = Magnitude::negligible;
    double rank_sum_first = 0.0;
    std::size_t m = 0;
    std::size_t n_obs = 0;
    double alpha = 0.05;
    double alpha_used = 0.05;  // Bonferroni-corrected
    bool significant_raw = false;  // p < alpha
    bool significant = false;      // p < alpha_used
    WilcoxonMethod test = WilcoxonMethod::exact;
};

using MethodErrors = std::vector<std::pair<std::string, std::vector<double>>>;

/// All pairs (i < j) in input order: one-sided test "errors of i smaller than
/// errors of j", Â12 oriented so that > 0.5 favours i. Throws InvalidArgument
/// when error vectors differ in length.
std::vector<StatTestResult> compare_methods(const MethodErrors& errors_by_method, const StatConfig& cfg = {});

}  // namespace spbench::stats
