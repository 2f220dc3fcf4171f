// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#include "spbench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spbench/error.hpp"

namespace spbench::stats {

Eigen::VectorXd midranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    Eigen::VectorXd ranks(static_cast<Eigen::Index>(n));
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks(static_cast<Eigen::Index>(order[k])) = rank;
        i = j + 1;
    }
    return ranks;
}

std::string_view to_string(WilcoxonMethod m) {
    switch (m) {
        case WilcoxonMethod::automatic: return "automatic";
        case WilcoxonMethod::exact: return "exact";
        case WilcoxonMethod::normal: return "normal";
    }
    return "automatic";
}

namespace {

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
    std::vector<double> all(a.begin(), a.end());
    all.insert(all.end(), b.begin(), b.end());
    return all;
}

// P(rank sum of a random m-subset <= observed), ranks doubled to integers.
double exact_lower_tail(const Eigen::VectorXd& ranks, std::size_t m, double observed_rank_sum) {
    const auto n_total = static_cast<std::size_t>(ranks.size());
    std::vector<int> doubled(n_total);
    int max_sum = 0;
    for (std::size_t i = 0; i < n_total; ++i) {
        doubled[i] = static_cast<int>(std::lround(2.0 * ranks(static_cast<Eigen::Index>(i))));
        max_sum += doubled[i];
    }
    // ways(k, s): number of k-subsets of the items seen so far with doubled rank sum s
    Eigen::MatrixXd ways = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m + 1), max_sum + 1);
    ways(0, 0) = 1.0;
    for (std::size_t item = 0; item < n_total; ++item) {
        const int r = doubled[item];
        const auto k_max = static_cast<Eigen::Index>(std::min(m, item + 1));
        for (Eigen::Index k = k_max; k >= 1; --k) {
            ways.row(k).tail(max_sum + 1 - r) += ways.row(k - 1).head(max_sum + 1 - r);
        }
    }
    const auto observed = static_cast<int>(std::lround(2.0 * observed_rank_sum));
    const Eigen::Index last = std::min(observed, max_sum);
    const double total = ways.row(static_cast<Eigen::Index>(m)).sum();
    const double below = last < 0 ? 0.0 : ways.row(static_cast<Eigen::Index>(m)).head(last + 1).sum();
    return below / total;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult wilcoxon_one_sided(std::span<const double> a, std::span<const double> b, WilcoxonMethod method) {
    if (a.size() < 2 || b.size() < 2) throw InvalidArgument("Wilcoxon rank-sum test needs two samples of size >= 2");
    const auto all = concat(a, b);
    const Eigen::VectorXd ranks = midranks(all);
    const double m = static_cast<double>(a.size());
    const double n = static_cast<double>(b.size());
    const double rank_sum = ranks.head(static_cast<Eigen::Index>(a.size())).sum();

    WilcoxonResult result;
    result.u_statistic = rank_sum - m * (m + 1.0) / 2.0;
    result.method = method;
    if (method == WilcoxonMethod::automatic) {
        result.method = all.size() <= kExactMaxCombined ? WilcoxonMethod::exact : WilcoxonMethod::normal;
    }
    if (std::all_of(all.begin(), all.end(), [&](double v) { return v == all.front(); })) {
        result.p_value = 0.5;
        return result;
    }
    if (result.method == WilcoxonMethod::exact) {
        result.p_value = exact_lower_tail(ranks, a.size(), rank_sum);
        return result;
    }

    // Tie correction: sum over tie groups of t^3 - t.
    std::vector<double> sorted = all;
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double total = m + n;
    const double sigma = std::sqrt(m * n / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0))));
    const double z = (result.u_statistic - m * n / 2.0 + 0.5) / sigma;
    result.p_value = normal_cdf(z);
    return result;
}

double bonferroni(double alpha, int k) {
    if (k < 1) throw InvalidArgument("Bonferroni correction needs k >= 1 hypotheses");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    return alpha / k;
}

std::string_view to_string(Magnitude m) {
    switch (m) {
        case Magnitude::negligible: return "negligible";
        case Magnitude::small: return "small";
        case Magnitude::medium: return "medium";
        case Magnitude::large: return "large";
    }
    return "negligible";
}

char letter(Magnitude m) { return to_string(m).front(); }

Magnitude classify(double a12, MagnitudeMode mode) {
    const double v = mode == MagnitudeMode::symmetric ? std::max(a12, 1.0 - a12) : a12;
    if (v >= 0.8) return Magnitude::large;
    if (v >= 0.7) return Magnitude::medium;
    if (v >= 0.6) return Magnitude::small;
    return Magnitude::negligible;
}

A12Result a12(std::span<const double> first, std::span<const double> second, MagnitudeMode mode) {
    if (first.empty() || second.empty()) throw InvalidArgument("A12 needs two non-empty samples");
    const Eigen::VectorXd ranks = midranks(concat(first, second));
    const double m = static_cast<double>(first.size());
    const double n = static_cast<double>(second.size());
    A12Result r;
    r.rank_sum_first = ranks.head(static_cast<Eigen::Index>(first.size())).sum();
    r.value = (r.rank_sum_first / m - (m + 1.0) / 2.0) / n;
    r.magnitude = classify(r.value, mode);
    return r;
}

std::vector<StatTestResult> compare_methods(const MethodErrors& errors_by_method, const StatConfig& cfg) {
    const double alpha_used = bonferroni(cfg.alpha, cfg.k_hypotheses);
    std::vector<StatTestResult> results;
    for (std::size_t i = 0; i < errors_by_method.size(); ++i) {
        for (std::size_t j = i + 1; j < errors_by_method.size(); ++j) {
            const auto& [name_a, err_a] = errors_by_method[i];
            const auto& [name_b, err_b] = errors_by_method[j];
            if (err_a.size() != err_b.size()) {
                throw InvalidArgument("error vectors of " + name_a + " and " + name_b +
                                      " are not aligned to the same test set");
            }
            const auto w = wilcoxon_one_sided(err_a, err_b, cfg.method);
            const auto effect = a12(err_b, err_a);
            StatTestResult r;
            r.method_a = name_a;
            r.method_b = name_b;
            r.p_value = w.p_value;
            r.test = w.method;
            r.a12 = effect.value;
            r.magnitude = effect.magnitude;
            r.rank_sum_first = effect.rank_sum_first;
            r.m = err_b.size();
            r.n_obs = err_a.size();
            r.alpha = cfg.alpha;
            r.alpha_used = alpha_used;
            r.significant_raw = w.p_value < cfg.alpha;
            r.significant = w.p_value < alpha_used;
            results.push_back(std::move(r));
        }
    }
    return results;
}

}  // namespace spbench::stats
