// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

// Brute-force reference implementations, written without the library so that
// they can serve as oracles. Slow on purpose.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace spbench::oracle {

inline double mae(const std::vector<double>& actual, const std::vector<double>& predicted) {
    long double sum = 0.0L;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        sum += std::fabs(static_cast<long double>(actual[i]) - static_cast<long double>(predicted[i]));
    }
    return static_cast<double>(sum / static_cast<long double>(actual.size()));
}

inline double mdae(const std::vector<double>& actual, const std::vector<double>& predicted) {
    std::vector<double> e;
    for (std::size_t i = 0; i < actual.size(); ++i) e.push_back(std::fabs(actual[i] - predicted[i]));
    const std::size_t n = e.size();
    std::vector<double> lo = e;
    std::nth_element(lo.begin(), lo.begin() + static_cast<std::ptrdiff_t>((n - 1) / 2), lo.end());
    const double low = lo[(n - 1) / 2];
    std::vector<double> hi = e;
    std::nth_element(hi.begin(), hi.begin() + static_cast<std::ptrdiff_t>(n / 2), hi.end());
    const double high = hi[n / 2];
    return n % 2 == 1 ? low : (low + high) / 2.0;
}

/// P(X > Y) + 0.5 P(X = Y) over all pairs.
inline double a12(const std::vector<double>& x, const std::vector<double>& y) {
    double wins = 0.0;
    for (double xi : x) {
        for (double yj : y) wins += xi > yj ? 1.0 : (xi == yj ? 0.5 : 0.0);
    }
    return wins / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
}

/// Doubled midranks by counting: 2 * (#smaller + (#equal + 1) / 2).
inline std::vector<long> doubled_midranks(const std::vector<double>& all) {
    std::vector<long> r(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        long less = 0, equal = 0;
        for (double v : all) {
            if (v < all[i]) ++less;
            if (v == all[i]) ++equal;
        }
        r[i] = 2 * less + equal + 1;
    }
    return r;
}

/// P(rank sum of a <= observed) under all C(N, m) labelings, by enumerating
/// every m-subset (Gosper's hack). Only for N <= 24.
inline double wilcoxon_enumerate(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> all = a;
    all.insert(all.end(), b.begin(), b.end());
    const std::size_t n = all.size();
    const std::size_t m = a.size();
    if (n > 24) throw std::invalid_argument("enumeration oracle limited to 24 values");
    const auto r = doubled_midranks(all);
    long observed = 0;
    for (std::size_t i = 0; i < m; ++i) observed += r[i];
    std::uint64_t hits = 0, total = 0;
    std::uint32_t set = (1u << m) - 1u;
    const std::uint32_t limit = 1u << n;
    while (set < limit) {
        long s = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (set & (1u << i)) s += r[i];
        }
        ++total;
        if (s <= observed) ++hits;
        const std::uint32_t c = set & (~set + 1u);
        const std::uint32_t next = set + c;
        set = (((next ^ set) >> 2) / c) | next;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

/// Same tail probability by exact integer counting (128-bit), items processed
/// from the largest rank down. Good up to N = 100.
inline double wilcoxon_count(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> all = a;
    all.insert(all.end(), b.begin(), b.end());
    const std::size_t m = a.size();
    auto r = doubled_midranks(all);
    long observed = 0;
    for (std::size_t i = 0; i < m; ++i) observed += r[i];
    std::sort(r.begin(), r.end(), std::greater<>());
    using Count = unsigned __int128;
    long max_sum = 0;
    for (long rank : r) max_sum += rank;
    // states[k][s]: number of k-subsets with doubled rank sum s
    std::vector<std::vector<Count>> states(m + 1, std::vector<Count>(static_cast<std::size_t>(max_sum) + 1, 0));
    states[0][0] = 1;
    long reached = 0;
    for (long rank : r) {
        reached += rank;
        for (std::size_t k = m; k >= 1; --k) {
            for (long s = reached; s >= rank; --s) states[k][static_cast<std::size_t>(s)] += states[k - 1][static_cast<std::size_t>(s - rank)];
        }
    }
    Count hits = 0, total = 0;
    for (long s = 0; s <= max_sum; ++s) {
        const Count c = states[m][static_cast<std::size_t>(s)];
        total += c;
        if (s <= observed) hits += c;
    }
    return static_cast<double>(static_cast<long double>(hits) / static_cast<long double>(total));
}

}  // namespace spbench::oracle
