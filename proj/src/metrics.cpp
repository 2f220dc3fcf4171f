// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#include "spbench/metrics.hpp"

#include <fstream>

#include "spbench/csv.hpp"
#include "spbench/rng.hpp"

namespace spbench {

PredictionSet::PredictionSet(std::vector<Prediction> entries) {
    entries_.reserve(entries.size());
    for (auto& e : entries) add(std::move(e));
}

void PredictionSet::add(Prediction p) {
    if (!keys_.insert(p.issue_key).second) {
        throw InvalidArgument("duplicate issue key in prediction set: " + p.issue_key);
    }
    entries_.push_back(std::move(p));
}

Eigen::VectorXd PredictionSet::actual() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(entries_.size()));
    for (std::size_t i = 0; i < entries_.size(); ++i) v(static_cast<Eigen::Index>(i)) = entries_[i].actual;
    return v;
}

Eigen::VectorXd PredictionSet::predicted() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(entries_.size()));
    for (std::size_t i = 0; i < entries_.size(); ++i) v(static_cast<Eigen::Index>(i)) = entries_[i].predicted;
    return v;
}

Eigen::VectorXd PredictionSet::absolute_errors() const { return (actual() - predicted()).cwiseAbs(); }

void PredictionSet::write_csv(std::ostream& out) const {
    csv::write_row(out, {"issue_key", "actual", "predicted"});
    for (const auto& e : entries_) {
        csv::write_row(out, {e.issue_key, csv::format_double(e.actual), csv::format_double(e.predicted)});
    }
}

void PredictionSet::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_csv(out);
}

PredictionSet PredictionSet::read_csv(std::istream& in) {
    csv::Reader reader(in);
    csv::Record row;
    if (!reader.next(row) || row.size() < 3 || row[0] != "issue_key" || row[1] != "actual" || row[2] != "predicted") {
        throw SchemaError("prediction CSV must start with header issue_key,actual,predicted");
    }
    std::vector<Prediction> entries;
    while (reader.next(row)) {
        if (row.size() == 1 && row[0].empty()) continue;
        const auto actual = row.size() >= 3 ? csv::parse_double(row[1]) : std::nullopt;
        const auto predicted = row.size() >= 3 ? csv::parse_double(row[2]) : std::nullopt;
        if (!actual || !predicted) {
            throw DataError("bad prediction row on line " + std::to_string(reader.line()));
        }
        entries.push_back({row[0], *actual, *predicted});
    }
    return PredictionSet(std::move(entries));
}

PredictionSet PredictionSet::read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return read_csv(in);
}

namespace metrics {

double standardized_accuracy(double mae, double mae_random) {
    if (mae_random == 0.0) throw InvalidArgument("SA undefined: random-guess MAE is zero (constant story points)");
    return (1.0 - mae / mae_random) * 100.0;
}

}  // namespace metrics

double mae(const PredictionSet& p) { return metrics::mean_absolute_error(p.actual(), p.predicted()); }

double mdae(const PredictionSet& p) { return metrics::median_absolute_error(p.actual(), p.predicted()); }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    // splitmix64 finalizer over a combined word
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double random_guess_mae(std::span<const double> actuals, std::span<const double> train_sps, int runs,
                        std::uint64_t seed) {
    if (runs < 1) throw InvalidArgument("random-guess runs must be >= 1");
    if (train_sps.empty()) throw InvalidArgument("random guessing needs a non-empty training pool");
    if (actuals.empty()) throw InvalidArgument("random-guess MAE of an empty test set");
    double total = 0.0;
    for (int r = 0; r < runs; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        double sum = 0.0;
        for (double a : actuals) sum += std::abs(a - train_sps[rng.index(train_sps.size())]);
        total += sum / static_cast<double>(actuals.size());
    }
    return total / runs;
}

EvalReport sa(const PredictionSet& p, std::span<const double> train_sps, int runs, std::uint64_t seed) {
    if (p.empty()) throw InvalidArgument("SA of an empty prediction set");
    EvalReport report;
    report.mae = mae(p);
    report.mdae = mdae(p);
    std::vector<double> actuals;
    actuals.reserve(p.size());
    for (const auto& e : p.entries()) actuals.push_back(e.actual);
    report.mae_random_mean = random_guess_mae(actuals, train_sps, runs, seed);
    report.runs = runs;
    report.sa = metrics::standardized_accuracy(report.mae, report.mae_random_mean);
    return report;
}

}  // namespace spbench
