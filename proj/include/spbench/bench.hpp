// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spbench/corpus.hpp"
#include "spbench/deepse.hpp"
#include "spbench/metrics.hpp"
#include "spbench/stats.hpp"

namespace spbench::bench {

inline constexpr std::string_view kMethods[] = {"random", "mean", "median", "tfidf_svm", "deepse", "deepse_nopretrain"};

bool is_known_method(std::string_view name) noexcept;
bool is_stochastic(std::string_view method) noexcept;

enum class DatasetFilter { none, choet, porru };

std::optional<DatasetFilter> parse_filter(std::string_view text);
std::string_view to_string(DatasetFilter f);

struct ExperimentConfig {
    corpus::Scenario scenario = corpus::Scenario::within_project;
    /// Issue CSV holding the target project(s). Relative paths resolve
    /// against the data root.
    std::filesystem::path target_path;
    /// Target projects to run; empty means every project in the file.
    std::vector<std::string> projects;
    /// Issue CSV for the source side of cross-project and augmented runs.
    /// Empty reuses target_path.
    std::filesystem::path source_path;
    /// Source project for the two cross-project scenarios.
    std::string source_project;
    std::vector<std::string> methods = {"mean", "median"};
    corpus::CapMode cap_mode = corpus::CapMode::none;
    double cap_percentile = 90.0;
    bool legacy_offset = false;
    std::vector<std::uint64_t> seeds = {0};
    DatasetFilter filter = DatasetFilter::none;
    corpus::AugmentRule augment_rule = corpus::AugmentRule::created_before_validation;
    std::size_t tfidf_k = 100;
    double svm_c = 1.0;
    deepse::DeepSEConfig deepse;
    double alpha = 0.05;
    int sa_runs = 1000;
    bool save_models = true;
    /// Worker threads for independent (project, method, seed) cells.
    int jobs = 1;
    std::filesystem::path output_dir = "runs";

    /// Throws InvalidArgument when the config cannot describe a run.
    void validate() const;

    /// Canonical JSON (sorted keys, no output directory).
    std::string canonical_json() const;
    std::string to_json() const;
    static ExperimentConfig from_json(std::string_view text);
    /// JSON when the first non-blank character is '{', otherwise key = value
    /// lines with '#' comments. List values are comma-separated.
    static ExperimentConfig parse(std::string_view text);
    static ExperimentConfig load(const std::filesystem::path& path);
};

/// Data root from SPBENCH_DATA_DIR, if set and non-empty.
std::optional<std::filesystem::path> data_root();
std::filesystem::path resolve_data_path(const std::filesystem::path& p);

struct MethodRun {
    std::string project;
    std::string method;
    std::uint64_t seed = 0;
    std::string predictions_path;  // relative to the run directory
    EvalReport report;
    double seconds = 0.0;
    int epochs = 0;
    int best_epoch = 0;
    double pretrain_seconds = 0.0;
    std::string trace_path;
    std::string model_path;
};

struct ProjectStat {
    std::string project;
    stats::StatTestResult result;
};

struct Failure {
    std::string project;
    std::string method;
    std::string kind;  // "data" or "runtime"
    std::string message;
};

struct ProjectSummary {
    std::string project;
    std::size_t train = 0;
    std::size_t validation = 0;
    std::size_t test = 0;
    std::optional<double> cap_value;
    std::size_t capped = 0;
    std::size_t chronology_violations = 0;
    std::string split_path;
};

struct RunRecord {
    ExperimentConfig config;
    std::string digest;
    std::filesystem::path run_dir;
    std::vector<ProjectSummary> projects;
    std::vector<MethodRun> runs;
    std::vector<ProjectStat> stats;
    std::vector<Failure> failures;

    bool ok() const noexcept { return failures.empty(); }
    /// Every artifact path the record lists, relative to run_dir.
    std::vector<std::string> artifacts() const;

    std::string to_json() const;
    static RunRecord from_json(std::string_view text);
    static RunRecord load(const std::filesystem::path& run_dir);
};

/// 16 hex digits of FNV-1a over the canonical config and the dataset bytes.
std::string config_digest(const ExperimentConfig& cfg);

/// Runs every (project, method, seed) cell, evaluates, compares methods and
/// persists everything under output_dir/run-<digest>. Refuses to reuse an
/// existing run directory. Per-project or per-method errors are recorded as
/// failures; datasets that fail to load throw.
RunRecord run_experiment(const ExperimentConfig& cfg);

/// Story-point cap on a materialised split. global: cap from every issue,
/// applied to all sets. train_only: cap from training issues, applied to
/// training and validation; test labels are untouched.
struct SplitCap {
    std::optional<double> cap_value;
    std::size_t capped_train = 0;
    std::size_t capped_validation = 0;
    std::size_t capped_test = 0;

    std::size_t total() const noexcept { return capped_train + capped_validation + capped_test; }
};
SplitCap cap_split(corpus::SplitData& split, corpus::CapMode mode, double percentile = 90.0);

enum class TableStyle { csv, markdown };

std::optional<TableStyle> parse_style(std::string_view text);

/// "p (A12) letter": p to 3 decimals or "< 0.001"; the magnitude letter only
/// when p < alpha and A12 >= 0.5, "_" otherwise ("\_" in markdown).
std::string format_stat_cell(const stats::StatTestResult& r, TableStyle style);

/// Two decimals.
std::string format_metric(double v);

/// Per project: metrics_<project> (method x MAE/MdAE/SA, mean over seeds) and
/// stats_<project> (method_a rows x method_b columns), plus stats_summary
/// (project rows x "<first method> vs. X" columns). Returns the written paths.
std::vector<std::filesystem::path> emit_tables(std::span<const RunRecord> records, TableStyle style,
                                               const std::filesystem::path& out_dir);

/// Tables as strings, keyed by file stem.
std::vector<std::pair<std::string, std::string>> render_tables(std::span<const RunRecord> records,
                                                               TableStyle style);

}  // namespace spbench::bench
