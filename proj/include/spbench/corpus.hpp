// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spbench/error.hpp"
#include "spbench/issue.hpp"

namespace spbench::corpus {

// ---------------------------------------------------------------------------
// Ingestion

inline constexpr std::array<std::string_view, 13> kCsvColumns = {
    "issue_key",   "project_key", "repository",  "created",    "resolved",
    "issue_type",  "components",  "title",       "description", "story_point",
    "sp_assignment_count", "fields_changed_after_sp", "is_resolved"};

struct IngestResult {
    IssueDataset dataset;
    std::vector<RowError> errors;
};

/// Reads the issue CSV. Required columns may appear in any order; extra columns
/// are ignored. Bad rows are skipped and reported, a missing column throws
/// SchemaError. Multiple project keys yield a pooled dataset.
IngestResult ingest_csv(const std::filesystem::path& path);
IngestResult ingest_csv(std::istream& in, std::string_view source_name = "<stream>");

/// Inverse of ingest_csv (header included, column order of kCsvColumns).
void write_csv(std::ostream& out, std::span<const Issue> issues);
void write_csv(const std::filesystem::path& path, std::span<const Issue> issues);

/// Splits a pooled dataset into one dataset per project key.
std::map<std::string, IssueDataset> by_project(const IssueDataset& pool);

/// Pool of every issue in `pool` whose project differs from `project_key`.
IssueDataset exclude_project(const IssueDataset& pool, std::string_view project_key);

// ---------------------------------------------------------------------------
// Filters

/// Keeps 0 < story_point <= 100.
IssueDataset apply_choet_filter(const IssueDataset& ds);

inline constexpr std::array<double, 11> kPlanningPokerValues = {0, 0.5, 1, 2, 3, 5, 8, 13, 20, 40, 100};

bool is_planning_poker_value(double sp) noexcept;

/// Keeps issues whose story point was assigned exactly once, that are resolved,
/// whose informative fields did not change after the estimate, and whose story
/// point is a Planning Poker card. Throws PreconditionError when any issue lacks
/// provenance.
IssueDataset apply_porru_filter(const IssueDataset& ds);

// ---------------------------------------------------------------------------
// Story-point cap

enum class CapMode { none, train_only, global };

std::optional<CapMode> parse_cap_mode(std::string_view text);
std::string_view to_string(CapMode mode);

/// Nearest-rank percentile: the value at rank ceil(p/100 * n) of the sorted sample.
/// Throws InvalidArgument on an empty sample or p outside (0, 100].
double nearest_rank_percentile(std::span<const double> values, double percentile);

/// Replaces every story point strictly above `cap` with `cap`.
std::vector<Issue> apply_cap(std::span<const Issue> issues, double cap);

struct CapResult {
    IssueDataset dataset;
    std::optional<double> cap_value;
    std::size_t capped_count = 0;
};

/// mode = none is the identity. Otherwise the cap is computed on `ds` and applied
/// to `ds`; for train_only the caller passes the training subset.
CapResult cap_story_points(const IssueDataset& ds, CapMode mode, double percentile = 90.0);

// ---------------------------------------------------------------------------
// Splits

enum class Scenario {
    within_project,
    cross_project_within_repo,
    cross_project_cross_repo,
    chronological_cross,
    augmented,
};

std::optional<Scenario> parse_scenario(std::string_view text);
std::string_view to_string(Scenario s);

/// Which dataset an index refers to: the target project or the source/pool.
enum class Origin { target, source };

struct IssueRef {
    Origin origin = Origin::target;
    std::size_t index = 0;

    friend bool operator==(const IssueRef&, const IssueRef&) = default;
};

struct SplitPlan {
    Scenario scenario = Scenario::within_project;
    std::vector<IssueRef> train;
    std::vector<IssueRef> validation;
    std::vector<IssueRef> test;
    CapMode cap_mode = CapMode::none;
    std::optional<double> cap_value;
    std::vector<std::string> caveats;
};

/// Issues of a plan, resolved against the datasets it indexes.
struct SplitData {
    std::vector<Issue> train;
    std::vector<Issue> validation;
    std::vector<Issue> test;
};

SplitData materialize(const SplitPlan& plan, const IssueDataset& target, const IssueDataset* source = nullptr);

/// Oldest floor(train_frac*n) issues train, next floor(val_frac*n) validate,
/// the remainder tests. Requires n >= 5.
SplitPlan chronological_split(const IssueDataset& ds, double train_frac = 0.6, double val_frac = 0.2);

/// Source split 75/25 chronologically into train/validation; all target issues test.
SplitPlan cross_project_split(const IssueDataset& source, const IssueDataset& target,
                              Scenario scenario = Scenario::cross_project_within_repo,
                              double train_frac = 0.75);

inline constexpr std::size_t kMinSourceIssues = 200;

/// Source issues created strictly before the target's earliest issue.
IssueDataset chronological_cross_filter(const IssueDataset& source_pool, const IssueDataset& target);

bool meets_source_floor(const IssueDataset& source) noexcept;

enum class AugmentRule {
    created_before_validation,  // default
    resolved_before_test,
};

/// Extends a within-project plan's training set with pool issues. Validation
/// and test are untouched. Pool issues of the target project are rejected.
SplitPlan augment_training(const SplitPlan& plan, const IssueDataset& target, const IssueDataset& pool,
                           AugmentRule rule = AugmentRule::created_before_validation);

struct ChronologyViolation {
    std::string issue_key;
    std::string reason;
};

/// Scans training (and, for cross scenarios, validation) issues against the
/// creation-time rule of the plan's scenario.
std::vector<ChronologyViolation> audit_chronology(const SplitPlan& plan, const IssueDataset& target,
                                                  const IssueDataset* source = nullptr,
                                                  AugmentRule rule = AugmentRule::created_before_validation);

/// Flat description of a plan: one row per (set, origin, issue_key, created).
void write_split_csv(std::ostream& out, const SplitPlan& plan, const IssueDataset& target,
                     const IssueDataset* source = nullptr);

// ---------------------------------------------------------------------------
// Profiling

bool detect_code_snippet(std::string_view text);

struct CorpusProfile {
    std::map<std::string, std::size_t> issue_type_counts;
    std::map<std::string, std::size_t> code_snippet_counts;
    std::map<std::string, std::vector<std::size_t>> description_token_length;

    std::size_t total() const;
};

CorpusProfile profile(const IssueDataset& ds);

}  // namespace spbench::corpus
