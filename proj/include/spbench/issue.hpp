// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spbench {

using Timestamp = std::chrono::sys_seconds;

/// Parses ISO-8601 date-times: `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM[:SS[.fff]]`
/// with an optional `Z`, `±HH:MM` or `±HHMM` offset. A space may replace `T`.
/// Values without an offset are taken as UTC.
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// `YYYY-MM-DDTHH:MM:SSZ`
std::string format_timestamp(Timestamp t);

enum class Flag { no, yes, unknown };

std::optional<Flag> parse_flag(std::string_view text);
std::string_view to_string(Flag f);

struct Issue {
    std::string issue_key;
    std::string project_key;
    std::string repository;
    Timestamp created{};
    std::optional<Timestamp> resolved;
    std::string title;
    std::string description;
    std::string issue_type;
    std::vector<std::string> components;
    double story_point = 0.0;
    // Porru provenance. Unset count / unknown flag means the issue came from a
    // source without changelog information.
    std::optional<int> sp_assignment_count;
    Flag fields_changed_after_sp = Flag::unknown;
    bool is_resolved = false;

    bool has_provenance() const noexcept {
        return sp_assignment_count.has_value() && fields_changed_after_sp != Flag::unknown;
    }
};

/// Total order used everywhere: creation time, then issue key.
inline bool created_before(const Issue& a, const Issue& b) noexcept {
    if (a.created != b.created) return a.created < b.created;
    return a.issue_key < b.issue_key;
}

/// Issues of one project (or a flagged multi-project pool), always sorted by
/// `created_before`. Immutable once built; transformations return new datasets.
class IssueDataset {
public:
    IssueDataset() = default;

    /// Sorts `issues`; throws DataError on duplicate keys, negative story points
    /// or resolved < created. Mixed project keys require `pooled`.
    IssueDataset(std::string project_key, std::string repository, std::vector<Issue> issues,
                 bool pooled = false);

    const std::string& project_key() const noexcept { return project_key_; }
    const std::string& repository() const noexcept { return repository_; }
    bool pooled() const noexcept { return pooled_; }
    std::span<const Issue> issues() const noexcept { return issues_; }
    std::size_t size() const noexcept { return issues_.size(); }
    bool empty() const noexcept { return issues_.empty(); }
    const Issue& operator[](std::size_t i) const { return issues_[i]; }

    auto begin() const noexcept { return issues_.begin(); }
    auto end() const noexcept { return issues_.end(); }

    std::vector<double> story_points() const;

    /// Same identity, different issue subset (re-validated and re-sorted).
    IssueDataset with_issues(std::vector<Issue> issues) const;

private:
    std::string project_key_;
    std::string repository_;
    std::vector<Issue> issues_;
    bool pooled_ = false;
};

std::vector<double> story_points(std::span<const Issue> issues);

}  // namespace spbench
