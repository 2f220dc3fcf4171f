// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "spbench/issue.hpp"

namespace spbench::testing {

inline Timestamp day(int d, int hour = 0) {
    return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::sys_days{std::chrono::days{19000 + d}}) +
           std::chrono::hours{hour};
}

inline Issue make_issue(std::string key, std::string project, int created_day, double sp, std::string title = {},
                        std::string description = {}) {
    Issue i;
    i.issue_key = std::move(key);
    i.project_key = std::move(project);
    i.repository = "apache";
    i.created = day(created_day);
    i.resolved = day(created_day + 3);
    i.is_resolved = true;
    i.title = std::move(title);
    i.description = std::move(description);
    i.issue_type = "Story";
    i.story_point = sp;
    i.sp_assignment_count = 1;
    i.fields_changed_after_sp = Flag::no;
    return i;
}

/// One issue per story point, created on consecutive days from `start`.
inline IssueDataset make_project(const std::string& project, const std::vector<double>& sps, int start = 0,
                                 std::string repository = "apache") {
    std::vector<Issue> issues;
    for (std::size_t k = 0; k < sps.size(); ++k) {
        auto i = make_issue(project + "-" + std::to_string(k + 1), project, start + static_cast<int>(k), sps[k],
                            "issue " + std::to_string(k + 1));
        i.repository = repository;
        issues.push_back(std::move(i));
    }
    return IssueDataset(project, repository, std::move(issues));
}

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("spbench-" + name + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace spbench::testing
