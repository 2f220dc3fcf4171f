// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#include "spbench/issue.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <unordered_set>

#include "spbench/error.hpp"

namespace spbench {

namespace {

bool read_digits(std::string_view s, std::size_t& pos, std::size_t count, int& out) {
    if (pos + count > s.size()) return false;
    int v = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const char c = s[pos + i];
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        v = v * 10 + (c - '0');
    }
    pos += count;
    out = v;
    return true;
}

bool expect(std::string_view s, std::size_t& pos, char c) {
    if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
    }
    return false;
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    using namespace std::chrono;
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);

    std::size_t pos = 0;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    if (!read_digits(text, pos, 4, y) || !expect(text, pos, '-') || !read_digits(text, pos, 2, mo) ||
        !expect(text, pos, '-') || !read_digits(text, pos, 2, d)) {
        return std::nullopt;
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;

    int offset_minutes = 0;
    if (pos < text.size()) {
        if (text[pos] != 'T' && text[pos] != ' ') return std::nullopt;
        ++pos;
        if (!read_digits(text, pos, 2, h) || !expect(text, pos, ':') || !read_digits(text, pos, 2, mi)) {
            return std::nullopt;
        }
        if (expect(text, pos, ':')) {
            if (!read_digits(text, pos, 2, sec)) return std::nullopt;
            if (expect(text, pos, '.') || expect(text, pos, ',')) {
                std::size_t start = pos;
                while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
                if (pos == start) return std::nullopt;
            }
        }
        if (h > 23 || mi > 59 || sec > 60) return std::nullopt;
        if (pos < text.size()) {
            const char sign = text[pos];
            if (sign == 'Z' || sign == 'z') {
                ++pos;
            } else if (sign == '+' || sign == '-') {
                ++pos;
                int oh = 0, om = 0;
                if (!read_digits(text, pos, 2, oh)) return std::nullopt;
                expect(text, pos, ':');
                if (!read_digits(text, pos, 2, om)) return std::nullopt;
                offset_minutes = (oh * 60 + om) * (sign == '-' ? -1 : 1);
            } else {
                return std::nullopt;
            }
        }
        if (pos != text.size()) return std::nullopt;
    }
    const sys_seconds local = sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
    return local - minutes{offset_minutes};
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const auto day_point = floor<days>(t);
    const year_month_day ymd{day_point};
    const hh_mm_ss hms{t - day_point};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

std::optional<Flag> parse_flag(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "true" || lower == "1" || lower == "yes") return Flag::yes;
    if (lower == "false" || lower == "0" || lower == "no") return Flag::no;
    if (lower == "unknown" || lower.empty()) return Flag::unknown;
    return std::nullopt;
}

std::string_view to_string(Flag f) {
    switch (f) {
        case Flag::yes: return "true";
        case Flag::no: return "false";
        case Flag::unknown: return "unknown";
    }
    return "unknown";
}

IssueDataset::IssueDataset(std::string project_key, std::string repository, std::vector<Issue> issues,
                           bool pooled)
    : project_key_(std::move(project_key)),
      repository_(std::move(repository)),
      issues_(std::move(issues)),
      pooled_(pooled) {
    std::unordered_set<std::string> keys;
    keys.reserve(issues_.size());
    for (const auto& issue : issues_) {
        if (!keys.insert(issue.issue_key).second) {
            throw DataError("duplicate issue key '" + issue.issue_key + "' in dataset " + project_key_);
        }
        if (!(issue.story_point >= 0.0)) {
            throw DataError("issue " + issue.issue_key + " has a negative story point");
        }
        if (issue.resolved && *issue.resolved < issue.created) {
            throw DataError("issue " + issue.issue_key + " is resolved before it was created");
        }
        if (!pooled_ && issue.project_key != project_key_) {
            throw DataError("issue " + issue.issue_key + " belongs to project " + issue.project_key +
                            ", not " + project_key_ + " (use a pooled dataset)");
        }
    }
    std::sort(issues_.begin(), issues_.end(), created_before);
}

std::vector<double> IssueDataset::story_points() const { return spbench::story_points(issues_); }

IssueDataset IssueDataset::with_issues(std::vector<Issue> issues) const {
    return IssueDataset(project_key_, repository_, std::move(issues), pooled_);
}

std::vector<double> story_points(std::span<const Issue> issues) {
    std::vector<double> out;
    out.reserve(issues.size());
    for (const auto& issue : issues) out.push_back(issue.story_point);
    return out;
}

}  // namespace spbench
