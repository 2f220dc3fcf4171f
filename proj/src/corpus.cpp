// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#include "spbench/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "spbench/csv.hpp"
#include "spbench/text.hpp"

namespace spbench::corpus {

namespace {

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

std::string join(const std::set<std::string>& values, char sep) {
    std::string out;
    for (const auto& v : values) {
        if (!out.empty()) out.push_back(sep);
        out += v;
    }
    return out;
}

std::vector<std::string> split_components(std::string_view field) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= field.size()) {
        std::size_t end = field.find(';', start);
        if (end == std::string_view::npos) end = field.size();
        auto part = trim(field.substr(start, end - start));
        if (!part.empty()) out.push_back(std::move(part));
        start = end + 1;
    }
    return out;
}

// Builds a dataset for issues that may span several projects.
IssueDataset make_dataset(std::vector<Issue> issues) {
    std::set<std::string> projects;
    std::set<std::string> repositories;
    for (const auto& issue : issues) {
        projects.insert(issue.project_key);
        repositories.insert(issue.repository);
    }
    const bool pooled = projects.size() > 1;
    return IssueDataset(join(projects, '+'), join(repositories, '+'), std::move(issues), pooled);
}

const Issue& resolve(const IssueRef& ref, const IssueDataset& target, const IssueDataset* source) {
    if (ref.origin == Origin::target) return target[ref.index];
    if (!source) throw InvalidArgument("split plan references a source dataset that was not supplied");
    return (*source)[ref.index];
}

std::vector<IssueRef> range_refs(Origin origin, std::size_t begin, std::size_t end) {
    std::vector<IssueRef> refs;
    refs.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) refs.push_back({origin, i});
    return refs;
}

std::size_t floor_fraction(double frac, std::size_t n) {
    // The epsilon absorbs representation error (0.6 * 10 must give 6).
    return static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
}

}  // namespace

// ---------------------------------------------------------------------------
// Ingestion

IngestResult ingest_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return ingest_csv(in, path.string());
}

IngestResult ingest_csv(std::istream& in, std::string_view source_name) {
    csv::Reader reader(in);
    csv::Record header;
    if (!reader.next(header)) throw SchemaError(std::string(source_name) + ": empty file, no header row");

    std::unordered_map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header.size(); ++i) column.emplace(trim(header[i]), i);
    std::vector<std::string> missing;
    for (auto name : kCsvColumns) {
        if (!column.contains(std::string(name))) missing.emplace_back(name);
    }
    if (!missing.empty()) {
        std::string msg = std::string(source_name) + ": missing required column(s):";
        for (const auto& m : missing) msg += " " + m;
        throw SchemaError(msg);
    }
    auto col = [&](std::string_view name) { return column.at(std::string(name)); };

    IngestResult result;
    std::vector<Issue> issues;
    std::unordered_set<std::string> seen;
    csv::Record row;
    std::size_t row_number = 0;
    while (reader.next(row)) {
        ++row_number;
        if (row.size() == 1 && trim(row[0]).empty()) continue;  // blank line
        auto fail = [&](const std::string& why) {
            result.errors.push_back({row_number, "line " + std::to_string(reader.line()) + ": " + why});
        };
        if (row.size() != header.size()) {
            fail("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(row.size()));
            continue;
        }
        auto field = [&](std::string_view name) -> const std::string& { return row[col(name)]; };

        Issue issue;
        issue.issue_key = trim(field("issue_key"));
        if (issue.issue_key.empty()) {
            fail("empty issue_key");
            continue;
        }
        issue.project_key = trim(field("project_key"));
        issue.repository = trim(field("repository"));
        issue.title = field("title");
        issue.description = field("description");
        issue.issue_type = trim(field("issue_type"));
        issue.components = split_components(field("components"));

        const auto created = parse_timestamp(field("created"));
        if (!created) {
            fail("unparseable created timestamp '" + field("created") + "'");
            continue;
        }
        issue.created = *created;
        if (const auto raw = trim(field("resolved")); !raw.empty()) {
            const auto resolved = parse_timestamp(raw);
            if (!resolved) {
                fail("unparseable resolved timestamp '" + raw + "'");
                continue;
            }
            if (*resolved < issue.created) {
                fail("resolved before created");
                continue;
            }
            issue.resolved = *resolved;
        }

        const auto sp = csv::parse_double(field("story_point"));
        if (!sp || !std::isfinite(*sp) || *sp < 0.0) {
            fail("invalid story_point '" + field("story_point") + "'");
            continue;
        }
        issue.story_point = *sp;

        if (const auto raw = trim(field("sp_assignment_count")); !raw.empty() && raw != "unknown") {
            int count = 0;
            const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), count);
            if (ec != std::errc{} || ptr != raw.data() + raw.size() || count < 0) {
                fail("invalid sp_assignment_count '" + raw + "'");
                continue;
            }
            issue.sp_assignment_count = count;
        }
        const auto changed = parse_flag(trim(field("fields_changed_after_sp")));
        if (!changed) {
            fail("invalid fields_changed_after_sp '" + field("fields_changed_after_sp") + "'");
            continue;
        }
        issue.fields_changed_after_sp = *changed;

        if (const auto raw = trim(field("is_resolved")); raw.empty()) {
            issue.is_resolved = issue.resolved.has_value();
        } else {
            const auto flag = parse_flag(raw);
            if (!flag || *flag == Flag::unknown) {
                fail("invalid is_resolved '" + raw + "'");
                continue;
            }
            issue.is_resolved = *flag == Flag::yes;
        }

        if (!seen.insert(issue.issue_key).second) {
            fail("duplicate issue_key '" + issue.issue_key + "'");
            continue;
        }
        issues.push_back(std::move(issue));
    }
    result.dataset = make_dataset(std::move(issues));
    return result;
}

void write_csv(std::ostream& out, std::span<const Issue> issues) {
    csv::write_row(out, csv::Record(kCsvColumns.begin(), kCsvColumns.end()));
    for (const auto& issue : issues) {
        std::string components;
        for (const auto& c : issue.components) {
            if (!components.empty()) components.push_back(';');
            components += c;
        }
        csv::write_row(out, {issue.issue_key, issue.project_key, issue.repository, format_timestamp(issue.created),
                             issue.resolved ? format_timestamp(*issue.resolved) : std::string(), issue.issue_type,
                             components, issue.title, issue.description, csv::format_double(issue.story_point),
                             issue.sp_assignment_count ? std::to_string(*issue.sp_assignment_count) : "unknown",
                             std::string(to_string(issue.fields_changed_after_sp)),
                             issue.is_resolved ? "true" : "false"});
    }
}

void write_csv(const std::filesystem::path& path, std::span<const Issue> issues) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_csv(out, issues);
}

std::map<std::string, IssueDataset> by_project(const IssueDataset& pool) {
    std::map<std::string, std::vector<Issue>> groups;
    for (const auto& issue : pool) groups[issue.project_key].push_back(issue);
    std::map<std::string, IssueDataset> out;
    for (auto& [key, issues] : groups) {
        std::string repo = issues.front().repository;
        out.emplace(key, IssueDataset(key, std::move(repo), std::move(issues)));
    }
    return out;
}

IssueDataset exclude_project(const IssueDataset& pool, std::string_view project_key) {
    std::vector<Issue> kept;
    for (const auto& issue : pool) {
        if (issue.project_key != project_key) kept.push_back(issue);
    }
    return make_dataset(std::move(kept));
}

// ---------------------------------------------------------------------------
// Filters

IssueDataset apply_choet_filter(const IssueDataset& ds) {
    std::vector<Issue> kept;
    for (const auto& issue : ds) {
        if (issue.story_point > 0.0 && issue.story_point <= 100.0) kept.push_back(issue);
    }
    return ds.with_issues(std::move(kept));
}

bool is_planning_poker_value(double sp) noexcept {
    return std::find(kPlanningPokerValues.begin(), kPlanningPokerValues.end(), sp) != kPlanningPokerValues.end();
}

IssueDataset apply_porru_filter(const IssueDataset& ds) {
    for (const auto& issue : ds) {
        if (!issue.has_provenance()) {
            throw PreconditionError("dataset '" + ds.project_key() + "' lacks story-point provenance (issue " +
                                    issue.issue_key + "); the Porru filter needs sp_assignment_count and "
                                    "fields_changed_after_sp");
        }
    }
    std::vector<Issue> kept;
    for (const auto& issue : ds) {
        if (*issue.sp_assignment_count == 1 && issue.is_resolved && issue.fields_changed_after_sp == Flag::no &&
            is_planning_poker_value(issue.story_point)) {
            kept.push_back(issue);
        }
    }
    return ds.with_issues(std::move(kept));
}

// ---------------------------------------------------------------------------
// Story-point cap

std::optional<CapMode> parse_cap_mode(std::string_view text) {
    if (text == "none") return CapMode::none;
    if (text == "train-only" || text == "train_only") return CapMode::train_only;
    if (text == "global") return CapMode::global;
    return std::nullopt;
}

std::string_view to_string(CapMode mode) {
    switch (mode) {
        case CapMode::none: return "none";
        case CapMode::train_only: return "train-only";
        case CapMode::global: return "global";
    }
    return "none";
}

double nearest_rank_percentile(std::span<const double> values, double percentile) {
    if (values.empty()) throw InvalidArgument("percentile of an empty sample");
    if (!(percentile > 0.0 && percentile <= 100.0)) throw InvalidArgument("percentile must lie in (0, 100]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double exact = percentile / 100.0 * static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(exact - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

std::vector<Issue> apply_cap(std::span<const Issue> issues, double cap) {
    std::vector<Issue> out(issues.begin(), issues.end());
    for (auto& issue : out) issue.story_point = std::min(issue.story_point, cap);
    return out;
}

CapResult cap_story_points(const IssueDataset& ds, CapMode mode, double percentile) {
    if (ds.empty()) throw InvalidArgument("cannot cap story points of an empty dataset");
    if (mode == CapMode::none) return {ds, std::nullopt, 0};
    const auto sps = ds.story_points();
    const double cap = nearest_rank_percentile(sps, percentile);
    const auto capped = static_cast<std::size_t>(std::count_if(sps.begin(), sps.end(), [&](double v) { return v > cap; }));
    return {ds.with_issues(apply_cap(ds.issues(), cap)), cap, capped};
}

// ---------------------------------------------------------------------------
// Splits

std::optional<Scenario> parse_scenario(std::string_view text) {
    if (text == "within_project") return Scenario::within_project;
    if (text == "cross_project_within_repo") return Scenario::cross_project_within_repo;
    if (text == "cross_project_cross_repo") return Scenario::cross_project_cross_repo;
    if (text == "chronological_cross") return Scenario::chronological_cross;
    if (text == "augmented") return Scenario::augmented;
    return std::nullopt;
}

std::string_view to_string(Scenario s) {
    switch (s) {
        case Scenario::within_project: return "within_project";
        case Scenario::cross_project_within_repo: return "cross_project_within_repo";
        case Scenario::cross_project_cross_repo: return "cross_project_cross_repo";
        case Scenario::chronological_cross: return "chronological_cross";
        case Scenario::augmented: return "augmented";
    }
    return "within_project";
}

SplitData materialize(const SplitPlan& plan, const IssueDataset& target, const IssueDataset* source) {
    auto take = [&](const std::vector<IssueRef>& refs) {
        std::vector<Issue> out;
        out.reserve(refs.size());
        for (const auto& ref : refs) out.push_back(resolve(ref, target, source));
        return out;
    };
    return {take(plan.train), take(plan.validation), take(plan.test)};
}

SplitPlan chronological_split(const IssueDataset& ds, double train_frac, double val_frac) {
    const std::size_t n = ds.size();
    if (n < 5) {
        throw DataError("dataset " + ds.project_key() + " has " + std::to_string(n) +
                        " issues; a chronological split needs at least 5");
    }
    if (!(train_frac > 0.0) || !(val_frac > 0.0) || train_frac + val_frac >= 1.0) {
        throw InvalidArgument("split fractions must be positive and sum to less than 1");
    }
    const std::size_t n_train = floor_fraction(train_frac, n);
    const std::size_t n_val = floor_fraction(val_frac, n);
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
        throw DataError("dataset " + ds.project_key() + " is too small for the requested split fractions");
    }
    SplitPlan plan;
    plan.scenario = Scenario::within_project;
    plan.train = range_refs(Origin::target, 0, n_train);
    plan.validation = range_refs(Origin::target, n_train, n_train + n_val);
    plan.test = range_refs(Origin::target, n_train + n_val, n);
    return plan;
}

SplitPlan cross_project_split(const IssueDataset& source, const IssueDataset& target, Scenario scenario,
                              double train_frac) {
    if (source.project_key() == target.project_key()) {
        throw InvalidArgument("cross-project split needs distinct projects, both are '" + target.project_key() + "'");
    }
    for (const auto& issue : source) {
        if (issue.project_key == target.project_key()) {
            throw InvalidArgument("source pool contains issue " + issue.issue_key + " of the target project");
        }
    }
    if (target.empty()) throw DataError("target project " + target.project_key() + " has no issues");
    const std::size_t n = source.size();
    const std::size_t n_train = floor_fraction(train_frac, n);
    if (n_train == 0 || n_train >= n) {
        throw DataError("source " + source.project_key() + " has " + std::to_string(n) +
                        " issues, too few for a train/validation split");
    }
    SplitPlan plan;
    plan.scenario = scenario;
    plan.train = range_refs(Origin::source, 0, n_train);
    plan.validation = range_refs(Origin::source, n_train, n);
    plan.test = range_refs(Origin::target, 0, target.size());
    return plan;
}

IssueDataset chronological_cross_filter(const IssueDataset& source_pool, const IssueDataset& target) {
    if (target.empty()) throw InvalidArgument("target project has no issues, start date undefined");
    const Timestamp start = target[0].created;
    std::vector<Issue> kept;
    for (const auto& issue : source_pool) {
        if (issue.created < start) kept.push_back(issue);
    }
    return source_pool.with_issues(std::move(kept));
}

bool meets_source_floor(const IssueDataset& source) noexcept { return source.size() >= kMinSourceIssues; }

SplitPlan augment_training(const SplitPlan& plan, const IssueDataset& target, const IssueDataset& pool,
                           AugmentRule rule) {
    if (plan.scenario != Scenario::within_project) {
        throw InvalidArgument("augmentation applies to within-project plans only");
    }
    if (plan.validation.empty() || plan.test.empty()) throw InvalidArgument("plan has no validation or test issues");
    for (const auto& issue : pool) {
        if (issue.project_key == target.project_key()) {
            throw InvalidArgument("augmentation pool contains issue " + issue.issue_key + " of the target project");
        }
    }
    auto earliest = [&](const std::vector<IssueRef>& refs) {
        Timestamp t = Timestamp::max();
        for (const auto& ref : refs) t = std::min(t, target[ref.index].created);
        return t;
    };
    const Timestamp validation_start = earliest(plan.validation);
    const Timestamp test_start = earliest(plan.test);

    SplitPlan out = plan;
    out.scenario = Scenario::augmented;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const Issue& issue = pool[i];
        const bool qualifies = rule == AugmentRule::created_before_validation
                                   ? issue.created < validation_start
                                   : issue.resolved.has_value() && *issue.resolved < test_start;
        if (qualifies) out.train.push_back({Origin::source, i});
    }
    return out;
}

std::vector<ChronologyViolation> audit_chronology(const SplitPlan& plan, const IssueDataset& target,
                                                  const IssueDataset* source, AugmentRule rule) {
    std::vector<ChronologyViolation> violations;
    auto earliest = [&](const std::vector<IssueRef>& refs) {
        Timestamp t = Timestamp::max();
        for (const auto& ref : refs) t = std::min(t, resolve(ref, target, source).created);
        return t;
    };
    switch (plan.scenario) {
        case Scenario::within_project: {
            const Timestamp val_start = earliest(plan.validation);
            const Timestamp test_start = earliest(plan.test);
            for (const auto& ref : plan.train) {
                const Issue& issue = resolve(ref, target, source);
                if (issue.created > val_start) violations.push_back({issue.issue_key, "training issue newer than validation"});
            }
            for (const auto& ref : plan.validation) {
                const Issue& issue = resolve(ref, target, source);
                if (issue.created > test_start) violations.push_back({issue.issue_key, "validation issue newer than test"});
            }
            break;
        }
        case Scenario::chronological_cross: {
            const Timestamp start = target.empty() ? Timestamp::max() : target[0].created;
            for (const auto* set : {&plan.train, &plan.validation}) {
                for (const auto& ref : *set) {
                    const Issue& issue = resolve(ref, target, source);
                    if (issue.created >= start) {
                        violations.push_back({issue.issue_key, "source issue created on/after the target start date"});
                    }
                }
            }
            break;
        }
        case Scenario::augmented: {
            const Timestamp val_start = earliest(plan.validation);
            const Timestamp test_start = earliest(plan.test);
            for (const auto& ref : plan.train) {
                const Issue& issue = resolve(ref, target, source);
                if (ref.origin == Origin::target) {
                    if (issue.created > val_start) violations.push_back({issue.issue_key, "training issue newer than validation"});
                } else if (rule == AugmentRule::created_before_validation) {
                    if (issue.created >= val_start) {
                        violations.push_back({issue.issue_key, "augmented issue created on/after the first validation issue"});
                    }
                } else if (!issue.resolved || *issue.resolved >= test_start) {
                    violations.push_back({issue.issue_key, "augmented issue not resolved before the first test issue"});
                }
            }
            break;
        }
        case Scenario::cross_project_within_repo:
        case Scenario::cross_project_cross_repo:
            // No temporal constraint in the replicated cross-project setting.
            break;
    }
    return violations;
}

void write_split_csv(std::ostream& out, const SplitPlan& plan, const IssueDataset& target, const IssueDataset* source) {
    csv::write_row(out, {"set", "origin", "issue_key", "project_key", "created", "resolved", "story_point"});
    auto emit = [&](std::string_view set, const std::vector<IssueRef>& refs) {
        for (const auto& ref : refs) {
            const Issue& issue = resolve(ref, target, source);
            csv::write_row(out, {std::string(set), ref.origin == Origin::target ? "target" : "source", issue.issue_key,
                                 issue.project_key, format_timestamp(issue.created),
                                 issue.resolved ? format_timestamp(*issue.resolved) : std::string(),
                                 csv::format_double(issue.story_point)});
        }
    };
    emit("train", plan.train);
    emit("validation", plan.validation);
    emit("test", plan.test);
}

// ---------------------------------------------------------------------------
// Profiling

bool detect_code_snippet(std::string_view text) { return !text::find_code_regions(text).empty(); }

std::size_t CorpusProfile::total() const {
    std::size_t n = 0;
    for (const auto& [type, count] : issue_type_counts) n += count;
    return n;
}

CorpusProfile profile(const IssueDataset& ds) {
    CorpusProfile p;
    for (const auto& issue : ds) {
        ++p.issue_type_counts[issue.issue_type];
        auto& snippets = p.code_snippet_counts[issue.issue_type];
        if (detect_code_snippet(issue.description)) ++snippets;
        p.description_token_length[issue.issue_type].push_back(text::whitespace_token_count(issue.description));
    }
    return p;
}

}  // namespace spbench::corpus
