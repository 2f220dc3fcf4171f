// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "spbench/bench.hpp"
#include "spbench/corpus.hpp"
#include "spbench/error.hpp"
#include "spbench/rng.hpp"
#include "support.hpp"
#include "synthetic.hpp"
#include "table_fixture.hpp"

using namespace spbench;
using namespace spbench::bench;
namespace fs = std::filesystem;
using spbench::testing::make_project;
using spbench::testing::scratch_dir;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_dataset(const fs::path& dir, const std::vector<Issue>& issues, const std::string& name = "issues.csv") {
    const auto path = dir / name;
    corpus::write_csv(path, issues);
    return path;
}

// SPs 1 2 3 5 8 13 | 1 2 | 3 5 over days 0..9: train mean 32/6, median 4.
std::vector<Issue> ten_issues() {
    const auto ds = make_project("TEN", {1, 2, 3, 5, 8, 13, 1, 2, 3, 5});
    return {ds.begin(), ds.end()};
}

ExperimentConfig base_config(const fs::path& dir, const fs::path& data) {
    ExperimentConfig cfg;
    cfg.target_path = data;
    cfg.methods = {"mean", "median"};
    cfg.sa_runs = 200;
    cfg.output_dir = dir / "runs";
    return cfg;
}

}  // namespace

TEST(Bench, BaselineRunMatchesHandComputation) {
    const auto dir = scratch_dir("bench-hand");
    const auto cfg = base_config(dir, write_dataset(dir, ten_issues()));
    const auto rec = run_experiment(cfg);
    ASSERT_TRUE(rec.ok()) << rec.failures.front().message;
    ASSERT_EQ(rec.runs.size(), 2u);
    ASSERT_EQ(rec.stats.size(), 1u);
    ASSERT_EQ(rec.projects.size(), 1u);
    EXPECT_EQ(rec.projects[0].train, 6u);
    EXPECT_EQ(rec.projects[0].validation, 2u);
    EXPECT_EQ(rec.projects[0].test, 2u);
    const double mean = 32.0 / 6.0;
    EXPECT_DOUBLE_EQ(rec.runs[0].report.mae, (std::abs(3 - mean) + std::abs(5 - mean)) / 2.0);
    EXPECT_DOUBLE_EQ(rec.runs[1].report.mae, 1.0);
    EXPECT_EQ(rec.runs[0].method, "mean");
    EXPECT_EQ(rec.stats[0].result.method_a, "mean");
    EXPECT_EQ(rec.stats[0].result.method_b, "median");

    for (const auto& a : rec.artifacts()) EXPECT_TRUE(fs::exists(rec.run_dir / a)) << a;
    const auto back = RunRecord::load(rec.run_dir);
    EXPECT_EQ(back.digest, rec.digest);
    EXPECT_EQ(back.runs.size(), 2u);
    EXPECT_EQ(back.runs[1].report.mae, rec.runs[1].report.mae);
}

TEST(Bench, RerunIsByteIdenticalAndNeverOverwrites) {
    const auto dir = scratch_dir("bench-rerun");
    auto cfg = base_config(dir, write_dataset(dir, ten_issues()));
    cfg.methods = {"random", "mean", "median"};
    cfg.seeds = {1, 2};
    const auto first = run_experiment(cfg);
    EXPECT_THROW(run_experiment(cfg), Error);

    cfg.output_dir = dir / "again";
    cfg.jobs = 3;
    const auto second = run_experiment(cfg);
    EXPECT_EQ(first.digest, second.digest);
    for (const auto* f : {"metrics.csv", "stats.csv", "failures.csv"}) {
        EXPECT_EQ(slurp(first.run_dir / f), slurp(second.run_dir / f)) << f;
    }
    // config.json records the output directory and worker count; the rest is canonical
    EXPECT_EQ(ExperimentConfig::load(first.run_dir / "config.json").canonical_json(),
              ExperimentConfig::load(second.run_dir / "config.json").canonical_json());
    EXPECT_EQ(first.runs.size(), 2u + 1u + 1u);
}

TEST(Bench, DigestTracksConfigAndData) {
    const auto dir = scratch_dir("bench-digest");
    auto cfg = base_config(dir, write_dataset(dir, ten_issues()));
    const auto d0 = config_digest(cfg);
    EXPECT_EQ(d0.size(), 16u);
    cfg.output_dir = dir / "elsewhere";
    EXPECT_EQ(config_digest(cfg), d0);
    cfg.legacy_offset = true;
    EXPECT_NE(config_digest(cfg), d0);
    cfg.legacy_offset = false;
    auto issues = ten_issues();
    issues[0].story_point = 2;
    write_dataset(dir, issues);
    EXPECT_NE(config_digest(cfg), d0);
}

TEST(Bench, ChronologicalCrossBelowTheFloorIsRefused) {
    const auto dir = scratch_dir("bench-floor");
    auto issues = ten_issues();
    const auto other = make_project("SRC", std::vector<double>(50, 3.0), -100);
    issues.insert(issues.end(), other.begin(), other.end());
    auto cfg = base_config(dir, write_dataset(dir, issues));
    cfg.scenario = corpus::Scenario::chronological_cross;
    cfg.projects = {"TEN"};
    const auto rec = run_experiment(cfg);
    ASSERT_EQ(rec.failures.size(), 1u);
    EXPECT_EQ(rec.failures[0].kind, "data");
    EXPECT_NE(rec.failures[0].message.find("at least 200"), std::string::npos);
    EXPECT_TRUE(rec.runs.empty());
}

TEST(Bench, UnknownProjectIsADataError) {
    const auto dir = scratch_dir("bench-unknown");
    auto cfg = base_config(dir, write_dataset(dir, ten_issues()));
    cfg.projects = {"NOPE"};
    EXPECT_THROW(run_experiment(cfg), DataError);
}

TEST(Bench, CreationTimeRulesHoldOnRandomRepositories) {
    const auto dir = scratch_dir("bench-chrono");
    Rng rng(2026);
    std::size_t checked = 0;
    for (int repo = 0; repo < 20; ++repo) {
        const auto data = write_dataset(dir, spbench::testing::random_repository(rng), "repo" + std::to_string(repo) + ".csv");
        for (auto scenario : {corpus::Scenario::chronological_cross, corpus::Scenario::augmented}) {
            auto cfg = base_config(dir, data);
            cfg.scenario = scenario;
            cfg.methods = {"mean"};
            cfg.sa_runs = 10;
            const auto rec = run_experiment(cfg);
            for (const auto& p : rec.projects) {
                const auto rows = spbench::testing::read_split_rows(rec.run_dir / p.split_path);
                EXPECT_TRUE(spbench::testing::scan_split(rows, std::string(corpus::to_string(scenario))).empty()) << p.split_path;
                EXPECT_EQ(p.chronology_violations, 0u);
                ++checked;
            }
        }
    }
    EXPECT_GT(checked, 20u);
}

TEST(CapSplit, GlobalAndTrainOnlyModes) {
    corpus::SplitData split;
    for (int i = 0; i < 10; ++i) split.train.push_back(spbench::testing::make_issue("A-" + std::to_string(i), "A", i, i + 1));
    split.validation.push_back(spbench::testing::make_issue("V-1", "A", 20, 40));
    split.test.push_back(spbench::testing::make_issue("T-1", "A", 30, 100));

    auto global = split;
    const auto g = cap_split(global, corpus::CapMode::global);
    // 12 values 1..10, 40, 100: nearest-rank 90th percentile is the 11th value
    ASSERT_TRUE(g.cap_value.has_value());
    EXPECT_EQ(*g.cap_value, 40.0);
    EXPECT_EQ(g.capped_test, 1u);
    EXPECT_EQ(global.test[0].story_point, 40.0);

    auto train_only = split;
    const auto t = cap_split(train_only, corpus::CapMode::train_only);
    EXPECT_EQ(*t.cap_value, 9.0);
    EXPECT_EQ(t.capped_train, 1u);
    EXPECT_EQ(t.capped_validation, 1u);
    EXPECT_EQ(t.capped_test, 0u);
    EXPECT_EQ(train_only.test[0].story_point, 100.0);

    auto none = split;
    EXPECT_EQ(cap_split(none, corpus::CapMode::none).total(), 0u);
}

TEST(Config, KeyValueAndJsonFormsAgree) {
    const auto kv = ExperimentConfig::parse(
        "# comment\n"
        "scenario = within_project\n"
        "target = data/issues.csv\n"
        "methods = mean, median, tfidf_svm\n"
        "seeds = 1, 2, 3\n"
        "cap_mode = train-only\n"
        "legacy_offset = true\n"
        "deepse.lstm_dim = 32\n");
    EXPECT_EQ(kv.methods, (std::vector<std::string>{"mean", "median", "tfidf_svm"}));
    EXPECT_EQ(kv.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
    EXPECT_EQ(kv.cap_mode, corpus::CapMode::train_only);
    EXPECT_TRUE(kv.legacy_offset);
    EXPECT_EQ(kv.deepse.lstm_dim, 32);
    const auto js = ExperimentConfig::parse(kv.to_json());
    EXPECT_EQ(js.canonical_json(), kv.canonical_json());
    EXPECT_THROW(ExperimentConfig::parse("methods = mean, bogus\ntarget = x.csv\n").validate(), InvalidArgument);
    EXPECT_THROW(ExperimentConfig::parse("no equals sign"), InvalidArgument);
}

TEST(Tables, StatCellConvention) {
    stats::StatTestResult r;
    r.p_value = 0.139;
    r.a12 = 0.52;
    r.significant_raw = false;
    EXPECT_EQ(format_stat_cell(r, TableStyle::markdown), "0.139 (0.52) \\_");
    EXPECT_EQ(format_stat_cell(r, TableStyle::csv), "0.139 (0.52) _");
    r.p_value = 0.0004;
    r.a12 = 0.75;
    r.magnitude = stats::Magnitude::medium;
    r.significant_raw = true;
    EXPECT_EQ(format_stat_cell(r, TableStyle::markdown), "< 0.001 (0.75) m");
    r.a12 = 0.40;  // significant but pointing the other way
    EXPECT_EQ(format_stat_cell(r, TableStyle::csv), "< 0.001 (0.40) _");
    EXPECT_EQ(format_metric(1.005), "1.00");
    EXPECT_EQ(format_metric(3.14159), "3.14");
}

TEST(Tables, FixtureRendersExactly) {
    const std::vector<RunRecord> records{spbench::testing::table_fixture_record()};
    std::string md, csv;
    for (const auto& [stem, body] : render_tables(records, TableStyle::markdown))
        if (stem == "stats_summary") md = body;
    for (const auto& [stem, body] : render_tables(records, TableStyle::csv))
        if (stem == "stats_summary") csv = body;
    EXPECT_EQ(md, spbench::testing::kTableFixtureMarkdown);
    EXPECT_EQ(csv, spbench::testing::kTableFixtureCsv);
}

TEST(Tables, EmitWritesMetricsAndStatsPerProjectPlusSummary) {
    const auto dir = scratch_dir("bench-tables");
    auto issues = ten_issues();
    const auto other = make_project("TWO", {3, 1, 4, 1, 5, 9, 2, 6, 5, 3}, 0);
    issues.insert(issues.end(), other.begin(), other.end());
    const auto rec = run_experiment(base_config(dir, write_dataset(dir, issues)));
    const std::vector<RunRecord> records{rec};
    const auto md = emit_tables(records, TableStyle::markdown, dir / "md");
    const auto cs = emit_tables(records, TableStyle::csv, dir / "csv");
    EXPECT_EQ(md.size(), 2u * 2u + 1u);
    EXPECT_EQ(cs.size(), md.size());
    for (const auto& p : md) EXPECT_TRUE(fs::exists(p));
    // the two styles carry the same numbers
    const auto md_metrics = slurp(dir / "md" / "metrics_TEN.md");
    const auto csv_metrics = slurp(dir / "csv" / "metrics_TEN.csv");
    EXPECT_NE(md_metrics.find("| mean | 1.33 | 1.33 |"), std::string::npos) << md_metrics;
    EXPECT_NE(csv_metrics.find("mean,1.33,1.33,"), std::string::npos) << csv_metrics;
    EXPECT_NE(md_metrics.find("| median | 1.00 | 1.00 |"), std::string::npos);
}

#ifdef SPBENCH_CLI
namespace {
int run_cli(const std::string& args) {
    const int status = std::system((std::string(SPBENCH_CLI) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
}  // namespace

TEST(Cli, ExitCodes) {
    const auto dir = scratch_dir("cli");
    const auto data = write_dataset(dir, ten_issues());
    EXPECT_EQ(run_cli("--help"), 0);
    EXPECT_EQ(run_cli("no-such-command"), 1);
    EXPECT_EQ(run_cli("evaluate --cap-mode sideways --target " + data.string()), 1);
    EXPECT_EQ(run_cli("stats " + (dir / "a.csv").string() + " " + (dir / "b.csv").string()), 2);
    EXPECT_EQ(run_cli("evaluate --methods mean,median --target " + data.string() + " --out " + (dir / "runs").string()), 0);
    // the same run again refuses to overwrite its directory
    EXPECT_EQ(run_cli("evaluate --methods mean,median --target " + data.string() + " --out " + (dir / "runs").string()), 3);
}
#endif
