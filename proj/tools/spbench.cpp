// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

// spbench command line: ingest, filter, split, train, evaluate, stats, report, profile.
// Exit codes: 0 success, 1 usage, 2 data error, 3 runtime failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spbench/baselines.hpp"
#include "spbench/bench.hpp"
#include "spbench/corpus.hpp"
#include "spbench/deepse.hpp"
#include "spbench/error.hpp"
#include "spbench/jira.hpp"
#include "spbench/metrics.hpp"
#include "spbench/stats.hpp"
#include "spbench/tfidf_svm.hpp"

namespace fs = std::filesystem;
using namespace spbench;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kRuntime = 3 };

// Flags shared by the experiment-shaped subcommands. Unset values leave the
// config file (or defaults) untouched.
struct CommonFlags {
    std::string config;
    std::string scenario;
    std::string cap_mode;
    bool legacy_offset = false;
    std::vector<std::uint64_t> seeds;
    std::string methods;

    void add(CLI::App* cmd, bool with_methods = true) {
        cmd->add_option("--config", config, "Experiment config file (JSON or key = value)");
        cmd->add_option("--scenario", scenario,
                        "within_project | cross_project_within_repo | cross_project_cross_repo | "
                        "chronological_cross | augmented");
        cmd->add_option("--cap-mode", cap_mode, "none | train-only | global");
        cmd->add_flag("--legacy-offset", legacy_offset, "Add 1 to Mean/Median estimates");
        cmd->add_option("--seed", seeds, "Seed(s); repeat or comma-separate")->delimiter(',');
        if (with_methods) cmd->add_option("--methods", methods, "Comma-separated methods");
    }

    bench::ExperimentConfig apply() const {
        bench::ExperimentConfig cfg = config.empty() ? bench::ExperimentConfig{} : bench::ExperimentConfig::load(config);
        if (!scenario.empty()) {
            const auto s = corpus::parse_scenario(scenario);
            if (!s) throw InvalidArgument("unknown scenario: " + scenario);
            cfg.scenario = *s;
        }
        if (!cap_mode.empty()) {
            const auto m = corpus::parse_cap_mode(cap_mode);
            if (!m) throw InvalidArgument("unknown cap mode: " + cap_mode);
            cfg.cap_mode = *m;
        }
        if (legacy_offset) cfg.legacy_offset = true;
        if (!seeds.empty()) cfg.seeds = seeds;
        if (!methods.empty()) {
            cfg.methods.clear();
            std::stringstream ss(methods);
            for (std::string m; std::getline(ss, m, ',');)
                if (!m.empty()) cfg.methods.push_back(m);
        }
        return cfg;
    }
};

IssueDataset load_clean(const std::string& path) {
    auto result = corpus::ingest_csv(bench::resolve_data_path(path));
    for (const auto& e : result.errors) std::cerr << path << ": row " << e.row << ": " << e.message << '\n';
    if (!result.errors.empty()) throw DataError(path + ": " + std::to_string(result.errors.size()) + " malformed row(s)");
    return std::move(result.dataset);
}

IssueDataset select_project(const IssueDataset& pool, const std::string& project) {
    auto projects = corpus::by_project(pool);
    if (project.empty()) {
        if (projects.size() != 1) throw InvalidArgument("the dataset holds several projects; pass --project");
        return projects.begin()->second;
    }
    const auto it = projects.find(project);
    if (it == projects.end()) throw DataError("project " + project + " not found");
    return it->second;
}

int cmd_ingest(const std::string& input, const std::string& out, const std::string& jira_url,
               const std::string& project, const std::string& token, const std::string& sp_field) {
    IssueDataset ds;
    std::size_t malformed = 0;
    if (!jira_url.empty()) {
        if (project.empty()) throw InvalidArgument("--jira needs --project");
        jira::FetchOptions opts;
        opts.bearer_token = token;
        if (!sp_field.empty()) opts.story_point_field = sp_field;
        ds = jira::fetch_jira(jira_url, project, opts);
    } else {
        if (input.empty()) throw InvalidArgument("ingest needs an input CSV or --jira");
        auto result = corpus::ingest_csv(bench::resolve_data_path(input));
        for (const auto& e : result.errors) std::cerr << input << ": row " << e.row << ": " << e.message << '\n';
        malformed = result.errors.size();
        ds = std::move(result.dataset);
    }
    const auto projects = corpus::by_project(ds);
    std::cout << ds.size() << " issues, " << projects.size() << " project(s), " << malformed << " malformed row(s)\n";
    for (const auto& [k, p] : projects) std::cout << "  " << k << ": " << p.size() << '\n';
    if (!out.empty()) corpus::write_csv(fs::path(out), ds.issues());
    return kOk;
}

int cmd_filter(const std::string& input, const std::string& which, const std::string& out) {
    const auto f = bench::parse_filter(which);
    if (!f || *f == bench::DatasetFilter::none) throw InvalidArgument("--filter must be choet or porru");
    const IssueDataset ds = load_clean(input);
    const IssueDataset kept = *f == bench::DatasetFilter::choet ? corpus::apply_choet_filter(ds) : corpus::apply_porru_filter(ds);
    std::cout << "kept " << kept.size() << " of " << ds.size() << " issues\n";
    if (!out.empty()) corpus::write_csv(fs::path(out), kept.issues());
    return kOk;
}

int cmd_split(const CommonFlags& flags, const std::string& input, const std::string& project,
              const std::string& source_csv, const std::string& source_project, const std::string& out) {
    const auto cfg = flags.apply();
    const IssueDataset pool = load_clean(input);
    const IssueDataset target = select_project(pool, project);
    const IssueDataset source_pool = source_csv.empty() ? pool : load_clean(source_csv);
    std::optional<IssueDataset> source;
    corpus::SplitPlan plan;
    switch (cfg.scenario) {
    case corpus::Scenario::within_project:
        plan = corpus::chronological_split(target);
        break;
    case corpus::Scenario::cross_project_within_repo:
    case corpus::Scenario::cross_project_cross_repo:
        if (source_project.empty()) throw InvalidArgument("cross-project splits need --source-project");
        source = select_project(source_pool, source_project);
        plan = corpus::cross_project_split(*source, target, cfg.scenario);
        break;
    case corpus::Scenario::chronological_cross:
        source = corpus::chronological_cross_filter(corpus::exclude_project(source_pool, target.project_key()), target);
        if (!corpus::meets_source_floor(*source))
            throw PreconditionError("only " + std::to_string(source->size()) +
                                    " source issues precede the target; at least 200 issues are required");
        plan = corpus::cross_project_split(*source, target, cfg.scenario);
        break;
    case corpus::Scenario::augmented:
        source = corpus::exclude_project(source_pool, target.project_key());
        plan = corpus::augment_training(corpus::chronological_split(target), target, *source, cfg.augment_rule);
        break;
    }
    const IssueDataset* src = source ? &*source : nullptr;
    auto data = corpus::materialize(plan, target, src);
    const auto cap = bench::cap_split(data, cfg.cap_mode, cfg.cap_percentile);
    std::cout << corpus::to_string(cfg.scenario) << ": train " << data.train.size() << ", validation "
              << data.validation.size() << ", test " << data.test.size() << '\n';
    if (cap.cap_value)
        std::cout << "cap " << *cap.cap_value << ": " << cap.capped_train << " train, " << cap.capped_validation
                  << " validation, " << cap.capped_test << " test issues capped\n";
    const auto violations = corpus::audit_chronology(plan, target, src, cfg.augment_rule);
    for (const auto& v : violations) std::cerr << "chronology violation: " << v.issue_key << ": " << v.reason << '\n';
    for (const auto& c : plan.caveats) std::cerr << "note: " << c << '\n';
    if (!out.empty()) {
        std::ofstream f(out);
        if (!f) throw Error("cannot open " + out);
        corpus::write_split_csv(f, plan, target, src);
    }
    return violations.empty() ? kOk : kData;
}

int cmd_train(const CommonFlags& flags, const std::string& input, const std::string& project,
              const std::string& method, const std::string& out, const std::string& trace_out) {
    const auto cfg = flags.apply();
    const IssueDataset target = select_project(load_clean(input), project);
    auto data = corpus::materialize(corpus::chronological_split(target), target);
    bench::cap_split(data, cfg.cap_mode, cfg.cap_percentile);
    const std::uint64_t seed = cfg.seeds.empty() ? 0 : cfg.seeds.front();
    if (method == "tfidf_svm") {
        tfidf_svm::SvmOptions opts;
        opts.C = cfg.svm_c;
        opts.seed = seed;
        const auto model = tfidf_svm::fit(data.train, cfg.tfidf_k, opts);
        for (const auto& w : model.pipeline.warnings()) std::cerr << "warning: " << w << '\n';
        for (const auto& w : model.classifier.warnings()) std::cerr << "warning: " << w << '\n';
        tfidf_svm::save_model(out, model);
        std::cout << "trained tfidf_svm on " << data.train.size() << " issues -> " << out << '\n';
    } else if (method == "deepse" || method == "deepse_nopretrain") {
        auto dc = cfg.deepse;
        dc.seed = seed;
        dc.pretrain = method == "deepse";
        const auto model = deepse::train(data, dc);
        deepse::save_checkpoint(model, out);
        if (!trace_out.empty()) deepse::write_trace_csv(model.trace, fs::path(trace_out));
        std::cout << "trained " << method << " on " << data.train.size() << " issues, " << model.trace.size()
                  << " epochs (best " << model.best_epoch << "), " << model.total_seconds() << " s -> " << out << '\n';
    } else {
        throw InvalidArgument("train supports tfidf_svm, deepse and deepse_nopretrain");
    }
    return kOk;
}

int cmd_evaluate(const CommonFlags& flags, const std::string& target, const std::string& source,
                 const std::string& source_project, const std::vector<std::string>& projects, const std::string& out,
                 int jobs) {
    auto cfg = flags.apply();
    if (!target.empty()) cfg.target_path = target;
    if (!source.empty()) cfg.source_path = source;
    if (!source_project.empty()) cfg.source_project = source_project;
    if (!projects.empty()) cfg.projects = projects;
    if (!out.empty()) cfg.output_dir = out;
    if (jobs > 0) cfg.jobs = jobs;
    const auto rec = bench::run_experiment(cfg);
    std::cout << "run directory: " << rec.run_dir.string() << '\n';
    for (const auto& r : rec.runs) {
        std::printf("%-12s %-18s seed %-4llu MAE %.4f  MdAE %.4f  SA %.2f\n", r.project.c_str(), r.method.c_str(),
                    static_cast<unsigned long long>(r.seed), r.report.mae, r.report.mdae, r.report.sa);
    }
    bool runtime = false;
    for (const auto& f : rec.failures) {
        std::cerr << "failed: " << f.project << (f.method.empty() ? "" : " / " + f.method) << ": " << f.message << '\n';
        runtime = runtime || f.kind == "runtime";
    }
    if (rec.failures.empty()) return kOk;
    return runtime ? kRuntime : kData;
}

int cmd_stats(const std::vector<std::string>& files, double alpha, const std::string& style_name) {
    if (files.size() < 2) throw InvalidArgument("stats needs at least two prediction files");
    const auto style = bench::parse_style(style_name);
    if (!style) throw InvalidArgument("--style must be csv or markdown");
    stats::MethodErrors errors;
    for (const auto& f : files) {
        const auto p = PredictionSet::read_csv(fs::path(f));
        const Eigen::VectorXd e = p.absolute_errors();
        errors.emplace_back(fs::path(f).stem().string(), std::vector<double>(e.data(), e.data() + e.size()));
    }
    const int pairs = static_cast<int>(errors.size() * (errors.size() - 1) / 2);
    const auto results = stats::compare_methods(errors, {alpha, pairs, stats::WilcoxonMethod::automatic});
    for (const auto& r : results) {
        std::cout << r.method_a << " vs " << r.method_b << ": " << bench::format_stat_cell(r, *style)
                  << "  (bonferroni alpha " << r.alpha_used << (r.significant ? ", significant" : "") << ")\n";
    }
    return kOk;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& style_name, const std::string& out) {
    const auto style = bench::parse_style(style_name);
    if (!style) throw InvalidArgument("--style must be csv or markdown");
    std::vector<bench::RunRecord> records;
    for (const auto& d : run_dirs) records.push_back(bench::RunRecord::load(d));
    if (out.empty()) {
        for (const auto& [stem, content] : bench::render_tables(records, *style))
            std::cout << "## " << stem << "\n\n" << content << '\n';
    } else {
        for (const auto& p : bench::emit_tables(records, *style, out)) std::cout << p.string() << '\n';
    }
    return kOk;
}

int cmd_profile(const std::string& input) {
    const auto p = corpus::profile(load_clean(input));
    const double total = static_cast<double>(p.total());
    std::cout << "issue types (" << p.total() << " issues)\n";
    for (const auto& [type, n] : p.issue_type_counts) {
        const auto code = p.code_snippet_counts.count(type) ? p.code_snippet_counts.at(type) : 0;
        const auto& lengths = p.description_token_length.at(type);
        double mean = 0;
        for (auto l : lengths) mean += static_cast<double>(l);
        if (!lengths.empty()) mean /= static_cast<double>(lengths.size());
        std::printf("  %-16s %6zu  %5.1f%%  code %5zu  mean description tokens %.1f\n", type.c_str(), n,
                    total > 0 ? 100.0 * static_cast<double>(n) / total : 0.0, code, mean);
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Story-point estimation benchmark harness"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "spbench 0.1.0");

    std::string input, out, project, jira_url, token, sp_field, which, source, source_project, method, trace_out,
        style = "markdown";
    std::vector<std::string> files, projects;
    int jobs = 0;
    double alpha = 0.05;
    CommonFlags flags;

    auto* ingest = app.add_subcommand("ingest", "Read an issue CSV (or a Jira server) and summarise it");
    ingest->add_option("input", input, "Issue CSV");
    ingest->add_option("--out", out, "Write the accepted issues as CSV");
    ingest->add_option("--jira", jira_url, "Jira base URL (http only)");
    ingest->add_option("--project", project, "Jira project key");
    ingest->add_option("--token", token, "Bearer token");
    ingest->add_option("--sp-field", sp_field, "Story-point custom field");

    auto* filter = app.add_subcommand("filter", "Apply the Choet or Porru dataset filter");
    filter->add_option("input", input, "Issue CSV")->required();
    filter->add_option("--filter", which, "choet | porru")->required();
    filter->add_option("--out", out, "Output CSV");

    auto* split = app.add_subcommand("split", "Compute a split plan for one project");
    split->add_option("input", input, "Issue CSV")->required();
    split->add_option("--project", project, "Target project");
    split->add_option("--source", source, "Source/pool CSV (defaults to input)");
    split->add_option("--source-project", source_project, "Source project for cross-project scenarios");
    split->add_option("--out", out, "Write the split as CSV");
    flags.add(split, false);

    auto* train = app.add_subcommand("train", "Train one model on a project's chronological split");
    train->add_option("input", input, "Issue CSV")->required();
    train->add_option("--project", project, "Target project");
    train->add_option("--method", method, "tfidf_svm | deepse | deepse_nopretrain")->required();
    train->add_option("--out", out, "Model artifact path")->required();
    train->add_option("--trace", trace_out, "Deep-SE trace CSV");
    flags.add(train, false);

    auto* evaluate = app.add_subcommand("evaluate", "Run an experiment and persist predictions, metrics and stats");
    evaluate->add_option("--target", input, "Target issue CSV");
    evaluate->add_option("--source", source, "Source/pool issue CSV");
    evaluate->add_option("--source-project", source_project, "Source project for cross-project scenarios");
    evaluate->add_option("--project", projects, "Target project(s)")->delimiter(',');
    evaluate->add_option("--out", out, "Output root for run directories");
    evaluate->add_option("--jobs", jobs, "Worker threads");
    flags.add(evaluate);

    auto* stats_cmd = app.add_subcommand("stats", "Wilcoxon and A12 over prediction files");
    stats_cmd->add_option("predictions", files, "Prediction CSVs (first is method A)")->required();
    stats_cmd->add_option("--alpha", alpha, "Significance level");
    stats_cmd->add_option("--style", style, "csv | markdown");

    auto* report = app.add_subcommand("report", "Emit metric and statistics tables from run directories");
    report->add_option("runs", files, "Run directories")->required();
    report->add_option("--style", style, "csv | markdown");
    report->add_option("--out", out, "Output directory (default: stdout)");

    auto* profile = app.add_subcommand("profile", "Issue-type, code-snippet and description-length profile");
    profile->add_option("input", input, "Issue CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*ingest) return cmd_ingest(input, out, jira_url, project, token, sp_field);
        if (*filter) return cmd_filter(input, which, out);
        if (*split) return cmd_split(flags, input, project, source, source_project, out);
        if (*train) return cmd_train(flags, input, project, method, out, trace_out);
        if (*evaluate) return cmd_evaluate(flags, input, source, source_project, projects, out, jobs);
        if (*stats_cmd) return cmd_stats(files, alpha, style);
        if (*report) return cmd_report(files, style, out);
        if (*profile) return cmd_profile(input);
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kUsage;
}
