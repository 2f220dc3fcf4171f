// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#include "spbench/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "spbench/baselines.hpp"
#include "spbench/csv.hpp"
#include "spbench/error.hpp"
#include "spbench/tfidf_svm.hpp"

namespace spbench::bench {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

std::string_view to_string(corpus::AugmentRule r) {
    return r == corpus::AugmentRule::created_before_validation ? "created_before_validation" : "resolved_before_test";
}

corpus::AugmentRule parse_augment_rule(const std::string& s) {
    if (s == "created_before_validation") return corpus::AugmentRule::created_before_validation;
    if (s == "resolved_before_test") return corpus::AugmentRule::resolved_before_test;
    throw InvalidArgument("unknown augment_rule: " + s);
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, std::string_view content) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot open " + p.string() + " for writing");
    out << content;
    if (!out) throw Error("failed to write " + p.string());
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string safe_name(std::string_view s) {
    std::string out;
    for (const char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '+' ? c : '_');
    return out.empty() ? "_" : out;
}

std::string cell_stem(const std::string& method, std::uint64_t seed, bool seeded) {
    return seeded ? method + "_seed" + std::to_string(seed) : method;
}

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

json stat_to_json(const stats::StatTestResult& r) {
    return {{"method_a", r.method_a},
            {"method_b", r.method_b},
            {"p_value", r.p_value},
            {"a12", r.a12},
            {"magnitude", std::string(stats::to_string(r.magnitude))},
            {"rank_sum_first", r.rank_sum_first},
            {"m", r.m},
            {"n", r.n_obs},
            {"alpha", r.alpha},
            {"alpha_used", r.alpha_used},
            {"significant_raw", r.significant_raw},
            {"significant", r.significant},
            {"test", std::string(stats::to_string(r.test))}};
}

stats::StatTestResult stat_from_json(const json& j) {
    stats::StatTestResult r;
    r.method_a = j.at("method_a").get<std::string>();
    r.method_b = j.at("method_b").get<std::string>();
    r.p_value = j.at("p_value").get<double>();
    r.a12 = j.at("a12").get<double>();
    const auto mag = j.at("magnitude").get<std::string>();
    for (auto m : {stats::Magnitude::negligible, stats::Magnitude::small, stats::Magnitude::medium, stats::Magnitude::large})
        if (stats::to_string(m) == mag) r.magnitude = m;
    r.rank_sum_first = j.at("rank_sum_first").get<double>();
    r.m = j.at("m").get<std::size_t>();
    r.n_obs = j.at("n").get<std::size_t>();
    r.alpha = j.at("alpha").get<double>();
    r.alpha_used = j.at("alpha_used").get<double>();
    r.significant_raw = j.at("significant_raw").get<bool>();
    r.significant = j.at("significant").get<bool>();
    const auto test = j.at("test").get<std::string>();
    for (auto m : {stats::WilcoxonMethod::automatic, stats::WilcoxonMethod::exact, stats::WilcoxonMethod::normal})
        if (stats::to_string(m) == test) r.test = m;
    return r;
}

json config_json(const ExperimentConfig& c, bool with_output) {
    json j = {{"scenario", std::string(corpus::to_string(c.scenario))},
              {"target", c.target_path.generic_string()},
              {"projects", c.projects},
              {"source", c.source_path.generic_string()},
              {"source_project", c.source_project},
              {"methods", c.methods},
              {"cap_mode", std::string(corpus::to_string(c.cap_mode))},
              {"cap_percentile", c.cap_percentile},
              {"legacy_offset", c.legacy_offset},
              {"seeds", c.seeds},
              {"filter", std::string(to_string(c.filter))},
              {"augment_rule", std::string(to_string(c.augment_rule))},
              {"tfidf_k", c.tfidf_k},
              {"svm_c", c.svm_c},
              {"deepse", json::parse(deepse::to_json(c.deepse))},
              {"alpha", c.alpha},
              {"sa_runs", c.sa_runs},
              {"save_models", c.save_models}};
    if (with_output) {
        j["jobs"] = c.jobs;
        j["output_dir"] = c.output_dir.generic_string();
    }
    return j;
}

ExperimentConfig config_from(const json& j) {
    if (!j.is_object()) throw InvalidArgument("experiment config must be an object");
    static const std::set<std::string> known = {
        "scenario", "target", "projects", "source", "source_project", "methods", "cap_mode", "cap_percentile",
        "legacy_offset", "seeds", "filter", "augment_rule", "tfidf_k", "svm_c", "deepse", "alpha", "sa_runs",
        "save_models", "jobs", "output_dir"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw InvalidArgument("unknown experiment config key: " + key);

    ExperimentConfig c;
    try {
        if (j.contains("scenario")) {
            const auto s = j["scenario"].get<std::string>();
            const auto v = corpus::parse_scenario(s);
            if (!v) throw InvalidArgument("unknown scenario: " + s);
            c.scenario = *v;
        }
        if (j.contains("target")) c.target_path = j["target"].get<std::string>();
        if (j.contains("projects")) c.projects = j["projects"].get<std::vector<std::string>>();
        if (j.contains("source")) c.source_path = j["source"].get<std::string>();
        if (j.contains("source_project")) c.source_project = j["source_project"].get<std::string>();
        if (j.contains("methods")) c.methods = j["methods"].get<std::vector<std::string>>();
        if (j.contains("cap_mode")) {
            const auto s = j["cap_mode"].get<std::string>();
            const auto v = corpus::parse_cap_mode(s);
            if (!v) throw InvalidArgument("unknown cap_mode: " + s);
            c.cap_mode = *v;
        }
        if (j.contains("cap_percentile")) c.cap_percentile = j["cap_percentile"].get<double>();
        if (j.contains("legacy_offset")) c.legacy_offset = j["legacy_offset"].get<bool>();
        if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
        if (j.contains("filter")) {
            const auto s = j["filter"].get<std::string>();
            const auto v = parse_filter(s);
            if (!v) throw InvalidArgument("unknown filter: " + s);
            c.filter = *v;
        }
        if (j.contains("augment_rule")) c.augment_rule = parse_augment_rule(j["augment_rule"].get<std::string>());
        if (j.contains("tfidf_k")) c.tfidf_k = j["tfidf_k"].get<std::size_t>();
        if (j.contains("svm_c")) c.svm_c = j["svm_c"].get<double>();
        if (j.contains("deepse")) {
            try {
                c.deepse = deepse::config_from_json(j["deepse"].dump());
            } catch (const DataError& e) {
                throw InvalidArgument(e.what());
            }
        }
        if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
        if (j.contains("sa_runs")) c.sa_runs = j["sa_runs"].get<int>();
        if (j.contains("save_models")) c.save_models = j["save_models"].get<bool>();
        if (j.contains("jobs")) c.jobs = j["jobs"].get<int>();
        if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("invalid experiment config: ") + e.what());
    }
    return c;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t at = 0;
    while (at <= s.size()) {
        const auto comma = s.find(',', at);
        const auto piece = trim(s.substr(at, comma == std::string_view::npos ? std::string_view::npos : comma - at));
        if (!piece.empty()) out.push_back(piece);
        if (comma == std::string_view::npos) break;
        at = comma + 1;
    }
    return out;
}

json scalar_value(const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    try {
        const json parsed = json::parse(v);
        if (parsed.is_number()) return parsed;
    } catch (const json::exception&) {
    }
    return v;
}

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const InvalidArgument*>(&e)) return "data";
    return "runtime";
}

IssueDataset load_pool(const fs::path& path, DatasetFilter filter) {
    auto result = corpus::ingest_csv(resolve_data_path(path));
    if (!result.errors.empty()) {
        const auto& e = result.errors.front();
        throw DataError(path.string() + ": " + std::to_string(result.errors.size()) + " malformed row(s); row " +
                        std::to_string(e.row) + ": " + e.message);
    }
    switch (filter) {
    case DatasetFilter::choet:
        return corpus::apply_choet_filter(result.dataset);
    case DatasetFilter::porru:
        return corpus::apply_porru_filter(result.dataset);
    case DatasetFilter::none:
        break;
    }
    return std::move(result.dataset);
}

struct CellOutput {
    MethodRun run;
    PredictionSet predictions;
    std::optional<Failure> failure;
};

struct ProjectWork {
    ProjectSummary summary;
    corpus::SplitData split;
    std::vector<double> train_sps;
};

CellOutput run_cell(const ExperimentConfig& cfg, const ProjectWork& work, const std::string& method, std::uint64_t seed,
                    const fs::path& run_dir) {
    CellOutput out;
    auto& run = out.run;
    run.project = work.summary.project;
    run.method = method;
    run.seed = seed;
    const bool seeded = is_stochastic(method);
    const std::string stem = cell_stem(method, seed, seeded);
    const std::string project_dir = safe_name(run.project);
    try {
        const auto& split = work.split;
        const auto t0 = Clock::now();
        const baselines::BaselineConfig bc{cfg.legacy_offset, seed};
        if (method == "random") {
            out.predictions = baselines::random_guess(work.train_sps, split.test, seed);
        } else if (method == "mean") {
            out.predictions = baselines::mean_estimator(work.train_sps, split.test, bc);
        } else if (method == "median") {
            out.predictions = baselines::median_estimator(work.train_sps, split.test, bc);
        } else if (method == "tfidf_svm") {
            tfidf_svm::SvmOptions opts;
            opts.C = cfg.svm_c;
            opts.seed = seed;
            const auto model = tfidf_svm::fit(split.train, cfg.tfidf_k, opts);
            out.predictions = tfidf_svm::predict_svm(model.classifier, model.pipeline, split.test);
            if (cfg.save_models) {
                run.model_path = "models/" + project_dir + "/" + stem + ".json";
                fs::create_directories(run_dir / "models" / project_dir);
                tfidf_svm::save_model(run_dir / run.model_path, model);
            }
        } else if (method == "deepse" || method == "deepse_nopretrain") {
            deepse::DeepSEConfig dc = cfg.deepse;
            dc.seed = seed;
            dc.pretrain = method == "deepse";
            const auto model = deepse::train(split, dc);
            out.predictions = deepse::predict_deepse(model, split.test);
            run.epochs = static_cast<int>(model.trace.size());
            run.best_epoch = model.best_epoch;
            run.pretrain_seconds = model.pretrain_seconds;
            run.trace_path = "traces/" + project_dir + "/" + stem + ".csv";
            fs::create_directories(run_dir / "traces" / project_dir);
            deepse::write_trace_csv(model.trace, run_dir / run.trace_path);
            if (cfg.save_models) {
                run.model_path = "models/" + project_dir + "/" + stem + ".bin";
                fs::create_directories(run_dir / "models" / project_dir);
                deepse::save_checkpoint(model, run_dir / run.model_path);
            }
        } else {
            throw InvalidArgument("unknown method: " + method);
        }
        run.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        run.report = sa(out.predictions, work.train_sps, cfg.sa_runs, seed);
        run.predictions_path = "predictions/" + project_dir + "/" + stem + ".csv";
        fs::create_directories(run_dir / "predictions" / project_dir);
        out.predictions.write_csv(run_dir / run.predictions_path);
    } catch (const std::exception& e) {
        out.failure = Failure{run.project, method, error_kind(e), e.what()};
    }
    return out;
}

void run_parallel(std::vector<std::function<void()>>& tasks, int jobs) {
    const auto workers = static_cast<std::size_t>(std::clamp(jobs, 1, 64));
    if (workers == 1 || tasks.size() < 2) {
        for (auto& t : tasks) t();
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, tasks.size()); ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < tasks.size(); i = next++) tasks[i]();
        });
    }
}

}  // namespace

bool is_known_method(std::string_view name) noexcept {
    return std::find(std::begin(kMethods), std::end(kMethods), name) != std::end(kMethods);
}

bool is_stochastic(std::string_view method) noexcept {
    return method == "random" || method == "tfidf_svm" || method == "deepse" || method == "deepse_nopretrain";
}

std::optional<DatasetFilter> parse_filter(std::string_view text) {
    if (text == "none") return DatasetFilter::none;
    if (text == "choet") return DatasetFilter::choet;
    if (text == "porru") return DatasetFilter::porru;
    return std::nullopt;
}

std::string_view to_string(DatasetFilter f) {
    switch (f) {
    case DatasetFilter::choet:
        return "choet";
    case DatasetFilter::porru:
        return "porru";
    case DatasetFilter::none:
        break;
    }
    return "none";
}

void ExperimentConfig::validate() const {
    if (target_path.empty()) throw InvalidArgument("experiment config needs a target dataset");
    if (methods.empty()) throw InvalidArgument("experiment config needs at least one method");
    std::set<std::string> seen;
    for (const auto& m : methods) {
        if (!is_known_method(m)) throw InvalidArgument("unknown method: " + m);
        if (!seen.insert(m).second) throw InvalidArgument("method listed twice: " + m);
    }
    const bool stochastic = std::any_of(methods.begin(), methods.end(), [](const auto& m) { return is_stochastic(m); });
    if (seeds.empty() && stochastic) throw InvalidArgument("stochastic methods need at least one seed");
    if (seeds.empty()) throw InvalidArgument("experiment config needs at least one seed");
    const bool cross = scenario == corpus::Scenario::cross_project_within_repo ||
                       scenario == corpus::Scenario::cross_project_cross_repo;
    if (cross && source_project.empty()) throw InvalidArgument("cross-project scenarios need source_project");
    if (!(cap_percentile > 0.0 && cap_percentile <= 100.0)) throw InvalidArgument("cap_percentile must be in (0, 100]");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must be in (0, 1)");
    if (sa_runs < 1) throw InvalidArgument("sa_runs must be positive");
    if (tfidf_k < 1) throw InvalidArgument("tfidf_k must be positive");
    if (!(svm_c > 0.0)) throw InvalidArgument("svm_c must be positive");
}

std::string ExperimentConfig::canonical_json() const { return config_json(*this, false).dump(); }

std::string ExperimentConfig::to_json() const { return config_json(*this, true).dump(2); }

ExperimentConfig ExperimentConfig::from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("experiment config is not valid JSON: ") + e.what());
    }
    return config_from(j);
}

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && text[first] == '{') return from_json(text);

    static const std::set<std::string> lists = {"projects", "methods", "seeds"};
    json j = json::object();
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(std::string_view(stripped).substr(0, eq));
        const std::string value = trim(std::string_view(stripped).substr(eq + 1));
        if (key.rfind("deepse.", 0) == 0) {
            j["deepse"][key.substr(7)] = scalar_value(value);
        } else if (lists.count(key)) {
            json arr = json::array();
            for (const auto& item : split_list(value)) arr.push_back(key == "seeds" ? scalar_value(item) : json(item));
            j[key] = arr;
        } else if (key == "target" || key == "source" || key == "source_project" || key == "output_dir") {
            j[key] = value;
        } else {
            j[key] = scalar_value(value);
        }
    }
    return config_from(j);
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::optional<fs::path> data_root() {
    const char* v = std::getenv("SPBENCH_DATA_DIR");
    if (!v || !*v) return std::nullopt;
    return fs::path(v);
}

fs::path resolve_data_path(const fs::path& p) {
    if (p.is_absolute() || fs::exists(p)) return p;
    if (const auto root = data_root()) return *root / p;
    return p;
}

std::string config_digest(const ExperimentConfig& cfg) {
    std::uint64_t h = fnv1a(cfg.canonical_json());
    h = fnv1a(read_file(resolve_data_path(cfg.target_path)), h);
    if (!cfg.source_path.empty() && cfg.source_path != cfg.target_path)
        h = fnv1a(read_file(resolve_data_path(cfg.source_path)), h);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

SplitCap cap_split(corpus::SplitData& split, corpus::CapMode mode, double percentile) {
    SplitCap out;
    if (mode == corpus::CapMode::none) return out;
    std::vector<double> basis = story_points(split.train);
    if (mode == corpus::CapMode::global) {
        for (const auto* set : {&split.validation, &split.test})
            for (const auto& i : *set) basis.push_back(i.story_point);
    }
    if (basis.empty()) return out;
    const double cap = corpus::nearest_rank_percentile(basis, percentile);
    out.cap_value = cap;
    const auto apply = [cap](std::vector<Issue>& set) {
        std::size_t n = 0;
        for (auto& i : set)
            if (i.story_point > cap) {
                i.story_point = cap;
                ++n;
            }
        return n;
    };
    out.capped_train = apply(split.train);
    out.capped_validation = apply(split.validation);
    if (mode == corpus::CapMode::global) out.capped_test = apply(split.test);
    return out;
}

std::vector<std::string> RunRecord::artifacts() const {
    std::vector<std::string> out = {"config.json", "metrics.csv", "timing.csv", "stats.csv", "failures.csv", "record.json"};
    for (const auto& p : projects)
        if (!p.split_path.empty()) out.push_back(p.split_path);
    for (const auto& r : runs) {
        for (const auto* path : {&r.predictions_path, &r.trace_path, &r.model_path})
            if (!path->empty()) out.push_back(*path);
    }
    return out;
}

std::string RunRecord::to_json() const {
    json j;
    j["config"] = config_json(config, true);
    j["digest"] = digest;
    j["run_dir"] = run_dir.generic_string();
    json projects_j = json::array();
    for (const auto& p : projects) {
        projects_j.push_back({{"project", p.project},
                              {"train", p.train},
                              {"validation", p.validation},
                              {"test", p.test},
                              {"cap_value", p.cap_value ? json(*p.cap_value) : json(nullptr)},
                              {"capped", p.capped},
                              {"chronology_violations", p.chronology_violations},
                              {"split", p.split_path}});
    }
    j["projects"] = projects_j;
    json runs_j = json::array();
    for (const auto& r : runs) {
        runs_j.push_back({{"project", r.project},
                          {"method", r.method},
                          {"seed", r.seed},
                          {"predictions", r.predictions_path},
                          {"mae", r.report.mae},
                          {"mdae", r.report.mdae},
                          {"sa", r.report.sa},
                          {"mae_random_mean", r.report.mae_random_mean},
                          {"sa_runs", r.report.runs},
                          {"seconds", r.seconds},
                          {"epochs", r.epochs},
                          {"best_epoch", r.best_epoch},
                          {"pretrain_seconds", r.pretrain_seconds},
                          {"trace", r.trace_path},
                          {"model", r.model_path}});
    }
    j["runs"] = runs_j;
    json stats_j = json::array();
    for (const auto& s : stats) {
        json e = stat_to_json(s.result);
        e["project"] = s.project;
        stats_j.push_back(e);
    }
    j["stats"] = stats_j;
    json failures_j = json::array();
    for (const auto& f : failures)
        failures_j.push_back({{"project", f.project}, {"method", f.method}, {"kind", f.kind}, {"message", f.message}});
    j["failures"] = failures_j;
    return j.dump(2);
}

RunRecord RunRecord::from_json(std::string_view text) {
    RunRecord rec;
    try {
        const json j = json::parse(text);
        rec.config = config_from(j.at("config"));
        rec.digest = j.at("digest").get<std::string>();
        rec.run_dir = j.at("run_dir").get<std::string>();
        for (const auto& p : j.at("projects")) {
            ProjectSummary s;
            s.project = p.at("project").get<std::string>();
            s.train = p.at("train").get<std::size_t>();
            s.validation = p.at("validation").get<std::size_t>();
            s.test = p.at("test").get<std::size_t>();
            if (!p.at("cap_value").is_null()) s.cap_value = p.at("cap_value").get<double>();
            s.capped = p.at("capped").get<std::size_t>();
            s.chronology_violations = p.at("chronology_violations").get<std::size_t>();
            s.split_path = p.at("split").get<std::string>();
            rec.projects.push_back(std::move(s));
        }
        for (const auto& r : j.at("runs")) {
            MethodRun m;
            m.project = r.at("project").get<std::string>();
            m.method = r.at("method").get<std::string>();
            m.seed = r.at("seed").get<std::uint64_t>();
            m.predictions_path = r.at("predictions").get<std::string>();
            m.report.mae = r.at("mae").get<double>();
            m.report.mdae = r.at("mdae").get<double>();
            m.report.sa = r.at("sa").get<double>();
            m.report.mae_random_mean = r.at("mae_random_mean").get<double>();
            m.report.runs = r.at("sa_runs").get<int>();
            m.seconds = r.at("seconds").get<double>();
            m.epochs = r.at("epochs").get<int>();
            m.best_epoch = r.at("best_epoch").get<int>();
            m.pretrain_seconds = r.at("pretrain_seconds").get<double>();
            m.trace_path = r.at("trace").get<std::string>();
            m.model_path = r.at("model").get<std::string>();
            rec.runs.push_back(std::move(m));
        }
        for (const auto& s : j.at("stats")) rec.stats.push_back({s.at("project").get<std::string>(), stat_from_json(s)});
        for (const auto& f : j.at("failures"))
            rec.failures.push_back({f.at("project").get<std::string>(), f.at("method").get<std::string>(),
                                    f.at("kind").get<std::string>(), f.at("message").get<std::string>()});
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid run record: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw DataError(std::string("invalid run record: ") + e.what());
    }
    return rec;
}

RunRecord RunRecord::load(const fs::path& run_dir) {
    RunRecord rec = from_json(read_file(run_dir / "record.json"));
    rec.run_dir = run_dir;
    return rec;
}

RunRecord run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    RunRecord rec;
    rec.config = cfg;
    rec.digest = config_digest(cfg);
    rec.run_dir = cfg.output_dir / ("run-" + rec.digest);
    if (fs::exists(rec.run_dir))
        throw Error("run directory " + rec.run_dir.string() + " already exists; refusing to overwrite");

    const IssueDataset target_pool = load_pool(cfg.target_path, cfg.filter);
    const bool separate_source = !cfg.source_path.empty() && cfg.source_path != cfg.target_path;
    const IssueDataset source_pool = separate_source ? load_pool(cfg.source_path, cfg.filter) : target_pool;

    auto targets = corpus::by_project(target_pool);
    const auto sources = corpus::by_project(source_pool);
    std::vector<std::string> names = cfg.projects;
    if (names.empty())
        for (const auto& [k, _] : targets) names.push_back(k);
    for (const auto& n : names)
        if (!targets.count(n)) throw DataError("project " + n + " not found in " + cfg.target_path.string());

    fs::create_directories(rec.run_dir);
    write_file(rec.run_dir / "config.json", cfg.to_json() + "\n");

    // Splits are computed serially; the (project, method, seed) cells run in parallel.
    std::vector<ProjectWork> work;
    for (const auto& name : names) {
        const IssueDataset& target = targets.at(name);
        try {
            corpus::SplitPlan plan;
            std::optional<IssueDataset> source;
            switch (cfg.scenario) {
            case corpus::Scenario::within_project:
                plan = corpus::chronological_split(target);
                break;
            case corpus::Scenario::cross_project_within_repo:
            case corpus::Scenario::cross_project_cross_repo: {
                const auto it = sources.find(cfg.source_project);
                if (it == sources.end()) throw DataError("source project " + cfg.source_project + " not found");
                if (cfg.source_project == name) throw InvalidArgument("source and target project are both " + name);
                source = it->second;
                plan = corpus::cross_project_split(*source, target, cfg.scenario);
                break;
            }
            case corpus::Scenario::chronological_cross: {
                source = corpus::chronological_cross_filter(corpus::exclude_project(source_pool, name), target);
                if (!corpus::meets_source_floor(*source))
                    throw PreconditionError("chronological_cross for " + name + ": only " +
                                            std::to_string(source->size()) +
                                            " source issues were created before the target's first issue; at least " +
                                            std::to_string(corpus::kMinSourceIssues) + " issues are required");
                plan = corpus::cross_project_split(*source, target, cfg.scenario);
                break;
            }
            case corpus::Scenario::augmented:
                source = corpus::exclude_project(source_pool, name);
                plan = corpus::augment_training(corpus::chronological_split(target), target, *source, cfg.augment_rule);
                break;
            }
            const IssueDataset* src = source ? &*source : nullptr;

            ProjectWork w;
            w.summary.project = name;
            w.summary.chronology_violations = corpus::audit_chronology(plan, target, src, cfg.augment_rule).size();
            w.summary.split_path = "splits/" + safe_name(name) + ".csv";
            {
                std::ostringstream split_csv;
                corpus::write_split_csv(split_csv, plan, target, src);
                write_file(rec.run_dir / w.summary.split_path, split_csv.str());
            }
            w.split = corpus::materialize(plan, target, src);
            const SplitCap cap = cap_split(w.split, cfg.cap_mode, cfg.cap_percentile);
            w.summary.cap_value = cap.cap_value;
            w.summary.capped = cap.total();
            w.summary.train = w.split.train.size();
            w.summary.validation = w.split.validation.size();
            w.summary.test = w.split.test.size();
            w.train_sps = story_points(w.split.train);
            work.push_back(std::move(w));
        } catch (const std::exception& e) {
            rec.failures.push_back({name, "", error_kind(e), e.what()});
        }
    }

    struct CellSlot {
        std::size_t project;
        std::string method;
        std::uint64_t seed;
        CellOutput output;
    };
    std::vector<CellSlot> slots;
    for (std::size_t p = 0; p < work.size(); ++p)
        for (const auto& m : cfg.methods) {
            if (is_stochastic(m))
                for (const auto s : cfg.seeds) slots.push_back({p, m, s, {}});
            else
                slots.push_back({p, m, cfg.seeds.front(), {}});
        }
    std::vector<std::function<void()>> tasks;
    for (auto& slot : slots)
        tasks.emplace_back([&cfg, &work, &rec, &slot] {
            slot.output = run_cell(cfg, work[slot.project], slot.method, slot.seed, rec.run_dir);
        });
    run_parallel(tasks, cfg.jobs);

    for (std::size_t p = 0; p < work.size(); ++p) {
        rec.projects.push_back(work[p].summary);
        stats::MethodErrors errors;
        for (auto& slot : slots) {
            if (slot.project != p) continue;
            if (slot.output.failure) {
                rec.failures.push_back(*slot.output.failure);
                continue;
            }
            rec.runs.push_back(slot.output.run);
            const bool first_seed = !is_stochastic(slot.method) || slot.seed == cfg.seeds.front();
            if (first_seed) {
                const Eigen::VectorXd e = slot.output.predictions.absolute_errors();
                errors.emplace_back(slot.method, std::vector<double>(e.data(), e.data() + e.size()));
            }
        }
        if (errors.size() < 2) continue;
        const std::size_t pairs = errors.size() * (errors.size() - 1) / 2;
        const stats::StatConfig sc{cfg.alpha, static_cast<int>(pairs), stats::WilcoxonMethod::automatic};
        try {
            for (auto& r : stats::compare_methods(errors, sc)) rec.stats.push_back({work[p].summary.project, std::move(r)});
        } catch (const std::exception& e) {
            rec.failures.push_back({work[p].summary.project, "stats", error_kind(e), e.what()});
        }
    }

    std::ostringstream metrics_csv, timing_csv, stats_csv, failures_csv;
    metrics_csv << "project,method,seed,mae,mdae,sa,mae_random_mean,sa_runs\n";
    timing_csv << "project,method,seed,seconds,pretrain_seconds,epochs,best_epoch\n";
    for (const auto& r : rec.runs) {
        csv::write_row(metrics_csv, {r.project, r.method, std::to_string(r.seed), csv::format_double(r.report.mae),
                                     csv::format_double(r.report.mdae), csv::format_double(r.report.sa),
                                     csv::format_double(r.report.mae_random_mean), std::to_string(r.report.runs)});
        csv::write_row(timing_csv, {r.project, r.method, std::to_string(r.seed), csv::format_double(r.seconds),
                                    csv::format_double(r.pretrain_seconds), std::to_string(r.epochs),
                                    std::to_string(r.best_epoch)});
    }
    stats_csv << "project,method_a,method_b,p_value,a12,magnitude,m,n,alpha,alpha_used,significant_raw,significant,test\n";
    for (const auto& s : rec.stats) {
        const auto& r = s.result;
        csv::write_row(stats_csv, {s.project, r.method_a, r.method_b, csv::format_double(r.p_value),
                                   csv::format_double(r.a12), std::string(stats::to_string(r.magnitude)),
                                   std::to_string(r.m), std::to_string(r.n_obs), csv::format_double(r.alpha),
                                   csv::format_double(r.alpha_used), r.significant_raw ? "true" : "false",
                                   r.significant ? "true" : "false", std::string(stats::to_string(r.test))});
    }
    failures_csv << "project,method,kind,message\n";
    for (const auto& f : rec.failures) csv::write_row(failures_csv, {f.project, f.method, f.kind, f.message});

    write_file(rec.run_dir / "metrics.csv", metrics_csv.str());
    write_file(rec.run_dir / "timing.csv", timing_csv.str());
    write_file(rec.run_dir / "stats.csv", stats_csv.str());
    write_file(rec.run_dir / "failures.csv", failures_csv.str());
    write_file(rec.run_dir / "record.json", rec.to_json() + "\n");
    return rec;
}

std::optional<TableStyle> parse_style(std::string_view text) {
    if (text == "csv") return TableStyle::csv;
    if (text == "markdown" || text == "md") return TableStyle::markdown;
    return std::nullopt;
}

std::string format_metric(double v) { return fixed(v, 2); }

std::string format_stat_cell(const stats::StatTestResult& r, TableStyle style) {
    std::string cell = r.p_value < 0.001 ? "< 0.001" : fixed(r.p_value, 3);
    cell += " (" + fixed(r.a12, 2) + ") ";
    if (r.significant_raw && r.a12 >= 0.5)
        cell.push_back(stats::letter(r.magnitude));
    else
        cell += style == TableStyle::markdown ? "\\_" : "_";
    return cell;
}

namespace {

std::string render(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows,
                   TableStyle style) {
    std::ostringstream out;
    if (style == TableStyle::csv) {
        csv::write_row(out, header);
        for (const auto& r : rows) csv::write_row(out, r);
        return out.str();
    }
    const auto line = [&](const std::vector<std::string>& cells) {
        out << '|';
        for (const auto& c : cells) out << ' ' << c << " |";
        out << '\n';
    };
    line(header);
    out << '|';
    for (std::size_t i = 0; i < header.size(); ++i) out << (i == 0 ? " --- |" : " ---: |");
    out << '\n';
    for (const auto& r : rows) line(r);
    return out.str();
}

}  // namespace

std::vector<std::pair<std::string, std::string>> render_tables(std::span<const RunRecord> records, TableStyle style) {
    std::vector<std::pair<std::string, std::string>> out;
    std::set<std::string> used;
    const auto unique = [&used](std::string stem) {
        std::string s = stem;
        for (int k = 2; !used.insert(s).second; ++k) s = stem + "_" + std::to_string(k);
        return s;
    };

    std::vector<std::string> summary_columns;
    std::vector<std::pair<std::string, std::map<std::string, std::string>>> summary_rows;

    for (const auto& rec : records) {
        std::vector<std::string> project_order;
        for (const auto& p : rec.projects) project_order.push_back(p.project);
        for (const auto& r : rec.runs)
            if (std::find(project_order.begin(), project_order.end(), r.project) == project_order.end())
                project_order.push_back(r.project);
        for (const auto& s : rec.stats)
            if (std::find(project_order.begin(), project_order.end(), s.project) == project_order.end())
                project_order.push_back(s.project);

        const auto& methods = rec.config.methods;
        for (const auto& project : project_order) {
            std::vector<std::vector<std::string>> rows;
            for (const auto& m : methods) {
                double mae = 0, mdae = 0, sa = 0;
                int n = 0;
                for (const auto& r : rec.runs)
                    if (r.project == project && r.method == m) {
                        mae += r.report.mae;
                        mdae += r.report.mdae;
                        sa += r.report.sa;
                        ++n;
                    }
                if (n == 0) continue;
                rows.push_back({m, format_metric(mae / n), format_metric(mdae / n), format_metric(sa / n)});
            }
            out.emplace_back(unique("metrics_" + safe_name(project)), render({"Method", "MAE", "MdAE", "SA"}, rows, style));

            std::vector<std::string> header = {"Method"};
            for (std::size_t b = 1; b < methods.size(); ++b) header.push_back("vs. " + methods[b]);
            std::vector<std::vector<std::string>> stat_rows;
            for (std::size_t a = 0; a + 1 < methods.size(); ++a) {
                std::vector<std::string> row = {methods[a]};
                bool any = false;
                for (std::size_t b = 1; b < methods.size(); ++b) {
                    std::string cell;
                    for (const auto& s : rec.stats)
                        if (s.project == project && s.result.method_a == methods[a] && s.result.method_b == methods[b]) {
                            cell = format_stat_cell(s.result, style);
                            any = true;
                        }
                    row.push_back(cell);
                }
                if (any) stat_rows.push_back(std::move(row));
            }
            out.emplace_back(unique("stats_" + safe_name(project)), render(header, stat_rows, style));

            if (methods.empty()) continue;
            std::map<std::string, std::string> cells;
            for (const auto& s : rec.stats) {
                if (s.project != project || s.result.method_a != methods.front()) continue;
                const std::string column = s.result.method_a + " vs. " + s.result.method_b;
                if (std::find(summary_columns.begin(), summary_columns.end(), column) == summary_columns.end())
                    summary_columns.push_back(column);
                cells[column] = format_stat_cell(s.result, style);
            }
            if (!cells.empty()) summary_rows.emplace_back(project, std::move(cells));
        }
    }

    if (!summary_rows.empty()) {
        std::vector<std::string> header = {"Project"};
        header.insert(header.end(), summary_columns.begin(), summary_columns.end());
        std::vector<std::vector<std::string>> rows;
        for (const auto& [project, cells] : summary_rows) {
            std::vector<std::string> row = {project};
            for (const auto& c : summary_columns) {
                const auto it = cells.find(c);
                row.push_back(it == cells.end() ? "" : it->second);
            }
            rows.push_back(std::move(row));
        }
        out.emplace_back(unique("stats_summary"), render(header, rows, style));
    }
    return out;
}

std::vector<fs::path> emit_tables(std::span<const RunRecord> records, TableStyle style, const fs::path& out_dir) {
    const std::string ext = style == TableStyle::csv ? ".csv" : ".md";
    std::vector<fs::path> written;
    fs::create_directories(out_dir);
    for (const auto& [stem, content] : render_tables(records, style)) {
        const fs::path p = out_dir / (stem + ext);
        write_file(p, content);
        written.push_back(p);
    }
    return written;
}

}  // namespace spbench::bench
