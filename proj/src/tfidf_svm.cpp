// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#include "spbench/tfidf_svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "spbench/error.hpp"
#include "spbench/rng.hpp"
#include "spbench/text.hpp"

namespace spbench::tfidf_svm {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <typename Container>
std::map<std::string, std::size_t> index_sorted(const Container& values) {
    std::set<std::string> sorted(values.begin(), values.end());
    std::map<std::string, std::size_t> out;
    std::size_t i = 0;
    for (const auto& v : sorted) out.emplace(v, i++);
    return out;
}

}  // namespace

Context build_context(const Issue& issue) {
    const std::string context = issue.title + " " + issue.description;
    const auto regions = text::find_code_regions(context);
    Context out;
    std::string remainder;
    std::size_t cursor = 0;
    for (const auto& r : regions) {
        remainder.append(context, cursor, r.begin - cursor);
        remainder.push_back(' ');
        if (!out.code_chunk.empty()) out.code_chunk.push_back('\n');
        out.code_chunk.append(context, r.content_begin, r.content_end - r.content_begin);
        cursor = r.end;
    }
    remainder.append(context, cursor, std::string::npos);
    out.text_chunk = trim(remainder);
    return out;
}

// ---------------------------------------------------------------------------

TfidfBlock TfidfBlock::fit(const std::vector<std::vector<std::string>>& documents) {
    TfidfBlock block;
    std::set<std::string> terms;
    for (const auto& doc : documents) terms.insert(doc.begin(), doc.end());
    block.vocab_ = index_sorted(terms);

    const auto d = static_cast<Eigen::Index>(block.vocab_.size());
    block.df_ = Eigen::VectorXi::Zero(d);
    for (const auto& doc : documents) {
        std::set<std::size_t> present;
        for (const auto& t : doc) present.insert(block.vocab_.at(t));
        for (auto idx : present) ++block.df_(static_cast<Eigen::Index>(idx));
    }
    const double n = static_cast<double>(documents.size());
    block.idf_ = block.df_.cast<double>().unaryExpr([n](double df) { return std::log((1.0 + n) / (1.0 + df)) + 1.0; });
    return block;
}

Eigen::VectorXd TfidfBlock::transform(const std::vector<std::string>& tokens) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab_.size()));
    for (const auto& t : tokens) {
        if (const auto it = vocab_.find(t); it != vocab_.end()) v(static_cast<Eigen::Index>(it->second)) += 1.0;
    }
    v = v.cwiseProduct(idf_);
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
    return v;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd chi_squared_scores(const Eigen::MatrixXd& features, std::span<const double> labels) {
    if (static_cast<std::size_t>(features.rows()) != labels.size()) {
        throw InvalidArgument("chi-squared: one label per feature row required");
    }
    std::vector<double> classes(labels.begin(), labels.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

    const Eigen::Index n = features.rows();
    const auto n_classes = static_cast<Eigen::Index>(classes.size());
    // membership(i, c) = 1 when row i belongs to class c
    Eigen::MatrixXd membership = Eigen::MatrixXd::Zero(n, n_classes);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto c = std::lower_bound(classes.begin(), classes.end(), labels[static_cast<std::size_t>(i)]) - classes.begin();
        membership(i, c) = 1.0;
    }
    const Eigen::MatrixXd present = (features.array() > 0.0).cast<double>().matrix();
    const Eigen::MatrixXd observed_present = membership.transpose() * present;  // classes x features
    const Eigen::VectorXd class_sizes = membership.colwise().sum().transpose();
    const Eigen::RowVectorXd present_totals = present.colwise().sum();
    const double total = static_cast<double>(n);

    Eigen::VectorXd scores = Eigen::VectorXd::Zero(features.cols());
    for (Eigen::Index f = 0; f < features.cols(); ++f) {
        double chi = 0.0;
        for (Eigen::Index c = 0; c < n_classes; ++c) {
            const double o1 = observed_present(c, f);
            const double o0 = class_sizes(c) - o1;
            const double e1 = class_sizes(c) * present_totals(f) / total;
            const double e0 = class_sizes(c) * (total - present_totals(f)) / total;
            if (e1 > 0.0) chi += (o1 - e1) * (o1 - e1) / e1;
            if (e0 > 0.0) chi += (o0 - e0) * (o0 - e0) / e0;
        }
        scores(f) = chi;
    }
    return scores;
}

std::vector<std::size_t> select_top_k(const Eigen::VectorXd& scores, std::size_t k) {
    std::vector<std::size_t> order(static_cast<std::size_t>(scores.size()));
    std::iota(order.begin(), order.end(), 0);
    k = std::min(k, order.size());
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores(static_cast<Eigen::Index>(a)) > scores(static_cast<Eigen::Index>(b));
    });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

// ---------------------------------------------------------------------------

FeaturePipeline FeaturePipeline::fit(std::span<const Issue> train, std::size_t k) {
    if (train.empty()) throw InvalidArgument("feature pipeline needs training issues");
    if (k < 1) throw InvalidArgument("feature selection size k must be >= 1");

    std::vector<std::vector<std::string>> text_docs, code_docs;
    std::vector<std::string> types, components;
    for (const auto& issue : train) {
        const auto ctx = build_context(issue);
        text_docs.push_back(text::term_tokens(ctx.text_chunk));
        code_docs.push_back(text::term_tokens(ctx.code_chunk));
        types.push_back(issue.issue_type);
        components.insert(components.end(), issue.components.begin(), issue.components.end());
    }
    FeaturePipeline p;
    p.text_ = TfidfBlock::fit(text_docs);
    p.code_ = TfidfBlock::fit(code_docs);
    p.types_ = index_sorted(types);
    p.components_ = index_sorted(components);

    const auto dim = p.dimension();
    Eigen::MatrixXd assembled(static_cast<Eigen::Index>(train.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < train.size(); ++i) {
        assembled.row(static_cast<Eigen::Index>(i)) = p.assemble(train[i]).transpose();
    }
    p.scores_ = chi_squared_scores(assembled, story_points(train));
    if (k > dim) {
        p.warnings_.push_back("feature selection k=" + std::to_string(k) + " exceeds the assembled dimension " +
                              std::to_string(dim) + "; clamped");
        k = dim;
    }
    p.selected_ = select_top_k(p.scores_, k);
    return p;
}

std::size_t FeaturePipeline::dimension() const noexcept {
    return text_.size() + code_.size() + types_.size() + components_.size();
}

Eigen::VectorXd FeaturePipeline::assemble(const Issue& issue) const {
    const auto ctx = build_context(issue);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension()));
    auto offset = static_cast<Eigen::Index>(0);
    v.segment(offset, static_cast<Eigen::Index>(text_.size())) = text_.transform(text::term_tokens(ctx.text_chunk));
    offset += static_cast<Eigen::Index>(text_.size());
    v.segment(offset, static_cast<Eigen::Index>(code_.size())) = code_.transform(text::term_tokens(ctx.code_chunk));
    offset += static_cast<Eigen::Index>(code_.size());
    if (const auto it = types_.find(issue.issue_type); it != types_.end()) {
        v(offset + static_cast<Eigen::Index>(it->second)) = 1.0;
    }
    offset += static_cast<Eigen::Index>(types_.size());
    for (const auto& c : issue.components) {
        if (const auto it = components_.find(c); it != components_.end()) {
            v(offset + static_cast<Eigen::Index>(it->second)) = 1.0;
        }
    }
    return v;
}

Eigen::VectorXd FeaturePipeline::transform(const Issue& issue) const {
    const Eigen::VectorXd full = assemble(issue);
    Eigen::VectorXd out(static_cast<Eigen::Index>(selected_.size()));
    for (std::size_t i = 0; i < selected_.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = full(static_cast<Eigen::Index>(selected_[i]));
    }
    return out;
}

Eigen::MatrixXd FeaturePipeline::transform(std::span<const Issue> issues) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(issues.size()), static_cast<Eigen::Index>(selected_.size()));
    for (std::size_t i = 0; i < issues.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = transform(issues[i]).transpose();
    return out;
}

FeaturePipeline FeaturePipeline::reselect(std::size_t k) const {
    FeaturePipeline p = *this;
    p.selected_ = select_top_k(scores_, std::max<std::size_t>(1, k));
    return p;
}

// ---------------------------------------------------------------------------

namespace {

// Binary dual coordinate descent; y in {-1, +1}. Returns w with bias last.
Eigen::VectorXd solve_binary(const Eigen::MatrixXd& xb, const Eigen::VectorXd& y, const SvmOptions& options) {
    const Eigen::Index n = xb.rows();
    Eigen::VectorXd w = Eigen::VectorXd::Zero(xb.cols());
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd diag = xb.rowwise().squaredNorm();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(options.seed);
    for (int iter = 0; iter < options.max_iter; ++iter) {
        rng.shuffle(order.begin(), order.end());
        double pg_max = -std::numeric_limits<double>::infinity();
        double pg_min = std::numeric_limits<double>::infinity();
        for (const Eigen::Index i : order) {
            if (diag(i) <= 0.0) continue;
            const double g = y(i) * xb.row(i).dot(w) - 1.0;
            double pg = g;
            if (alpha(i) <= 0.0) {
                pg = std::min(g, 0.0);
            } else if (alpha(i) >= options.C) {
                pg = std::max(g, 0.0);
            }
            pg_max = std::max(pg_max, pg);
            pg_min = std::min(pg_min, pg);
            if (std::abs(pg) > 1e-12) {
                const double old = alpha(i);
                alpha(i) = std::clamp(old - g / diag(i), 0.0, options.C);
                w.noalias() += ((alpha(i) - old) * y(i)) * xb.row(i).transpose();
            }
        }
        if (pg_max - pg_min < options.tolerance) break;
    }
    return w;
}

}  // namespace

SPClassifier SPClassifier::train(const Eigen::MatrixXd& features, std::span<const double> labels,
                                 const SvmOptions& options) {
    if (static_cast<std::size_t>(features.rows()) != labels.size()) {
        throw InvalidArgument("SVM training: one label per feature row required");
    }
    if (labels.empty()) throw InvalidArgument("SVM training needs at least one example");
    if (!(options.C > 0.0)) throw InvalidArgument("SVM C must be positive");

    SPClassifier clf;
    clf.labels_.assign(labels.begin(), labels.end());
    std::sort(clf.labels_.begin(), clf.labels_.end());
    clf.labels_.erase(std::unique(clf.labels_.begin(), clf.labels_.end()), clf.labels_.end());

    if (labels.size() < kSmallTrainingSet) {
        clf.warnings_.push_back("only " + std::to_string(labels.size()) +
                                " training issues; more than 200 are recommended for a stable classifier");
    }
    const Eigen::Index d = features.cols();
    if (clf.labels_.size() == 1) {
        clf.warnings_.push_back("single story-point class in training data; predicting it constantly");
        clf.weights_ = Eigen::MatrixXd::Zero(1, d + 1);
        return clf;
    }

    Eigen::MatrixXd xb(features.rows(), d + 1);
    xb.leftCols(d) = features;
    xb.col(d).setOnes();
    clf.weights_.resize(static_cast<Eigen::Index>(clf.labels_.size()), d + 1);
    for (std::size_t c = 0; c < clf.labels_.size(); ++c) {
        Eigen::VectorXd y(features.rows());
        for (Eigen::Index i = 0; i < features.rows(); ++i) {
            y(i) = labels[static_cast<std::size_t>(i)] == clf.labels_[c] ? 1.0 : -1.0;
        }
        clf.weights_.row(static_cast<Eigen::Index>(c)) = solve_binary(xb, y, options).transpose();
    }
    return clf;
}

Eigen::VectorXd SPClassifier::decision(const Eigen::VectorXd& x) const {
    const Eigen::Index d = weights_.cols() - 1;
    if (x.size() != d) throw InvalidArgument("feature vector has the wrong dimension for this classifier");
    return weights_.leftCols(d) * x + weights_.col(d);
}

double SPClassifier::predict(const Eigen::VectorXd& x) const {
    if (labels_.empty()) throw InvalidArgument("classifier is not trained");
    if (degenerate()) return labels_.front();
    Eigen::Index best = 0;
    decision(x).maxCoeff(&best);  // first maximum: ties go to the smaller label
    return labels_[static_cast<std::size_t>(best)];
}

SPClassifier train_svm(const Eigen::MatrixXd& features, std::span<const double> labels, double C) {
    SvmOptions options;
    options.C = C;
    return SPClassifier::train(features, labels, options);
}

PredictionSet predict_svm(const SPClassifier& clf, const FeaturePipeline& pipeline, std::span<const Issue> test) {
    PredictionSet out;
    for (const auto& issue : test) out.add({issue.issue_key, issue.story_point, clf.predict(pipeline.transform(issue))});
    return out;
}

TfidfSvmModel fit(std::span<const Issue> train, std::size_t k, const SvmOptions& options) {
    TfidfSvmModel model;
    model.pipeline = FeaturePipeline::fit(train, k);
    model.classifier = SPClassifier::train(model.pipeline.transform(train), story_points(train), options);
    return model;
}

// ---------------------------------------------------------------------------
// Serialization

using json = nlohmann::json;

struct Serializer {
    static json vocab(const std::map<std::string, std::size_t>& v) {
        // Index order equals lexicographic order, so the sorted term list suffices.
        json terms = json::array();
        for (const auto& [term, idx] : v) terms.push_back(term);
        return terms;
    }

    static std::map<std::string, std::size_t> vocab(const json& terms) {
        std::map<std::string, std::size_t> v;
        std::size_t i = 0;
        for (const auto& t : terms) v.emplace(t.get<std::string>(), i++);
        return v;
    }

    static json vector(const Eigen::VectorXd& x) { return std::vector<double>(x.data(), x.data() + x.size()); }

    static Eigen::VectorXd vector(const json& j) {
        const auto values = j.get<std::vector<double>>();
        return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    }

    static json block(const TfidfBlock& b) {
        std::vector<int> df(b.df_.data(), b.df_.data() + b.df_.size());
        return {{"terms", vocab(b.vocab_)}, {"idf", vector(b.idf_)}, {"df", df}};
    }

    static TfidfBlock block(const json& j) {
        TfidfBlock b;
        b.vocab_ = vocab(j.at("terms"));
        b.idf_ = vector(j.at("idf"));
        const auto df = j.at("df").get<std::vector<int>>();
        b.df_ = Eigen::Map<const Eigen::VectorXi>(df.data(), static_cast<Eigen::Index>(df.size()));
        if (b.idf_.size() != static_cast<Eigen::Index>(b.vocab_.size()) || b.df_.size() != b.idf_.size()) {
            throw DataError("model artifact: TF/IDF block sizes disagree");
        }
        return b;
    }

    static json to(const TfidfSvmModel& m) {
        const auto& p = m.pipeline;
        const auto& c = m.classifier;
        json weights = json::array();
        for (Eigen::Index r = 0; r < c.weights_.rows(); ++r) weights.push_back(vector(Eigen::VectorXd(c.weights_.row(r).transpose())));
        return {{"format", "spbench.tfidf_svm"},
                {"version", kModelFormatVersion},
                {"pipeline",
                 {{"text", block(p.text_)},
                  {"code", block(p.code_)},
                  {"types", vocab(p.types_)},
                  {"components", vocab(p.components_)},
                  {"scores", vector(p.scores_)},
                  {"selected", p.selected_}}},
                {"classifier", {{"labels", c.labels_}, {"weights", weights}}}};
    }

    static TfidfSvmModel from(const json& j) {
        if (j.value("format", "") != "spbench.tfidf_svm") throw DataError("not a TF/IDF-SVM model artifact");
        if (j.value("version", 0) != kModelFormatVersion) {
            throw DataError("unsupported TF/IDF-SVM model version " + std::to_string(j.value("version", 0)));
        }
        TfidfSvmModel m;
        const json& jp = j.at("pipeline");
        m.pipeline.text_ = block(jp.at("text"));
        m.pipeline.code_ = block(jp.at("code"));
        m.pipeline.types_ = vocab(jp.at("types"));
        m.pipeline.components_ = vocab(jp.at("components"));
        m.pipeline.scores_ = vector(jp.at("scores"));
        m.pipeline.selected_ = jp.at("selected").get<std::vector<std::size_t>>();
        for (auto idx : m.pipeline.selected_) {
            if (idx >= m.pipeline.dimension()) throw DataError("model artifact: selected index out of range");
        }
        const json& jc = j.at("classifier");
        m.classifier.labels_ = jc.at("labels").get<std::vector<double>>();
        const json& rows = jc.at("weights");
        const auto cols = static_cast<Eigen::Index>(m.pipeline.k_selected() + 1);
        m.classifier.weights_.resize(static_cast<Eigen::Index>(rows.size()), cols);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const Eigen::VectorXd row = vector(rows[r]);
            if (row.size() != cols) throw DataError("model artifact: weight row has the wrong width");
            m.classifier.weights_.row(static_cast<Eigen::Index>(r)) = row.transpose();
        }
        return m;
    }
};

std::string to_json(const TfidfSvmModel& model) { return Serializer::to(model).dump(1); }

TfidfSvmModel from_json(const std::string& text) {
    try {
        return Serializer::from(json::parse(text));
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed TF/IDF-SVM model artifact: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const TfidfSvmModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << to_json(model) << '\n';
}

TfidfSvmModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_json(buffer.str());
}

}  // namespace spbench::tfidf_svm
