// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spbench/issue.hpp"
#include "spbench/metrics.hpp"

namespace spbench::tfidf_svm {

struct Context {
    std::string text_chunk;
    std::string code_chunk;
};

/// Context is title + " " + description. Code regions (Jira code/noformat
/// blocks, stack traces) go to `code_chunk` in order, joined by newlines; the
/// remainder, trimmed, is `text_chunk`.
Context build_context(const Issue& issue);

/// TF/IDF over one chunk kind. Terms are indexed in lexicographic order.
/// tf = raw count, idf = ln((1 + N) / (1 + df)) + 1, rows L2-normalised.
class TfidfBlock {
public:
    TfidfBlock() = default;

    static TfidfBlock fit(const std::vector<std::vector<std::string>>& documents);

    Eigen::VectorXd transform(const std::vector<std::string>& tokens) const;

    std::size_t size() const noexcept { return vocab_.size(); }
    const std::map<std::string, std::size_t>& vocab() const noexcept { return vocab_; }
    const Eigen::VectorXd& idf() const noexcept { return idf_; }
    const Eigen::VectorXi& document_frequency() const noexcept { return df_; }

    friend class FeaturePipeline;
    friend struct Serializer;

private:
    std::map<std::string, std::size_t> vocab_;
    Eigen::VectorXd idf_;
    Eigen::VectorXi df_;
};

/// Chi-squared score of each column against class labels, computed from the
/// 2 x C table of (feature present, feature absent) by class.
Eigen::VectorXd chi_squared_scores(const Eigen::MatrixXd& features, std::span<const double> labels);

/// Indices of the k best scores (ties: lower index first), returned ascending.
std::vector<std::size_t> select_top_k(const Eigen::VectorXd& scores, std::size_t k);

inline constexpr std::size_t kDefaultSelected = 100;

class FeaturePipeline {
public:
    FeaturePipeline() = default;

    /// Fits both TF/IDF blocks, the type and component vocabularies and the
    /// chi-squared selection. k larger than the assembled dimension is clamped
    /// and a warning recorded.
    static FeaturePipeline fit(std::span<const Issue> train, std::size_t k = kDefaultSelected);

    /// [tfidf(text) | tfidf(code) | one-hot(type) | multi-hot(components)]
    Eigen::VectorXd assemble(const Issue& issue) const;

    /// Assembled vector restricted to the selected indices.
    Eigen::VectorXd transform(const Issue& issue) const;
    Eigen::MatrixXd transform(std::span<const Issue> issues) const;

    std::size_t dimension() const noexcept;
    std::size_t k_selected() const noexcept { return selected_.size(); }
    const std::vector<std::size_t>& selected_indices() const noexcept { return selected_; }
    const Eigen::VectorXd& scores() const noexcept { return scores_; }
    const TfidfBlock& text_block() const noexcept { return text_; }
    const TfidfBlock& code_block() const noexcept { return code_; }
    const std::map<std::string, std::size_t>& type_vocab() const noexcept { return types_; }
    const std::map<std::string, std::size_t>& component_vocab() const noexcept { return components_; }
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    /// Same fitted vocabularies with a different selection size (for projection checks).
    FeaturePipeline reselect(std::size_t k) const;

    friend struct Serializer;

private:
    TfidfBlock text_;
    TfidfBlock code_;
    std::map<std::string, std::size_t> types_;
    std::map<std::string, std::size_t> components_;
    Eigen::VectorXd scores_;
    std::vector<std::size_t> selected_;
    std::vector<std::string> warnings_;
};

struct SvmOptions {
    double C = 1.0;
    int max_iter = 1000;
    double tolerance = 1e-3;
    std::uint64_t seed = 0;
};

inline constexpr std::size_t kSmallTrainingSet = 200;

/// Linear one-vs-rest SVM (L2-regularised hinge loss, dual coordinate descent,
/// bias as an extra constant feature). Predictions are always training labels.
class SPClassifier {
public:
    SPClassifier() = default;

    /// One class yields a constant predictor; fewer than 200 rows and the
    /// degenerate case record warnings.
    static SPClassifier train(const Eigen::MatrixXd& features, std::span<const double> labels, const SvmOptions& options = {});

    /// One decision value per class label.
    Eigen::VectorXd decision(const Eigen::VectorXd& x) const;
    double predict(const Eigen::VectorXd& x) const;

    const std::vector<double>& class_labels() const noexcept { return labels_; }
    const Eigen::MatrixXd& weights() const noexcept { return weights_; }
    bool degenerate() const noexcept { return labels_.size() == 1; }
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    friend struct Serializer;

private:
    std::vector<double> labels_;
    Eigen::MatrixXd weights_;  // classes x (features + 1), last column is the bias
    std::vector<std::string> warnings_;
};

SPClassifier train_svm(const Eigen::MatrixXd& features, std::span<const double> labels, double C = 1.0);

PredictionSet predict_svm(const SPClassifier& clf, const FeaturePipeline& pipeline, std::span<const Issue> test);

struct TfidfSvmModel {
    FeaturePipeline pipeline;
    SPClassifier classifier;
};

/// Fit pipeline and classifier on training issues in one go.
TfidfSvmModel fit(std::span<const Issue> train, std::size_t k = kDefaultSelected, const SvmOptions& options = {});

inline constexpr int kModelFormatVersion = 1;

/// JSON artifact: format tag, version, vocabularies, idf, selection, weights.
void save_model(const std::filesystem::path& path, const TfidfSvmModel& model);
TfidfSvmModel load_model(const std::filesystem::path& path);
std::string to_json(const TfidfSvmModel& model);
TfidfSvmModel from_json(const std::string& text);

}  // namespace spbench::tfidf_svm
