// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "spbench/corpus.hpp"
#include "spbench/issue.hpp"
#include "spbench/metrics.hpp"

namespace spbench::deepse {

class Vocab {
public:
    static constexpr int kPad = 0;
    static constexpr int kOov = 1;

    Vocab() : Vocab(std::vector<std::string>{}) {}

    /// Ranked tokens, excluding the padding and OOV entries.
    explicit Vocab(std::vector<std::string> ranked);

    int index_of(std::string_view token) const;
    std::size_t size() const noexcept { return tokens_.size(); }

    /// Index -> token; entries 0 and 1 are "<pad>" and "<oov>".
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

struct DeepSEConfig {
    int embed_dim = 50;
    int lstm_dim = 100;
    int rhwn_layers = 2;
    int rhwn_steps = 10;
    int max_tokens = 100;
    int vocab_size = 5000;
    double learning_rate = 1e-3;
    int batch_size = 32;
    int max_epochs = 200;
    int patience = 10;
    std::uint64_t seed = 0;
    bool pretrain = false;
    /// Strip code regions before tokenising. Off by default: the model sees raw text.
    bool clean_text = false;
};

std::string to_json(const DeepSEConfig& cfg);
DeepSEConfig config_from_json(std::string_view json);

/// Lowercased tokens of title + " " + description, split on whitespace and
/// punctuation.
std::vector<std::string> issue_tokens(const Issue& issue, bool clean_text = false);

/// Tokens ranked by training frequency (ties lexicographic), truncated to
/// max_size - 2. max_size must be at least 2.
Vocab build_vocab(std::span<const Issue> train, std::size_t max_size, bool clean_text = false);

/// First max_tokens indices, right-padded with 0.
std::vector<int> encode(const Issue& issue, const Vocab& vocab, std::size_t max_tokens = 100,
                        bool clean_text = false);

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double seconds = 0.0;
};

/// Patience rule: stop once `patience` consecutive epochs fail to improve
/// strictly on the best validation loss.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience);

    /// Records the next epoch's validation loss; true when training should stop.
    bool update(double val_loss);

    int best_epoch() const noexcept { return best_epoch_; }
    double best_loss() const noexcept { return best_loss_; }
    bool improved() const noexcept { return improved_; }
    int epochs_seen() const noexcept { return epoch_; }

private:
    int patience_;
    int epoch_ = 0;
    int best_epoch_ = 0;
    double best_loss_;
    int stale_ = 0;
    bool improved_ = false;
};

struct PretrainedEncoder {
    /// Embedding followed by LSTM weights, in the parameter layout of the
    /// regression network.
    Eigen::VectorXd weights;
    /// Full language-model parameters, including the softmax layer.
    Eigen::VectorXd lm_parameters;
    std::vector<double> epoch_losses;  // mean cross-entropy per prediction
    int embed_dim = 0;
    int lstm_dim = 0;
    std::size_t vocab_size = 0;
};

/// Next-token language model over the corpus; runs cfg.max_epochs epochs or
/// until the loss stops improving for cfg.patience epochs.
PretrainedEncoder pretrain_lm(std::span<const Issue> corpus, const Vocab& vocab, const DeepSEConfig& cfg);

/// Fraction of next-token predictions whose argmax is correct.
double lm_accuracy(const PretrainedEncoder& lm, std::span<const Issue> corpus, const Vocab& vocab,
                   const DeepSEConfig& cfg);

struct TrainedModel {
    DeepSEConfig config;
    Vocab vocab;
    Eigen::VectorXd parameters;
    std::vector<EpochRecord> trace;
    int best_epoch = 0;
    double pretrain_seconds = 0.0;

    double total_seconds() const;
};

/// Supervised training on explicit train / validation issues. Starts from
/// `encoder` when given, otherwise from a seeded random initialisation.
TrainedModel fit(std::span<const Issue> train, std::span<const Issue> validation, const Vocab& vocab,
                 const DeepSEConfig& cfg, const PretrainedEncoder* encoder = nullptr);

/// Builds the vocabulary from the training issues, pre-trains on them when
/// cfg.pretrain is set, then fits.
TrainedModel train(const corpus::SplitData& split, const DeepSEConfig& cfg);
TrainedModel train(const corpus::SplitPlan& plan, const IssueDataset& target, const DeepSEConfig& cfg,
                   const IssueDataset* source = nullptr);

double predict_one(const TrainedModel& model, const Issue& issue);
PredictionSet predict_deepse(const TrainedModel& model, std::span<const Issue> test);

struct GradientCheckOptions {
    double step = 1e-6;
    std::size_t samples = 5;
    std::uint64_t seed = 0;
    /// Evaluate the finite differences in long double. The analytic gradient
    /// is always double.
    bool extended_reference = true;
};

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::vector<Eigen::Index> indices;
    std::vector<double> analytic;
    std::vector<double> numeric;
};

/// MAE batch loss of a randomly initialised network.
double batch_loss(const DeepSEConfig& cfg, const Eigen::VectorXd& params, std::size_t vocab_size,
                  std::span<const std::vector<int>> docs, std::span<const double> targets,
                  Eigen::VectorXd* grad = nullptr);

/// Central differences against backprop on parameters sampled among those the
/// batch touches. Relative error is |a - n| / max(|a|, |n|), 0 when both
/// are below 1e-10. Throws InvalidArgument when a residual is within
/// 1000 * step of zero (an MAE kink).
GradientCheckResult gradient_check(const DeepSEConfig& cfg, std::size_t vocab_size,
                                   std::span<const std::vector<int>> docs, std::span<const double> targets,
                                   const GradientCheckOptions& opts = {});

/// Seeded initial parameters for a regression network.
Eigen::VectorXd initial_parameters(const DeepSEConfig& cfg, std::size_t vocab_size, double output_bias = 0.0);

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);
void write_checkpoint(const TrainedModel& model, std::ostream& out);
TrainedModel read_checkpoint(std::istream& in);

/// epoch,train_loss,val_loss,seconds
void write_trace_csv(std::span<const EpochRecord> trace, std::ostream& out);
void write_trace_csv(std::span<const EpochRecord> trace, const std::filesystem::path& path);

}  // namespace spbench::deepse
