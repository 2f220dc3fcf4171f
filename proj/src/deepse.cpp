// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#include "spbench/deepse.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "spbench/csv.hpp"
#include "spbench/deepse_network.hpp"
#include "spbench/error.hpp"
#include "spbench/rng.hpp"
#include "spbench/text.hpp"

namespace spbench::deepse {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

Shape shape_of(const DeepSEConfig& cfg, std::size_t vocab_size) {
    return {static_cast<Eigen::Index>(vocab_size), cfg.embed_dim, cfg.lstm_dim, cfg.rhwn_layers, cfg.rhwn_steps};
}

void validate(const DeepSEConfig& cfg) {
    if (cfg.embed_dim < 1 || cfg.lstm_dim < 1) throw InvalidArgument("embed_dim and lstm_dim must be positive");
    if (cfg.rhwn_layers < 0 || cfg.rhwn_steps < 0) throw InvalidArgument("rhwn_layers and rhwn_steps must be >= 0");
    if (cfg.max_tokens < 1) throw InvalidArgument("max_tokens must be positive");
    if (cfg.vocab_size < 2) throw InvalidArgument("vocab_size must be at least 2");
    if (cfg.batch_size < 1) throw InvalidArgument("batch_size must be positive");
    if (cfg.max_epochs < 1) throw InvalidArgument("max_epochs must be positive");
    if (cfg.patience < 1) throw InvalidArgument("patience must be positive");
    if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate))
        throw InvalidArgument("learning_rate must be a finite value >= 0");
}

void glorot(Eigen::VectorXd& params, const Block& b, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(b.rows + b.cols));
    for (Eigen::Index i = b.offset; i < b.end(); ++i) params(i) = rng.uniform(-a, a);
}

void init_encoder(Eigen::VectorXd& params, const Layout& layout, Eigen::Index hidden, Rng& rng) {
    const auto& e = layout.embedding;
    for (Eigen::Index i = e.offset; i < e.end(); ++i) params(i) = rng.uniform(-0.1, 0.1);
    view(params, e).col(Vocab::kPad).setZero();
    glorot(params, layout.lstm_input, rng);
    glorot(params, layout.lstm_recurrent, rng);
    auto b = view(params, layout.lstm_bias);
    b.setZero();
    b.block(hidden, 0, hidden, 1).setOnes();  // forget gate
}

class Adam {
public:
    Adam(Eigen::Index n, double lr) : lr_(lr), m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}

    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        ++t_;
        m_ = b1 * m_ + (1.0 - b1) * grad;
        v_ = b2 * v_ + (1.0 - b2) * grad.cwiseAbs2();
        const double c1 = 1.0 - std::pow(b1, t_);
        const double c2 = 1.0 - std::pow(b2, t_);
        params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps);
    }

private:
    double lr_;
    int t_ = 0;
    Eigen::VectorXd m_;
    Eigen::VectorXd v_;
};

std::vector<std::vector<int>> encode_all(std::span<const Issue> issues, const Vocab& vocab, const DeepSEConfig& cfg) {
    std::vector<std::vector<int>> out;
    out.reserve(issues.size());
    for (const auto& issue : issues)
        out.push_back(encode(issue, vocab, static_cast<std::size_t>(cfg.max_tokens), cfg.clean_text));
    return out;
}

[[noreturn]] void non_finite(const char* what, int epoch, double lr) {
    std::ostringstream msg;
    msg << what << " became non-finite at epoch " << epoch << " (learning_rate " << lr
        << "); try a smaller learning rate";
    throw NumericError(msg.str());
}

double mean_abs_loss(const RegressionNetwork<double>& net, const Eigen::VectorXd& params,
                     const std::vector<std::vector<int>>& docs, std::span<const double> targets) {
    double sum = 0.0;
    for (std::size_t i = 0; i < docs.size(); ++i) sum += std::abs(net.predict(params, docs[i]) - targets[i]);
    return docs.empty() ? 0.0 : sum / static_cast<double>(docs.size());
}

}  // namespace

Vocab::Vocab(std::vector<std::string> ranked) {
    tokens_.reserve(ranked.size() + 2);
    tokens_.emplace_back("<pad>");
    tokens_.emplace_back("<oov>");
    for (auto& t : ranked) {
        if (index_.count(t)) throw InvalidArgument("duplicate vocabulary token: " + t);
        index_.emplace(t, static_cast<int>(tokens_.size()));
        tokens_.push_back(std::move(t));
    }
}

int Vocab::index_of(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    return it == index_.end() ? kOov : it->second;
}

std::string to_json(const DeepSEConfig& cfg) {
    json j = {{"embed_dim", cfg.embed_dim},
              {"lstm_dim", cfg.lstm_dim},
              {"rhwn_layers", cfg.rhwn_layers},
              {"rhwn_steps", cfg.rhwn_steps},
              {"max_tokens", cfg.max_tokens},
              {"vocab_size", cfg.vocab_size},
              {"learning_rate", cfg.learning_rate},
              {"batch_size", cfg.batch_size},
              {"max_epochs", cfg.max_epochs},
              {"patience", cfg.patience},
              {"seed", cfg.seed},
              {"pretrain", cfg.pretrain},
              {"clean_text", cfg.clean_text}};
    return j.dump();
}

DeepSEConfig config_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid deep-se config: ") + e.what());
    }
    if (!j.is_object()) throw DataError("invalid deep-se config: expected an object");
    DeepSEConfig cfg;
    try {
        cfg.embed_dim = j.value("embed_dim", cfg.embed_dim);
        cfg.lstm_dim = j.value("lstm_dim", cfg.lstm_dim);
        cfg.rhwn_layers = j.value("rhwn_layers", cfg.rhwn_layers);
        cfg.rhwn_steps = j.value("rhwn_steps", cfg.rhwn_steps);
        cfg.max_tokens = j.value("max_tokens", cfg.max_tokens);
        cfg.vocab_size = j.value("vocab_size", cfg.vocab_size);
        cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
        cfg.batch_size = j.value("batch_size", cfg.batch_size);
        cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
        cfg.patience = j.value("patience", cfg.patience);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.pretrain = j.value("pretrain", cfg.pretrain);
        cfg.clean_text = j.value("clean_text", cfg.clean_text);
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid deep-se config: ") + e.what());
    }
    return cfg;
}

std::vector<std::string> issue_tokens(const Issue& issue, bool clean_text) {
    std::string context = issue.title + " " + issue.description;
    if (clean_text) {
        std::string kept;
        std::size_t at = 0;
        for (const auto& r : text::find_code_regions(context)) {
            kept.append(context, at, r.begin - at);
            kept.push_back(' ');
            at = r.end;
        }
        kept.append(context, at, std::string::npos);
        context = std::move(kept);
    }
    auto tokens = text::word_tokens(context);
    if (clean_text) {
        std::erase_if(tokens, [](const std::string& t) { return t == "http" || t == "https" || t == "www"; });
    }
    return tokens;
}

Vocab build_vocab(std::span<const Issue> train, std::size_t max_size, bool clean_text) {
    if (train.empty()) throw InvalidArgument("build_vocab needs at least one training issue");
    if (max_size < 2) throw InvalidArgument("vocabulary max_size must be at least 2");
    std::map<std::string, std::size_t> counts;
    for (const auto& issue : train)
        for (auto& t : issue_tokens(issue, clean_text)) ++counts[std::move(t)];
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > max_size - 2) ranked.resize(max_size - 2);
    std::vector<std::string> tokens;
    tokens.reserve(ranked.size());
    for (auto& [t, _] : ranked) tokens.push_back(t);
    return Vocab(std::move(tokens));
}

std::vector<int> encode(const Issue& issue, const Vocab& vocab, std::size_t max_tokens, bool clean_text) {
    std::vector<int> out(max_tokens, Vocab::kPad);
    const auto tokens = issue_tokens(issue, clean_text);
    const std::size_t n = std::min(tokens.size(), max_tokens);
    for (std::size_t i = 0; i < n; ++i) out[i] = vocab.index_of(tokens[i]);
    return out;
}

EarlyStopping::EarlyStopping(int patience)
    : patience_(patience), best_loss_(std::numeric_limits<double>::infinity()) {
    if (patience < 1) throw InvalidArgument("patience must be positive");
}

bool EarlyStopping::update(double val_loss) {
    ++epoch_;
    improved_ = val_loss < best_loss_;
    if (improved_) {
        best_loss_ = val_loss;
        best_epoch_ = epoch_;
        stale_ = 0;
    } else {
        ++stale_;
    }
    return stale_ >= patience_;
}

Eigen::VectorXd initial_parameters(const DeepSEConfig& cfg, std::size_t vocab_size, double output_bias) {
    validate(cfg);
    const Shape shape = shape_of(cfg, vocab_size);
    const Layout layout = Layout::regression(shape);
    Eigen::VectorXd params = Eigen::VectorXd::Zero(layout.total);
    Rng rng(cfg.seed);
    init_encoder(params, layout, shape.hidden, rng);
    for (std::size_t l = 0; l < layout.highway_weight.size(); ++l) {
        glorot(params, layout.highway_weight[l], rng);
        glorot(params, layout.gate_weight[l], rng);
        view(params, layout.gate_bias[l]).setConstant(-2.0);  // start close to carry
    }
    glorot(params, layout.out_weight, rng);
    view(params, layout.out_bias)(0, 0) = output_bias;
    return params;
}

PretrainedEncoder pretrain_lm(std::span<const Issue> corpus, const Vocab& vocab, const DeepSEConfig& cfg) {
    validate(cfg);
    if (corpus.empty()) throw InvalidArgument("pre-training corpus is empty");
    const Shape shape = shape_of(cfg, vocab.size());
    const LanguageModelNetwork<double> lm(shape);
    const Layout& layout = lm.layout();

    Eigen::VectorXd params = Eigen::VectorXd::Zero(layout.total);
    Rng rng(derive_seed(cfg.seed, 2));
    init_encoder(params, layout, shape.hidden, rng);
    glorot(params, layout.out_weight, rng);

    const auto docs = encode_all(corpus, vocab, cfg);
    std::vector<Eigen::Index> predictions(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i)
        predictions[i] = std::max<Eigen::Index>(document_length(docs[i]) - 1, 0);

    PretrainedEncoder out;
    out.embed_dim = cfg.embed_dim;
    out.lstm_dim = cfg.lstm_dim;
    out.vocab_size = vocab.size();

    const Eigen::Index total_predictions = std::accumulate(predictions.begin(), predictions.end(), Eigen::Index{0});
    if (total_predictions > 0) {
        Adam adam(layout.total, cfg.learning_rate);
        Rng order_rng(derive_seed(cfg.seed, 3));
        std::vector<std::size_t> order(docs.size());
        std::iota(order.begin(), order.end(), 0);
        EarlyStopping stop(cfg.patience);
        Eigen::VectorXd best = params;
        Eigen::VectorXd grad(layout.total);
        for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
            order_rng.shuffle(order.begin(), order.end());
            double epoch_loss = 0.0;
            for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
                const std::size_t stop_at = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
                Eigen::Index count = 0;
                for (std::size_t k = start; k < stop_at; ++k) count += predictions[order[k]];
                if (count == 0) continue;
                grad.setZero();
                const double scale = 1.0 / static_cast<double>(count);
                for (std::size_t k = start; k < stop_at; ++k)
                    epoch_loss += lm.loss(params, docs[order[k]], scale, &grad);
                adam.step(params, grad);
            }
            epoch_loss /= static_cast<double>(total_predictions);
            if (!std::isfinite(epoch_loss) || !params.allFinite())
                non_finite("language-model loss", epoch, cfg.learning_rate);
            out.epoch_losses.push_back(epoch_loss);
            const bool done = stop.update(epoch_loss);
            if (stop.improved()) best = params;
            if (done) break;
        }
        params = std::move(best);
    }

    out.weights = params.head(layout.encoder_size());
    out.lm_parameters = std::move(params);
    return out;
}

double lm_accuracy(const PretrainedEncoder& lm, std::span<const Issue> corpus, const Vocab& vocab,
                   const DeepSEConfig& cfg) {
    if (lm.vocab_size != vocab.size()) throw InvalidArgument("language model and vocabulary sizes differ");
    DeepSEConfig shaped = cfg;
    shaped.embed_dim = lm.embed_dim;
    shaped.lstm_dim = lm.lstm_dim;
    const LanguageModelNetwork<double> net(shape_of(shaped, vocab.size()));
    Eigen::Index correct = 0, total = 0;
    for (const auto& doc : encode_all(corpus, vocab, shaped)) {
        Eigen::Index hits = 0;
        net.loss(lm.lm_parameters, doc, 0.0, nullptr, &hits);
        correct += hits;
        total += std::max<Eigen::Index>(document_length(doc) - 1, 0);
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

double TrainedModel::total_seconds() const {
    double s = pretrain_seconds;
    for (const auto& r : trace) s += r.seconds;
    return s;
}

TrainedModel fit(std::span<const Issue> train, std::span<const Issue> validation, const Vocab& vocab,
                 const DeepSEConfig& cfg, const PretrainedEncoder* encoder) {
    validate(cfg);
    if (train.empty()) throw InvalidArgument("deep-se training set is empty");
    if (validation.empty()) throw InvalidArgument("deep-se needs a non-empty validation set for early stopping");

    const std::vector<double> train_sp = story_points(train);
    const std::vector<double> val_sp = story_points(validation);
    const double bias = metrics::median(Eigen::Map<const Eigen::VectorXd>(train_sp.data(), static_cast<Eigen::Index>(train_sp.size())));

    const RegressionNetwork<double> net(shape_of(cfg, vocab.size()));
    Eigen::VectorXd params = initial_parameters(cfg, vocab.size(), bias);
    if (encoder) {
        if (encoder->vocab_size != vocab.size() || encoder->embed_dim != cfg.embed_dim ||
            encoder->lstm_dim != cfg.lstm_dim ||
            encoder->weights.size() != net.layout().encoder_size())
            throw InvalidArgument("pre-trained encoder does not match the network shape");
        params.head(encoder->weights.size()) = encoder->weights;
    }

    const auto train_docs = encode_all(train, vocab, cfg);
    const auto val_docs = encode_all(validation, vocab, cfg);

    TrainedModel model;
    model.config = cfg;
    model.vocab = vocab;

    Adam adam(params.size(), cfg.learning_rate);
    Rng order_rng(derive_seed(cfg.seed, 1));
    std::vector<std::size_t> order(train_docs.size());
    std::iota(order.begin(), order.end(), 0);
    EarlyStopping stop(cfg.patience);
    Eigen::VectorXd best = params;
    Eigen::VectorXd grad(params.size());
    RegressionCache<double> cache;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto t0 = Clock::now();
        order_rng.shuffle(order.begin(), order.end());
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const double scale = 1.0 / static_cast<double>(end - start);
            grad.setZero();
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t i = order[k];
                const double r = net.forward(params, train_docs[i], cache) - train_sp[i];
                loss_sum += std::abs(r);
                const double sign = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
                if (sign != 0.0) net.backward(params, cache, sign * scale, grad);
            }
            adam.step(params, grad);
        }
        const double train_loss = loss_sum / static_cast<double>(order.size());
        if (!std::isfinite(train_loss) || !params.allFinite()) non_finite("training loss", epoch, cfg.learning_rate);
        const double val_loss = mean_abs_loss(net, params, val_docs, val_sp);
        if (!std::isfinite(val_loss)) non_finite("validation loss", epoch, cfg.learning_rate);
        const double seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        model.trace.push_back({epoch, train_loss, val_loss, seconds});
        const bool done = stop.update(val_loss);
        if (stop.improved()) best = params;
        if (done) break;
    }

    model.parameters = std::move(best);
    model.best_epoch = stop.best_epoch();
    return model;
}

TrainedModel train(const corpus::SplitData& split, const DeepSEConfig& cfg) {
    validate(cfg);
    const Vocab vocab = build_vocab(split.train, static_cast<std::size_t>(cfg.vocab_size), cfg.clean_text);
    if (!cfg.pretrain) return fit(split.train, split.validation, vocab, cfg);
    const auto t0 = Clock::now();
    const PretrainedEncoder encoder = pretrain_lm(split.train, vocab, cfg);
    const double seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    TrainedModel model = fit(split.train, split.validation, vocab, cfg, &encoder);
    model.pretrain_seconds = seconds;
    return model;
}

TrainedModel train(const corpus::SplitPlan& plan, const IssueDataset& target, const DeepSEConfig& cfg,
                   const IssueDataset* source) {
    return train(corpus::materialize(plan, target, source), cfg);
}

double predict_one(const TrainedModel& model, const Issue& issue) {
    const RegressionNetwork<double> net(shape_of(model.config, model.vocab.size()));
    if (model.parameters.size() != net.parameter_count())
        throw InvalidArgument("model parameters do not match the configured network shape");
    const auto doc = encode(issue, model.vocab, static_cast<std::size_t>(model.config.max_tokens),
                            model.config.clean_text);
    return std::max(0.0, net.predict(model.parameters, doc));
}

PredictionSet predict_deepse(const TrainedModel& model, std::span<const Issue> test) {
    PredictionSet out;
    for (const auto& issue : test) out.add({issue.issue_key, issue.story_point, predict_one(model, issue)});
    return out;
}

double batch_loss(const DeepSEConfig& cfg, const Eigen::VectorXd& params, std::size_t vocab_size,
                  std::span<const std::vector<int>> docs, std::span<const double> targets, Eigen::VectorXd* grad) {
    if (docs.size() != targets.size() || docs.empty())
        throw InvalidArgument("batch_loss needs one target per document and a non-empty batch");
    const RegressionNetwork<double> net(shape_of(cfg, vocab_size));
    if (params.size() != net.parameter_count()) throw InvalidArgument("parameter vector has the wrong size");
    if (grad) grad->setZero(params.size());
    const double scale = 1.0 / static_cast<double>(docs.size());
    RegressionCache<double> cache;
    double loss = 0.0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const double r = net.forward(params, docs[i], cache) - targets[i];
        loss += std::abs(r) * scale;
        if (grad && r != 0.0) net.backward(params, cache, (r > 0.0 ? 1.0 : -1.0) * scale, *grad);
    }
    return loss;
}

GradientCheckResult gradient_check(const DeepSEConfig& cfg, std::size_t vocab_size,
                                   std::span<const std::vector<int>> docs, std::span<const double> targets,
                                   const GradientCheckOptions& opts) {
    if (!(opts.step > 0.0)) throw InvalidArgument("gradient check step must be positive");
    const Eigen::VectorXd params = initial_parameters(cfg, vocab_size, 0.0);
    Eigen::VectorXd grad;
    batch_loss(cfg, params, vocab_size, docs, targets, &grad);

    // Away from kinks the loss is sum_i s_i (y_i - t_i) / n with fixed signs;
    // differencing that without the constant target term avoids cancellation.
    const Shape shape = shape_of(cfg, vocab_size);
    const RegressionNetwork<double> net(shape);
    std::vector<double> signs;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const double r = net.predict(params, docs[i]) - targets[i];
        if (std::abs(r) < 1e3 * opts.step) throw InvalidArgument("gradient check sample sits on an MAE kink");
        signs.push_back(r > 0.0 ? 1.0 : -1.0);
    }

    const auto objective = [&]<typename S>(const VectorT<S>& p) {
        const RegressionNetwork<S> ext(shape);
        S sum = 0;
        for (std::size_t i = 0; i < docs.size(); ++i) sum += S(signs[i]) * ext.predict(p, docs[i]);
        return sum / static_cast<S>(docs.size());
    };

    // Embedding columns of tokens absent from the batch have no gradient.
    const Layout& layout = net.layout();
    std::vector<bool> used(vocab_size, false);
    for (const auto& doc : docs)
        for (Eigen::Index t = 0; t < document_length(doc); ++t) used[static_cast<std::size_t>(doc[static_cast<std::size_t>(t)])] = true;
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < layout.total; ++i) {
        if (i < layout.embedding.end()) {
            const auto column = static_cast<std::size_t>((i - layout.embedding.offset) / layout.embedding.rows);
            if (!used[column]) continue;
        }
        active.push_back(i);
    }

    Rng rng(opts.seed);
    rng.shuffle(active.begin(), active.end());
    active.resize(std::min(active.size(), opts.samples));

    GradientCheckResult result;
    const auto difference = [&]<typename S>(S) {
        VectorT<S> probe = params.cast<S>();
        for (const Eigen::Index i : active) {
            const S base = probe(i);
            const S h = static_cast<S>(opts.step);
            probe(i) = base + h;
            const S up = objective(probe);
            probe(i) = base - h;
            const S down = objective(probe);
            probe(i) = base;
            result.numeric.push_back(static_cast<double>((up - down) / (S(2) * h)));
        }
    };
    if (opts.extended_reference)
        difference((long double)0);
    else
        difference(0.0);

    for (std::size_t k = 0; k < active.size(); ++k) {
        const double analytic = grad(active[k]);
        const double numeric = result.numeric[k];
        const double scale = std::max(std::abs(analytic), std::abs(numeric));
        const double rel = scale < 1e-10 ? 0.0 : std::abs(analytic - numeric) / scale;
        result.max_relative_error = std::max(result.max_relative_error, rel);
        result.indices.push_back(active[k]);
        result.analytic.push_back(analytic);
    }
    return result;
}

namespace {

constexpr char kMagic[8] = {'S', 'P', 'B', 'D', 'S', 'E', '0', '1'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw DataError("truncated deep-se checkpoint");
    return value;
}

void put_string(std::ostream& out, const std::string& s) {
    put<std::uint64_t>(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
    const auto n = get<std::uint64_t>(in);
    if (n > (1ull << 32)) throw DataError("corrupt deep-se checkpoint: string length");
    std::string s(n, '\0');
    if (!in.read(s.data(), static_cast<std::streamsize>(n))) throw DataError("truncated deep-se checkpoint");
    return s;
}

}  // namespace

void write_checkpoint(const TrainedModel& model, std::ostream& out) {
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kCheckpointVersion);
    put_string(out, to_json(model.config));
    const auto& tokens = model.vocab.tokens();
    put<std::uint64_t>(out, tokens.size() - 2);
    for (std::size_t i = 2; i < tokens.size(); ++i) put_string(out, tokens[i]);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(model.parameters.size()));
    out.write(reinterpret_cast<const char*>(model.parameters.data()),
              static_cast<std::streamsize>(model.parameters.size() * sizeof(double)));
    put<std::uint64_t>(out, model.trace.size());
    for (const auto& r : model.trace) {
        put<std::int32_t>(out, r.epoch);
        put<double>(out, r.train_loss);
        put<double>(out, r.val_loss);
        put<double>(out, r.seconds);
    }
    put<std::int32_t>(out, model.best_epoch);
    put<double>(out, model.pretrain_seconds);
    if (!out) throw Error("failed to write deep-se checkpoint");
}

TrainedModel read_checkpoint(std::istream& in) {
    char magic[sizeof(kMagic)];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError("not a deep-se checkpoint");
    const auto version = get<std::uint32_t>(in);
    if (version != kCheckpointVersion)
        throw DataError("unsupported deep-se checkpoint version " + std::to_string(version));
    TrainedModel model;
    model.config = config_from_json(get_string(in));
    const auto n_tokens = get<std::uint64_t>(in);
    std::vector<std::string> tokens;
    for (std::uint64_t i = 0; i < n_tokens; ++i) tokens.push_back(get_string(in));
    model.vocab = Vocab(std::move(tokens));
    const auto n_params = get<std::uint64_t>(in);
    const RegressionNetwork<double> net(shape_of(model.config, model.vocab.size()));
    if (n_params != static_cast<std::uint64_t>(net.parameter_count()))
        throw DataError("deep-se checkpoint parameter count does not match its config");
    model.parameters.resize(static_cast<Eigen::Index>(n_params));
    if (!in.read(reinterpret_cast<char*>(model.parameters.data()),
                 static_cast<std::streamsize>(n_params * sizeof(double))))
        throw DataError("truncated deep-se checkpoint");
    const auto n_trace = get<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < n_trace; ++i) {
        EpochRecord r;
        r.epoch = get<std::int32_t>(in);
        r.train_loss = get<double>(in);
        r.val_loss = get<double>(in);
        r.seconds = get<double>(in);
        model.trace.push_back(r);
    }
    model.best_epoch = get<std::int32_t>(in);
    model.pretrain_seconds = get<double>(in);
    return model;
}

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    write_checkpoint(model, out);
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return read_checkpoint(in);
}

void write_trace_csv(std::span<const EpochRecord> trace, std::ostream& out) {
    out << "epoch,train_loss,val_loss,seconds\n";
    for (const auto& r : trace)
        out << r.epoch << ',' << csv::format_double(r.train_loss) << ',' << csv::format_double(r.val_loss) << ','
            << csv::format_double(r.seconds) << '\n';
}

void write_trace_csv(std::span<const EpochRecord> trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    write_trace_csv(trace, out);
}

}  // namespace spbench::deepse
