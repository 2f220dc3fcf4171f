// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "spbench/baselines.hpp"
#include "spbench/deepse.hpp"
#include "spbench/deepse_network.hpp"
#include "spbench/error.hpp"
#include "spbench/rng.hpp"
#include "support.hpp"
#include "synthetic.hpp"

using namespace spbench;
using namespace spbench::deepse;
using spbench::testing::make_issue;

namespace {

DeepSEConfig tiny() {
    DeepSEConfig cfg;
    cfg.embed_dim = 8;
    cfg.lstm_dim = 10;
    cfg.rhwn_layers = 1;
    cfg.rhwn_steps = 2;
    cfg.max_tokens = 20;
    cfg.vocab_size = 200;
    cfg.batch_size = 16;
    cfg.max_epochs = 40;
    cfg.patience = 5;
    cfg.learning_rate = 1e-2;
    cfg.seed = 3;
    return cfg;
}

Shape shape_of(const DeepSEConfig& cfg, std::size_t vocab) {
    return Shape{static_cast<Eigen::Index>(vocab), cfg.embed_dim, cfg.lstm_dim, cfg.rhwn_layers, cfg.rhwn_steps};
}

corpus::SplitData cluster_split(std::uint64_t seed, int n_train = 120) {
    Rng rng(seed);
    return {spbench::testing::two_cluster(rng, n_train, "T"), spbench::testing::two_cluster(rng, 40, "V", 500),
            spbench::testing::two_cluster(rng, 40, "E", 1000)};
}

}  // namespace

TEST(Vocab, RankedByFrequencyThenLexicographic) {
    const std::vector<Issue> issues{make_issue("K-1", "K", 0, 1, "x y y", "w")};
    const auto v = build_vocab(issues, 10);
    ASSERT_EQ(v.size(), 5u);
    EXPECT_EQ(v.tokens()[0], "<pad>");
    EXPECT_EQ(v.tokens()[1], "<oov>");
    EXPECT_EQ(v.tokens()[2], "y");
    EXPECT_EQ(v.tokens()[3], "w");
    EXPECT_EQ(v.tokens()[4], "x");
    EXPECT_EQ(v.index_of("y"), 2);
    EXPECT_EQ(v.index_of("never"), Vocab::kOov);

    const auto small = build_vocab(issues, 3);
    ASSERT_EQ(small.size(), 3u);
    EXPECT_EQ(small.index_of("x"), Vocab::kOov);
    EXPECT_THROW(build_vocab(issues, 1), InvalidArgument);
}

TEST(Encode, TruncatesAndPads) {
    std::string longer;
    for (int i = 0; i < 150; ++i) longer += "tok ";
    const auto issue_long = make_issue("K-1", "K", 0, 1, longer);
    const auto issue_short = make_issue("K-2", "K", 1, 1, "tok tok tok");
    const auto issue_empty = make_issue("K-3", "K", 2, 1);
    const std::vector<Issue> train{issue_long};
    const auto v = build_vocab(train, 10);

    const auto a = encode(issue_long, v);
    ASSERT_EQ(a.size(), 100u);
    EXPECT_TRUE(std::all_of(a.begin(), a.end(), [](int t) { return t == 2; }));
    const auto b = encode(issue_short, v);
    ASSERT_EQ(b.size(), 100u);
    EXPECT_EQ(std::count(b.begin(), b.end(), 2), 3);
    EXPECT_EQ(std::count(b.begin(), b.end(), Vocab::kPad), 97);
    const auto c = encode(issue_empty, v);
    EXPECT_EQ(std::count(c.begin(), c.end(), Vocab::kPad), 100);
}

TEST(Network, PaddingDoesNotChangeThePrediction) {
    const auto cfg = tiny();
    const auto params = initial_parameters(cfg, 12, 2.0);
    const RegressionNetwork<double> net(shape_of(cfg, 12));
    const std::vector<int> plain{2, 3, 4}, padded{2, 3, 4, 0, 0, 0, 0}, trailing{2, 3, 4, 0, 7, 8};
    const double p = net.predict(params, plain);
    EXPECT_EQ(net.predict(params, padded), p);
    EXPECT_EQ(net.predict(params, trailing), p);
    // an empty document pools to the zero vector
    EXPECT_EQ(net.document_vector(params, std::vector<int>{0, 0}).norm(), 0.0);
}

TEST(Network, ClosedTransformGateIsIdentity) {
    const auto cfg = tiny();
    Eigen::VectorXd params = initial_parameters(cfg, 12);
    const RegressionNetwork<double> net(shape_of(cfg, 12));
    for (const auto& b : net.layout().gate_weight) params.segment(b.offset, b.size()).setZero();
    for (const auto& b : net.layout().gate_bias) params.segment(b.offset, b.size()).setConstant(-1e4);
    const Eigen::VectorXd doc = Eigen::VectorXd::LinSpaced(cfg.lstm_dim, -1.0, 1.0);
    EXPECT_LT((net.highway(params, doc) - doc).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Network, InitialisationFollowsTheConventions) {
    const auto cfg = tiny();
    const auto params = initial_parameters(cfg, 12, 4.5);
    const RegressionNetwork<double> net(shape_of(cfg, 12));
    const auto& l = net.layout();
    const Eigen::Map<const Eigen::MatrixXd> embedding(params.data() + l.embedding.offset, l.embedding.rows, l.embedding.cols);
    EXPECT_EQ(embedding.col(0).norm(), 0.0);
    EXPECT_LE(embedding.cwiseAbs().maxCoeff(), 0.1);
    const Eigen::Index h = cfg.lstm_dim;
    EXPECT_TRUE((params.segment(l.lstm_bias.offset + h, h).array() == 1.0).all());  // forget gate
    EXPECT_TRUE((params.segment(l.gate_bias[0].offset, h).array() == -2.0).all());
    EXPECT_EQ(params(l.out_bias.offset), 4.5);
}

TEST(GradientCheck, BackpropMatchesCentralDifferences) {
    auto cfg = tiny();
    cfg.rhwn_layers = 2;
    const std::vector<std::vector<int>> docs{{2, 3, 4, 5, 0, 0}, {6, 7, 2, 0, 0, 0}, {3, 3, 8, 9, 4, 0}};
    const std::vector<double> targets{50, 60, 70};
    for (double step : {1e-5, 1e-6}) {
        GradientCheckOptions opts;
        opts.step = step;
        opts.samples = 10;
        const auto r = gradient_check(cfg, 10, docs, targets, opts);
        EXPECT_EQ(r.indices.size(), 10u);
        EXPECT_LT(r.max_relative_error, 1e-4) << "step " << step;
    }
}

TEST(GradientCheck, RefusesMaeKinks) {
    const auto cfg = tiny();
    const std::vector<std::vector<int>> docs{{2, 3, 0}};
    const auto params = initial_parameters(cfg, 10);
    const double at = batch_loss(cfg, params, 10, docs, std::vector<double>{0.0});
    // with target equal to the current output the residual is zero
    const RegressionNetwork<double> net(shape_of(cfg, 10));
    const double output = net.predict(params, docs[0]);
    EXPECT_NEAR(at, std::abs(output), 1e-12);
    EXPECT_THROW(gradient_check(cfg, 10, docs, std::vector<double>{output}), InvalidArgument);
}

TEST(EarlyStopping, StopsAfterPatienceStaleEpochs) {
    EarlyStopping es(3);
    EXPECT_FALSE(es.update(5.0));
    EXPECT_FALSE(es.update(4.0));
    EXPECT_TRUE(es.improved());
    EXPECT_FALSE(es.update(4.0));  // equal is not an improvement
    EXPECT_FALSE(es.improved());
    EXPECT_FALSE(es.update(4.5));
    EXPECT_TRUE(es.update(4.0));
    EXPECT_EQ(es.best_epoch(), 2);
    EXPECT_EQ(es.epochs_seen(), 5);
    EXPECT_THROW(EarlyStopping(0), InvalidArgument);
}

TEST(Training, PlateauStopsExactlyPatienceEpochsAfterTheBest) {
    auto cfg = tiny();
    cfg.learning_rate = 0.0;
    cfg.patience = 10;
    const auto split = cluster_split(1, 40);
    const auto model = train(split, cfg);
    EXPECT_EQ(model.best_epoch, 1);
    ASSERT_EQ(model.trace.size(), 11u);
    EXPECT_EQ(model.trace.back().epoch - model.best_epoch, 10);
}

TEST(Training, LearnsTheTwoClusterTask) {
    const auto split = cluster_split(2);
    const auto model = train(split, tiny());
    EXPECT_LT(mae(predict_deepse(model, split.test)), 1.0);
    const auto sps = story_points(split.train);
    EXPECT_DOUBLE_EQ(mae(baselines::median_estimator(sps, split.test)), 3.5);
    // the restored parameters are the best epoch's: their validation MAE is the traced one
    ASSERT_GE(model.trace.size(), static_cast<std::size_t>(model.best_epoch));
    EXPECT_NEAR(mae(predict_deepse(model, split.validation)),
                model.trace[static_cast<std::size_t>(model.best_epoch - 1)].val_loss, 1e-9);
}

TEST(Training, SameSeedSameModel) {
    auto cfg = tiny();
    cfg.max_epochs = 5;
    const auto split = cluster_split(4, 40);
    const auto a = train(split, cfg);
    const auto b = train(split, cfg);
    EXPECT_EQ(a.parameters, b.parameters);
    cfg.seed = 99;
    const auto c = train(split, cfg);
    EXPECT_NE(a.parameters, c.parameters);
}

TEST(Training, EmptyValidationIsRejected) {
    auto split = cluster_split(5, 20);
    split.validation.clear();
    EXPECT_THROW(train(split, tiny()), InvalidArgument);
}

TEST(Training, NonFiniteLossRaisesNumericError) {
    auto split = cluster_split(6, 20);
    split.train[0].story_point = std::numeric_limits<double>::quiet_NaN();
    try {
        train(split, tiny());
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("smaller learning rate"), std::string::npos);
    }
}

TEST(Prediction, ClampedAtZeroAndBatchMatchesSingle) {
    auto cfg = tiny();
    cfg.max_epochs = 2;
    const auto split = cluster_split(7, 20);
    auto model = train(split, cfg);
    const auto batch = predict_deepse(model, split.test);
    for (std::size_t i = 0; i < split.test.size(); ++i) {
        EXPECT_EQ(batch.entries()[i].predicted, predict_one(model, split.test[i]));
        EXPECT_EQ(batch.entries()[i].issue_key, split.test[i].issue_key);
    }
    model.parameters(model.parameters.size() - 1) = -1e3;
    for (const auto& issue : split.test) EXPECT_EQ(predict_one(model, issue), 0.0);
}

TEST(Checkpoint, RoundTripIsExact) {
    auto cfg = tiny();
    cfg.max_epochs = 3;
    const auto split = cluster_split(8, 20);
    const auto model = train(split, cfg);
    std::stringstream buf;
    write_checkpoint(model, buf);
    const auto back = read_checkpoint(buf);
    EXPECT_EQ(back.parameters, model.parameters);
    EXPECT_EQ(back.vocab.tokens(), model.vocab.tokens());
    EXPECT_EQ(to_json(back.config), to_json(model.config));
    EXPECT_EQ(back.best_epoch, model.best_epoch);
    ASSERT_EQ(back.trace.size(), model.trace.size());
    EXPECT_EQ(back.trace.back().val_loss, model.trace.back().val_loss);
    for (const auto& issue : split.test) EXPECT_EQ(predict_one(back, issue), predict_one(model, issue));

    std::stringstream garbage("not a checkpoint at all");
    EXPECT_THROW(read_checkpoint(garbage), DataError);
}

TEST(Config, JsonRoundTrip) {
    auto cfg = tiny();
    cfg.pretrain = true;
    cfg.clean_text = true;
    const auto back = config_from_json(to_json(cfg));
    EXPECT_EQ(to_json(back), to_json(cfg));
    EXPECT_TRUE(back.pretrain);
    EXPECT_EQ(back.lstm_dim, 10);
    EXPECT_THROW(config_from_json("[1, 2]"), DataError);
}

TEST(Pretraining, LanguageModelLearnsAnAlternatingCorpus) {
    std::vector<Issue> corpus;
    for (int i = 0; i < 30; ++i) corpus.push_back(make_issue("K-" + std::to_string(i), "K", i, 1, "ping pong ping pong ping pong ping pong"));
    auto cfg = tiny();
    cfg.learning_rate = 2e-2;
    cfg.max_epochs = 60;
    const auto vocab = build_vocab(corpus, 10);
    const auto lm = pretrain_lm(corpus, vocab, cfg);
    EXPECT_GT(lm.epoch_losses.front(), lm.epoch_losses.back());
    EXPECT_DOUBLE_EQ(lm_accuracy(lm, corpus, vocab, cfg), 1.0);
    EXPECT_EQ(lm.weights.size(), RegressionNetwork<double>(shape_of(cfg, vocab.size())).layout().encoder_size());
}

TEST(Pretraining, PretrainedRunAlsoLearnsTheTwoClusterTask) {
    auto cfg = tiny();
    cfg.pretrain = true;
    const auto split = cluster_split(9);
    const auto model = train(split, cfg);
    EXPECT_GT(model.pretrain_seconds, 0.0);
    EXPECT_LT(mae(predict_deepse(model, split.test)), 1.0);
}

TEST(Trace, CsvHasOneRowPerEpoch) {
    std::vector<EpochRecord> trace{{1, 2.0, 3.0, 0.5}, {2, 1.0, 2.5, 0.25}};
    std::stringstream out;
    write_trace_csv(trace, out);
    std::string header, line;
    std::getline(out, header);
    EXPECT_EQ(header, "epoch,train_loss,val_loss,seconds");
    int rows = 0;
    while (std::getline(out, line)) rows += !line.empty();
    EXPECT_EQ(rows, 2);
}
