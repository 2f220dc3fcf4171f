// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 spbench contributors

#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "spbench/error.hpp"
#include "spbench/rng.hpp"
#include "spbench/text.hpp"
#include "spbench/tfidf_svm.hpp"
#include "support.hpp"

using namespace spbench;
using namespace spbench::tfidf_svm;
using spbench::testing::make_issue;

TEST(Tfidf, HandComputedWeights) {
    const std::vector<std::vector<std::string>> docs{{"apple", "apple", "banana"}, {"banana", "cherry"}};
    const auto block = TfidfBlock::fit(docs);
    ASSERT_EQ(block.size(), 3u);
    EXPECT_EQ(block.vocab().at("apple"), 0u);
    EXPECT_EQ(block.vocab().at("cherry"), 2u);
    EXPECT_EQ(block.document_frequency()(1), 2);
    const double rare = std::log(3.0 / 2.0) + 1.0;
    EXPECT_NEAR(block.idf()(0), rare, 1e-15);
    EXPECT_NEAR(block.idf()(1), 1.0, 1e-15);

    const auto v = block.transform(docs[0]);
    const double norm = std::sqrt(4.0 * rare * rare + 1.0);
    EXPECT_NEAR(v(0), 2.0 * rare / norm, 1e-15);
    EXPECT_NEAR(v(1), 1.0 / norm, 1e-15);
    EXPECT_EQ(v(2), 0.0);
}

TEST(Tfidf, UnseenTermsAndEmptyDocumentsGiveZeros) {
    const auto block = TfidfBlock::fit({{"alpha"}});
    EXPECT_EQ(block.transform({"omega"}).norm(), 0.0);
    EXPECT_EQ(block.transform({}).norm(), 0.0);
}

TEST(ChiSquared, HandComputedTwoByTwo) {
    Eigen::MatrixXd x(4, 2);
    x << 1, 0.3,
         1, 0,
         0, 0.2,
         0, 0;
    const std::vector<double> labels{1, 1, 5, 5};
    const auto s = chi_squared_scores(x, labels);
    EXPECT_NEAR(s(0), 4.0, 1e-12);
    EXPECT_NEAR(s(1), 0.0, 1e-12);
}

TEST(ChiSquared, MatchesClosedFormForTwoClasses) {
    Rng rng(3);
    for (int it = 0; it < 50; ++it) {
        const int n = 10 + static_cast<int>(rng.index(30));
        Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, 5);
        std::vector<double> labels(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            labels[static_cast<std::size_t>(i)] = rng.index(2) == 0 ? 2.0 : 3.0;
            for (int f = 0; f < 5; ++f) x(i, f) = rng.index(3) == 0 ? rng.uniform() + 0.01 : 0.0;
        }
        const auto s = chi_squared_scores(x, labels);
        for (int f = 0; f < 5; ++f) {
            double a = 0, b = 0, c = 0, d = 0;  // present/absent by class
            for (int i = 0; i < n; ++i) {
                const bool p = x(i, f) > 0.0;
                const bool first = labels[static_cast<std::size_t>(i)] == 2.0;
                (first ? (p ? a : b) : (p ? c : d)) += 1.0;
            }
            const double den = (a + b) * (c + d) * (a + c) * (b + d);
            const double expected = den == 0.0 ? 0.0 : n * (a * d - b * c) * (a * d - b * c) / den;
            EXPECT_NEAR(s(f), expected, 1e-9);
        }
    }
}

TEST(SelectTopK, TiesGoToLowerIndexAndOutputIsAscending) {
    Eigen::VectorXd s(5);
    s << 1, 3, 3, 2, 5;
    EXPECT_EQ(select_top_k(s, 2), (std::vector<std::size_t>{1, 4}));
    EXPECT_EQ(select_top_k(s, 3), (std::vector<std::size_t>{1, 2, 4}));
    EXPECT_EQ(select_top_k(s, 10).size(), 5u);
}

TEST(Context, CodeIsSeparatedFromText) {
    const auto issue = make_issue("K-1", "K", 0, 1, "Crash on start", "when run {code}fooBar(){code} it dies");
    const auto ctx = build_context(issue);
    EXPECT_EQ(ctx.code_chunk, "fooBar()");
    EXPECT_EQ(text::term_tokens(ctx.text_chunk),
              (std::vector<std::string>{"crash", "on", "start", "when", "run", "it", "dies"}));
}

TEST(Pipeline, FeatureLayoutIsTextCodeTypeComponents) {
    auto a = make_issue("K-1", "K", 0, 1, "alpha beta", "{code}gamma{code}");
    a.issue_type = "Bug";
    a.components = {"ui"};
    auto b = make_issue("K-2", "K", 1, 2, "beta delta", "");
    b.issue_type = "Story";
    b.components = {"core", "ui"};
    const std::vector<Issue> train{a, b};
    const auto p = FeaturePipeline::fit(train, 100);
    // text: alpha beta delta, code: gamma, types: Bug Story, components: core ui
    ASSERT_EQ(p.dimension(), 3u + 1u + 2u + 2u);
    EXPECT_EQ(p.k_selected(), p.dimension());
    EXPECT_FALSE(p.warnings().empty());
    const auto v = p.assemble(b);
    EXPECT_EQ(v(0), 0.0);
    EXPECT_GT(v(1), 0.0);
    EXPECT_GT(v(2), 0.0);
    EXPECT_EQ(v(3), 0.0);
    EXPECT_EQ(v(4), 0.0);
    EXPECT_EQ(v(5), 1.0);
    EXPECT_EQ(v(6), 1.0);
    EXPECT_EQ(v(7), 1.0);
    EXPECT_NEAR(v.head(3).norm(), 1.0, 1e-12);
}

TEST(Pipeline, TransformProjectsTheSelectedColumns) {
    std::vector<Issue> train;
    for (int i = 0; i < 20; ++i) {
        train.push_back(make_issue("K-" + std::to_string(i), "K", i, i % 2 ? 8 : 1,
                                   i % 2 ? "database migration schema" : "typo label wording", "word" + std::to_string(i)));
    }
    const auto p = FeaturePipeline::fit(train, 4);
    ASSERT_EQ(p.k_selected(), 4u);
    const auto full = p.assemble(train[3]);
    const auto sel = p.transform(train[3]);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(sel(static_cast<Eigen::Index>(i)), full(static_cast<Eigen::Index>(p.selected_indices()[i])));
    }
    // the class-revealing words carry the largest chi-squared scores
    const auto& vocab = p.text_block().vocab();
    for (std::size_t idx : p.selected_indices()) {
        bool revealing = false;
        for (const auto* w : {"database", "migration", "schema", "typo", "label", "wording"}) {
            revealing |= vocab.count(w) && vocab.at(w) == idx;
        }
        EXPECT_TRUE(revealing) << idx;
    }
}

TEST(Svm, SeparatesThreeClusters) {
    Rng rng(5);
    Eigen::MatrixXd x(90, 3);
    std::vector<double> y(90);
    const double sps[] = {1, 3, 8};
    for (int i = 0; i < 90; ++i) {
        const int c = i % 3;
        for (int f = 0; f < 3; ++f) x(i, f) = (f == c ? 1.0 : 0.0) + rng.uniform(-0.1, 0.1);
        y[static_cast<std::size_t>(i)] = sps[c];
    }
    const auto clf = train_svm(x, y);
    EXPECT_EQ(clf.class_labels(), (std::vector<double>{1, 3, 8}));
    int correct = 0;
    for (int i = 0; i < 90; ++i) correct += clf.predict(x.row(i).transpose()) == y[static_cast<std::size_t>(i)];
    EXPECT_EQ(correct, 90);
    EXPECT_FALSE(clf.warnings().empty());  // fewer than 200 rows
}

TEST(Svm, SingleClassIsDegenerate) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(10, 2);
    const std::vector<double> y(10, 5.0);
    const auto clf = train_svm(x, y);
    EXPECT_TRUE(clf.degenerate());
    EXPECT_EQ(clf.predict(Eigen::VectorXd::Random(2)), 5.0);
}

TEST(Svm, PredictionsAreAlwaysTrainingLabels) {
    Rng rng(9);
    Eigen::MatrixXd x(40, 4);
    std::vector<double> y(40);
    for (int i = 0; i < 40; ++i) {
        for (int f = 0; f < 4; ++f) x(i, f) = rng.uniform();
        y[static_cast<std::size_t>(i)] = static_cast<double>(1 + rng.index(4));
    }
    const auto clf = train_svm(x, y, 0.5);
    for (int t = 0; t < 50; ++t) {
        Eigen::VectorXd q(4);
        for (int f = 0; f < 4; ++f) q(f) = rng.uniform(-3.0, 3.0);
        const double p = clf.predict(q);
        EXPECT_NE(std::find(y.begin(), y.end(), p), y.end());
    }
}

TEST(TfidfSvmModel, LearnsTextSignalAndRoundTripsThroughJson) {
    std::vector<Issue> train, test;
    for (int i = 0; i < 60; ++i) {
        const bool big = i % 2 == 1;
        auto issue = make_issue("K-" + std::to_string(i), "K", i, big ? 8 : 1,
                                big ? "database migration" : "fix typo", big ? "rework schema storage" : "wording label");
        (i < 40 ? train : test).push_back(issue);
    }
    const auto model = fit(train, 10);
    const auto preds = predict_svm(model.classifier, model.pipeline, test);
    EXPECT_EQ(mae(preds), 0.0);

    const auto json = to_json(model);
    const auto back = from_json(json);
    EXPECT_EQ(to_json(back), json);
    const auto again = predict_svm(back.classifier, back.pipeline, test);
    for (std::size_t i = 0; i < test.size(); ++i) EXPECT_EQ(again.entries()[i].predicted, preds.entries()[i].predicted);

    const auto dir = spbench::testing::scratch_dir("tfidf-model");
    save_model(dir / "m.json", model);
    EXPECT_EQ(to_json(load_model(dir / "m.json")), json);
}

TEST(TfidfSvmModel, RejectsForeignJson) {
    EXPECT_THROW(from_json(R"({"format":"other","version":1})"), DataError);
}

TEST(TfidfSvmModel, EmptyTrainingThrows) {
    EXPECT_THROW(FeaturePipeline::fit(std::vector<Issue>{}, 5), InvalidArgument);
}
