#include "codecat/baseline.hpp"
#include "codecat/error.hpp"
#include "codecat/rng.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace codecat;

namespace {

std::vector<std::vector<std::string>> separable_docs(std::vector<std::size_t>& labels) {
    const std::vector<std::vector<std::string>> words = {{"alsa", "pcm", "mixer", "volume"},
                                                         {"socket", "bind", "listen", "packet"}};
    Rng rng(4);
    std::vector<std::vector<std::string>> docs;
    for (int i = 0; i < 40; ++i) {
        const std::size_t label = static_cast<std::size_t>(i % 2);
        std::vector<std::string> doc;
        for (int t = 0; t < 6; ++t) doc.push_back(words[label][rng.uniform_below(4)]);
        docs.push_back(doc);
        labels.push_back(label);
    }
    return docs;
}

LinearModel random_model(Rng& rng, std::size_t features, std::size_t classes) {
    auto m = LinearModel::zeros(features, classes);
    for (auto& w : m.weights) w = rng.uniform01() * 4.0 - 2.0;
    for (auto& b : m.bias) b = rng.uniform01() - 0.5;
    return m;
}

}  // namespace

TEST(BowVocabulary, TopKWithLexicographicTies) {
    const std::vector<std::vector<std::string>> docs = {{"b", "a", "c", "c"}, {"d", "b", "c"}};
    const auto v = BowVocabulary::build(docs, 3);
    EXPECT_EQ(v.terms(), (std::vector<std::string>{"c", "b", "a"}));
    EXPECT_EQ(v.index("a"), 2);
    EXPECT_EQ(v.index("d"), -1);
    EXPECT_EQ(BowVocabulary::build(docs, 100).size(), 4u);
}

TEST(BowFeatures, RawCountsAndOutOfVocabulary) {
    const BowVocabulary v({"read", "write"});
    const std::vector<std::string> doc = {"read", "read", "close", "write"};
    const auto f = build_bow_features(doc, v);
    EXPECT_EQ(f.dim, 2u);
    EXPECT_EQ(f.dense(), (std::vector<double>{2.0, 1.0}));
    const std::vector<std::string> unseen = {"close", "open"};
    EXPECT_TRUE(build_bow_features(unseen, v).entries.empty());
}

TEST(LogReg, ZeroModelIsUniform) {
    const auto m = LinearModel::zeros(3, 4);
    const std::vector<double> x = {1.0, 5.0, 0.0};
    for (const double p : predict_logreg(m, x).probabilities) EXPECT_DOUBLE_EQ(p, 0.25);
    const std::vector<double> zero = {0.0, 0.0, 0.0};
    for (const double p : predict_logreg(m, zero).probabilities) EXPECT_DOUBLE_EQ(p, 0.25);
}

TEST(LogReg, DimensionMismatchAndSingleClass) {
    const auto m = LinearModel::zeros(3, 2);
    EXPECT_THROW(predict_logreg(m, std::vector<double>{1.0, 2.0}), Error);
    const std::vector<SparseCounts> features = {SparseCounts{1, {{0, 1.0}}}};
    const std::vector<std::size_t> labels = {0};
    EXPECT_THROW(train_logreg(features, labels, 1, {}), Error);
}

TEST(LogReg, SeparableDataIsLearnedDeterministically) {
    std::vector<std::size_t> labels;
    const auto docs = separable_docs(labels);
    const auto vocab = BowVocabulary::build(docs);
    std::vector<SparseCounts> features;
    for (const auto& d : docs) features.push_back(build_bow_features(d, vocab));
    const auto m = train_logreg(features, labels, 2, {});
    EXPECT_EQ(train_logreg(features, labels, 2, {}), m);
    for (std::size_t i = 0; i < docs.size(); ++i) EXPECT_EQ(predict_logreg(m, features[i]).predicted, labels[i]);
}

TEST(LogReg, FullBatchLossNeverIncreases) {
    std::vector<std::size_t> labels;
    const auto docs = separable_docs(labels);
    const auto vocab = BowVocabulary::build(docs);
    std::vector<SparseCounts> features;
    for (const auto& d : docs) features.push_back(build_bow_features(d, vocab));
    LogRegConfig config;
    config.batch_size = 0;
    config.learning_rate = 0.01;
    config.epochs = 40;
    std::vector<double> loss;
    train_logreg(features, labels, 2, config, &loss);
    ASSERT_EQ(loss.size(), 40u);
    for (std::size_t e = 1; e < loss.size(); ++e) EXPECT_LE(loss[e], loss[e - 1]);
}

TEST(LogReg, ProbabilitiesSumToOneAndSparseMatchesDense) {
    Rng rng(5);
    for (int t = 0; t < 100; ++t) {
        const auto m = random_model(rng, 6, 3);
        SparseCounts f{6, {}};
        for (std::uint32_t j = 0; j < 6; ++j) {
            if (rng.uniform01() < 0.5) f.entries.push_back({j, static_cast<double>(1 + rng.uniform_below(4))});
        }
        const auto sparse = predict_logreg(m, f);
        const auto dense = predict_logreg(m, f.dense());
        EXPECT_NEAR(std::accumulate(sparse.probabilities.begin(), sparse.probabilities.end(), 0.0), 1.0, 1e-12);
        for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(sparse.probabilities[k], dense.probabilities[k], 1e-12);
    }
}

TEST(LogReg, MonotoneInFavouringTokenCount) {
    Rng rng(6);
    for (int t = 0; t < 300; ++t) {
        const auto m = random_model(rng, 5, 4);
        const std::size_t c = rng.uniform_below(4);
        // A token favours c when its weight for c is the largest in its row.
        std::size_t token = 5;
        for (std::size_t j = 0; j < 5; ++j) {
            const double* row = &m.weights[j * 4];
            if (std::max_element(row, row + 4) - row == static_cast<std::ptrdiff_t>(c)) token = j;
        }
        if (token == 5) continue;
        std::vector<double> x(5);
        for (auto& v : x) v = static_cast<double>(rng.uniform_below(4));
        double previous = predict_logreg(m, x).probabilities[c];
        for (int step = 0; step < 5; ++step) {
            x[token] += 1.0;
            const double p = predict_logreg(m, x).probabilities[c];
            EXPECT_GE(p, previous - 1e-15);
            previous = p;
        }
    }
}
