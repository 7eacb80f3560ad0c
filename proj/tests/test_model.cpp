#include "codecat/error.hpp"
#include "codecat/model.hpp"
#include "codecat/rng.hpp"
#include "support/tiny_model.hpp"

#include <gtest/gtest.h>

#include <omp.h>

#include <numeric>

using namespace codecat;

TEST(Config, DerivedShapesAndValidation) {
    const ClassifierConfig c;
    EXPECT_EQ(c.conv_steps(), 58u);
    EXPECT_EQ(c.pooled_steps(), 29u);
    auto bad = tiny::config();
    bad.kernel_size = 11;
    EXPECT_THROW(bad.validate(), Error);
    bad = tiny::config();
    bad.dropout_level = 1.0;
    EXPECT_THROW(bad.validate(), Error);
    bad = tiny::config(0);
    EXPECT_THROW(bad.validate(), Error);
    const auto j = tiny::config().to_json();
    EXPECT_EQ(ClassifierConfig::from_json(j), tiny::config());
}

TEST(Init, ShapesAndForgetBias) {
    const auto c = tiny::config();
    const auto m = tiny::model(c);
    EXPECT_EQ(m.params.conv_w.size(), c.kernel_size * c.embed_dims * c.filters);
    EXPECT_EQ(m.params.lstm_wx.size(), c.filters * 4 * c.lstm_units);
    EXPECT_EQ(m.params.lstm_wh.size(), c.lstm_units * 4 * c.lstm_units);
    EXPECT_EQ(m.params.out_w.size(), c.hide_u * c.num_categories);
    for (std::size_t h = 0; h < 4 * c.lstm_units; ++h) {
        const bool forget = h >= c.lstm_units && h < 2 * c.lstm_units;
        EXPECT_EQ(m.params.lstm_b[h], forget ? 1.0 : 0.0);
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(c.hide_u + c.num_categories));
    for (const double w : m.params.out_w) EXPECT_LE(std::abs(w), limit);
    EXPECT_EQ(tiny::model(c).params, m.params);
}

TEST(Forward, ProbabilitiesSumToOne) {
    Rng rng(1);
    const auto c = tiny::config(4);
    const auto m = tiny::model(c);
    for (int t = 0; t < 50; ++t) {
        const auto ids = tiny::ids(rng, c.seq_len, 12, rng.uniform_below(c.seq_len + 1));
        const auto p = forward(m, ids);
        ASSERT_EQ(p.probabilities.size(), 4u);
        EXPECT_NEAR(std::accumulate(p.probabilities.begin(), p.probabilities.end(), 0.0), 1.0, 1e-12);
        EXPECT_EQ(p.predicted, Prediction::from_probabilities(p.probabilities).predicted);
    }
}

TEST(Forward, ZeroOutputLayerIsUniform) {
    auto m = tiny::model(tiny::config(5));
    std::fill(m.params.out_w.begin(), m.params.out_w.end(), 0.0);
    const std::vector<TokenId> ids(10, 3);
    for (const double p : forward(m, ids).probabilities) EXPECT_DOUBLE_EQ(p, 0.2);
}

TEST(Forward, DropoutOnlyWhenTraining) {
    const auto c = tiny::config();
    const auto m = tiny::model(c);
    const std::vector<TokenId> ids = {2, 3, 4, 5, 6, 7, 0, 0, 0, 0};
    ForwardTrace trace;
    EXPECT_EQ(forward(m, ids, false, 1).probabilities, forward(m, ids, false, 2).probabilities);
    forward(m, ids, false, 0, &trace);
    EXPECT_TRUE((trace.dropout_mask.array() == 1.0).all());
    EXPECT_EQ(forward(m, ids, true, 9).probabilities, forward(m, ids, true, 9).probabilities);
    forward(m, ids, true, 9, &trace);
    for (const double v : trace.dropout_mask) EXPECT_TRUE(v == 0.0 || v == 2.0);
    EXPECT_EQ(trace.conv.rows(), 8);
    EXPECT_EQ(trace.pooled.rows(), 4);
}

TEST(Gradient, MatchesCentralDifferences) {
    Rng rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const auto c = tiny::config();
        auto m = tiny::model(c, 12, 30 + trial);
        tiny::offset_biases(m, rng);
        const auto ids = tiny::ids(rng, c.seq_len, 12, 3 + rng.uniform_below(8));
        const auto result = gradient_check(m, ids, rng.uniform_below(3));
        EXPECT_EQ(result.checked, m.params.count());
        EXPECT_LT(result.max_relative_error, 1e-4) << result.worst_parameter << "[" << result.worst_index << "]";
    }
}

TEST(Gradient, CheckRejectsDropout) {
    const auto m = tiny::model(tiny::config());
    GradientCheckOptions options;
    options.dropout = true;
    EXPECT_THROW(gradient_check(m, std::vector<TokenId>(10, 2), 0, options), Error);
}

TEST(Gradient, BatchIsThreadCountIndependentAndMatchesSerial) {
    Rng rng(6);
    const auto c = tiny::config();
    const auto m = tiny::model(c);
    std::vector<TrainingExample> batch;
    for (int i = 0; i < 29; ++i) batch.push_back({tiny::ids(rng, c.seq_len, 12, 6), rng.uniform_below(3)});
    const auto serial = batch_gradient_serial(m, batch, true, 77);
    omp_set_num_threads(3);
    const auto parallel = batch_gradient(m, batch, true, 77);
    omp_set_num_threads(1);
    const auto single = batch_gradient(m, batch, true, 77);
    omp_set_num_threads(omp_get_num_procs());
    EXPECT_EQ(parallel.gradient, serial.gradient);
    EXPECT_EQ(single.gradient, serial.gradient);
    EXPECT_EQ(parallel.mean_loss, serial.mean_loss);
}

TEST(Training, EmbeddingStaysFrozenAndLossFalls) {
    Rng rng(8);
    auto c = tiny::config(2);
    c.filters = 8;
    c.dropout_level = 0.0;
    auto m = tiny::model(c);
    tiny::offset_biases(m, rng);
    const auto embedding = m.embedding;
    // Random sentences; the class is decided by which marker token opens them.
    std::vector<TrainingExample> batch;
    for (int i = 0; i < 8; ++i) {
        const std::size_t label = static_cast<std::size_t>(i % 2);
        auto ids = tiny::ids(rng, c.seq_len, 12, 8);
        ids[0] = ids[1] = label == 0 ? 3 : 9;
        batch.push_back({ids, label});
    }
    const double first = train_step(m, batch, 1);
    double last = first;
    for (std::uint64_t s = 2; s < 300; ++s) last = train_step(m, batch, s);
    EXPECT_EQ(m.embedding, embedding);
    EXPECT_LT(last, 0.1 * first);
    EXPECT_EQ(accuracy(m, batch), 1.0);
    EXPECT_EQ(m.optimizer.steps, 299u);
}

TEST(Training, SelectBestEpochTakesFirstMaximum) {
    const std::vector<double> acc = {0.5, 0.8, 0.8, 0.7};
    EXPECT_EQ(select_best_epoch(acc), 1u);
    EXPECT_THROW(select_best_epoch(std::vector<double>{}), Error);
}

TEST(Training, FitIsDeterministic) {
    Rng rng(9);
    auto c = tiny::config();
    c.epochs = 3;
    std::vector<TrainingExample> train, validation;
    for (int i = 0; i < 40; ++i) train.push_back({tiny::ids(rng, c.seq_len, 12, 7), rng.uniform_below(3)});
    for (int i = 0; i < 6; ++i) validation.push_back({tiny::ids(rng, c.seq_len, 12, 7), rng.uniform_below(3)});
    const auto a = fit_examples(tiny::model(c), train, validation);
    const auto b = fit_examples(tiny::model(c), train, validation);
    EXPECT_EQ(a.model.params, b.model.params);
    EXPECT_EQ(a.history.epoch_loss, b.history.epoch_loss);
    ASSERT_EQ(a.history.validation_accuracy.size(), 3u);
    EXPECT_EQ(a.history.best_epoch, select_best_epoch(a.history.validation_accuracy));
    EXPECT_EQ(accuracy(a.model, validation), a.history.validation_accuracy[a.history.best_epoch]);
}

TEST(Examples, BothVariantsAndCategoryIndex) {
    const std::vector<DatasetRecord> records = {
        make_record(FunctionRecord{"p", "f", "void f() { x(); }"}, "net", "Socket layer"),
        make_record(FunctionRecord{"q", "g", "void g() { y(); }"}, "sound", std::nullopt)};
    Vocabulary vocab;
    for (const auto& r : records) {
        for (const auto& t : r.representation(Variant::CodeDescription)) vocab.add(t);
    }
    const std::vector<std::string> categories = {"net", "sound"};
    const std::vector<Variant> variants = {Variant::CodeOnly, Variant::CodeDescription};
    const auto examples = make_examples(records, vocab, categories, 10, variants);
    ASSERT_EQ(examples.size(), 4u);
    EXPECT_EQ(examples[0].label, 0u);
    EXPECT_EQ(examples.back().label, 1u);
    for (const auto& e : examples) EXPECT_EQ(e.ids.size(), 10u);
    EXPECT_THROW(category_index(categories, "games"), Error);
}

TEST(Validation, ProjectsAreDeterministicAndAtLeastOne) {
    std::vector<DatasetRecord> records;
    for (int p = 0; p < 30; ++p) {
        records.push_back(make_record(FunctionRecord{"p" + std::to_string(p), "f", "void f() {}"}, "net", std::nullopt));
    }
    const auto a = choose_validation_projects(records, 0.05, 3);
    EXPECT_EQ(a.size(), 2u);  // round(1.5)
    EXPECT_EQ(choose_validation_projects(records, 0.05, 3), a);
    records.resize(4);
    EXPECT_EQ(choose_validation_projects(records, 0.05, 3).size(), 1u);
}
