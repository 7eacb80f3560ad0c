#include "codecat/embedding.hpp"
#include "codecat/error.hpp"
#include "codecat/rng.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <omp.h>

#include <cmath>
#include <sstream>

using namespace codecat;

namespace {

std::vector<Sentence> random_sentences(Rng& rng, std::size_t count, std::size_t max_len, TokenId types) {
    std::vector<Sentence> out(count);
    for (auto& s : out) {
        s.resize(rng.uniform_below(max_len + 1));
        for (auto& t : s) t = static_cast<TokenId>(2 + rng.uniform_below(types));
    }
    return out;
}

GloveConfig small_glove(std::size_t window, std::size_t dims = 8) {
    GloveConfig c;
    c.window = window;
    c.dims = dims;
    return c;
}

Vocabulary vocab_of(std::initializer_list<const char*> tokens) {
    Vocabulary v;
    for (const auto* t : tokens) v.add(t);
    return v;
}

}  // namespace

TEST(Cooccurrence, SmallExample) {
    // [a, b, c] with window 2
    const std::vector<Sentence> sentences = {{2, 3, 4}};
    const auto table = build_cooccurrence(sentences, small_glove(2));
    ASSERT_EQ(table.entries.size(), 3u);
    EXPECT_DOUBLE_EQ(table.at(3, 2), 1.0);
    EXPECT_DOUBLE_EQ(table.at(4, 3), 1.0);
    EXPECT_DOUBLE_EQ(table.at(4, 2), 0.5);
    EXPECT_DOUBLE_EQ(table.at(2, 3), 0.0);
    EXPECT_DOUBLE_EQ(table.total_mass(), 2.5);
}

TEST(Cooccurrence, NeverCrossesSentences) {
    const std::vector<Sentence> sentences = {{2, 3}, {4}};
    const auto table = build_cooccurrence(sentences, small_glove(10));
    EXPECT_EQ(table.entries.size(), 1u);
    EXPECT_DOUBLE_EQ(table.at(4, 3), 0.0);
}

TEST(Cooccurrence, UnweightedCountsOnes) {
    auto config = small_glove(2);
    config.distance_weighting = false;
    const std::vector<Sentence> sentences = {{2, 3, 4}};
    EXPECT_DOUBLE_EQ(build_cooccurrence(sentences, config).at(4, 2), 1.0);
}

TEST(Cooccurrence, MatchesOracleAndSerial) {
    Rng rng(17);
    for (const std::size_t window : {1u, 3u, 20u}) {
        auto sentences = random_sentences(rng, 600, 40, 25);  // more than two shards
        const auto config = small_glove(window);
        const auto table = build_cooccurrence(sentences, config);
        const auto serial = build_cooccurrence_serial(sentences, config);
        const auto expected = oracle::cooccurrence(sentences, window);

        ASSERT_EQ(table.entries.size(), expected.size());
        EXPECT_EQ(table.entries.size(), serial.entries.size());
        std::size_t i = 0;
        for (const auto& [key, count] : expected) {
            const auto& e = table.entries[i];
            EXPECT_EQ(e.target, key.first);
            EXPECT_EQ(e.context, key.second);
            EXPECT_NEAR(e.count, count, 1e-12);
            EXPECT_EQ(e.target, serial.entries[i].target);
            EXPECT_EQ(e.context, serial.entries[i].context);
            EXPECT_NEAR(e.count, serial.entries[i].count, 1e-12);
            ++i;
        }
        const double mass = oracle::cooccurrence_mass(sentences, window);
        EXPECT_NEAR(table.total_mass(), mass, 1e-12 * mass);
    }
}

TEST(Cooccurrence, IndependentOfThreadCount) {
    Rng rng(23);
    const auto sentences = random_sentences(rng, 1000, 30, 40);
    const auto config = small_glove(8);
    omp_set_num_threads(1);
    const auto one = build_cooccurrence(sentences, config);
    omp_set_num_threads(3);
    const auto three = build_cooccurrence(sentences, config);
    omp_set_num_threads(omp_get_num_procs());
    EXPECT_EQ(one.entries, three.entries);
}

TEST(Cooccurrence, BinaryRoundTrip) {
    Rng rng(5);
    const auto table = build_cooccurrence(random_sentences(rng, 30, 12, 9), small_glove(4));
    std::stringstream buffer;
    table.save_binary(buffer);
    EXPECT_EQ(buffer.str().size(), table.entries.size() * 16);
    const auto back = CooccurrenceTable::load_binary(buffer);
    EXPECT_EQ(back.entries, table.entries);
    std::stringstream truncated(buffer.str().substr(0, 10));
    EXPECT_THROW(CooccurrenceTable::load_binary(truncated), Error);
}

TEST(Glove, ZeroIterationsKeepsInitialisationAndZeroRows) {
    Rng rng(2);
    const auto sentences = random_sentences(rng, 50, 15, 10);
    const auto table = build_cooccurrence(sentences, small_glove(5));
    auto config = small_glove(5);
    config.iterations = 0;
    const auto a = train_glove(table, 12, config);
    const auto b = train_glove(table, 12, config);
    EXPECT_TRUE(a.iteration_loss.empty());
    EXPECT_EQ(a.embedding, b.embedding);
    EXPECT_TRUE(a.embedding.values.row(kPadId).isZero(0.0));
    EXPECT_TRUE(a.embedding.values.row(kUnknownId).isZero(0.0));
}

TEST(Glove, DeterministicLossDecreasesAndClustersPairs) {
    // "a b" and "c d" always appear together, never across.
    std::vector<Sentence> sentences;
    for (int i = 0; i < 200; ++i) {
        sentences.push_back({2, 3, 2, 3});
        sentences.push_back({4, 5, 4, 5});
    }
    auto config = small_glove(2, 10);
    config.iterations = 60;
    const auto table = build_cooccurrence(sentences, config);
    const auto a = train_glove(table, 6, config);
    const auto b = train_glove(table, 6, config);
    EXPECT_EQ(a.embedding, b.embedding);
    ASSERT_EQ(a.iteration_loss.size(), 60u);
    EXPECT_LT(a.iteration_loss.back(), a.iteration_loss.front());

    const auto& v = a.embedding.values;
    auto row = [&](TokenId id) { return std::span<const double>(v.row(id).data(), a.embedding.dims()); };
    EXPECT_GT(cosine_similarity(row(2), row(3)), cosine_similarity(row(2), row(4)));
    EXPECT_GT(cosine_similarity(row(4), row(5)), cosine_similarity(row(3), row(5)));
    EXPECT_TRUE(v.row(kPadId).isZero(0.0));
}

TEST(Glove, RejectsBadConfig) {
    auto config = small_glove(0);
    EXPECT_THROW(config.validate(), Error);
    config = small_glove(2, 0);
    EXPECT_THROW(config.validate(), Error);
}

TEST(EmbeddingText, LoadAlignsWithVocabulary) {
    const auto vocab = vocab_of({"x", "y", "z"});
    std::stringstream in("y 1 2 3\nq 9 9 9\nx 4 5 6\n");
    const auto e = load_embedding_text(in, vocab, 3);
    ASSERT_EQ(e.vocab_size(), vocab.size());
    EXPECT_EQ(e.values(vocab.id("x"), 2), 6.0);
    EXPECT_EQ(e.values(vocab.id("y"), 0), 1.0);
    EXPECT_TRUE(e.values.row(vocab.id("z")).isZero(0.0));
    EXPECT_TRUE(e.values.row(kUnknownId).isZero(0.0));
}

TEST(EmbeddingText, RejectsWrongWidthAndDuplicates) {
    const auto vocab = vocab_of({"x"});
    std::string line = "x";
    for (int i = 0; i < 99; ++i) line += " 0.5";
    std::stringstream short_row(line + "\n");
    EXPECT_THROW(load_embedding_text(short_row, vocab, 100), Error);
    std::stringstream dup("x 1 2\nx 3 4\n");
    EXPECT_THROW(load_embedding_text(dup, vocab, 2), Error);
    std::stringstream junk("x 1 zz\n");
    EXPECT_THROW(load_embedding_text(junk, vocab, 2), Error);
}

TEST(EmbeddingText, SaveLoadRoundTripIsExact) {
    const auto vocab = vocab_of({"alpha", "beta", "gamma"});
    const auto e = random_embedding(vocab.size(), 7, 42);
    std::stringstream buffer;
    save_embedding_text(buffer, e, vocab);
    const auto back = load_embedding_text(buffer, vocab, 7);
    EXPECT_EQ(back, e);
}

TEST(RandomEmbedding, RangeZeroRowsAndSeed) {
    const auto e = random_embedding(50, 6, 3);
    EXPECT_TRUE(e.values.row(kPadId).isZero(0.0));
    EXPECT_TRUE(e.values.row(kUnknownId).isZero(0.0));
    EXPECT_LE(e.values.maxCoeff(), 0.5);
    EXPECT_GE(e.values.minCoeff(), -0.5);
    EXPECT_EQ(random_embedding(50, 6, 3), e);
    EXPECT_FALSE(random_embedding(50, 6, 4) == e);
}

TEST(Neighbors, OrderingExclusionsAndLimits) {
    const auto vocab = vocab_of({"q", "same", "orth", "opp", "none"});
    EmbeddingMatrix e{RowMatrix::Zero(static_cast<Eigen::Index>(vocab.size()), 2)};
    e.values.row(vocab.id("q")) << 1.0, 0.0;
    e.values.row(vocab.id("same")) << 3.0, 0.0;
    e.values.row(vocab.id("orth")) << 0.0, 2.0;
    e.values.row(vocab.id("opp")) << -1.0, 0.0;

    const auto top = nearest_neighbors(e, vocab, "q", 10);
    ASSERT_EQ(top.size(), 3u);  // query, pad, unk and the zero row excluded
    EXPECT_EQ(top[0].token, "same");
    EXPECT_NEAR(top[0].similarity, 1.0, 1e-12);
    EXPECT_EQ(top[1].token, "orth");
    EXPECT_NEAR(top[1].similarity, 0.0, 1e-12);
    EXPECT_EQ(top[2].token, "opp");
    EXPECT_EQ(nearest_neighbors(e, vocab, "q", 1).size(), 1u);
    EXPECT_THROW(nearest_neighbors(e, vocab, "missing", 3), Error);
    EXPECT_THROW(nearest_neighbors(e, vocab, "none", 3), Error);
}

TEST(Cosine, Basics) {
    const std::vector<double> a = {1, 2, 3};
    const std::vector<double> b = {2, 4, 6};
    const std::vector<double> z = {0, 0, 0};
    EXPECT_NEAR(cosine_similarity(a, b), 1.0, 1e-15);
    EXPECT_EQ(cosine_similarity(a, z), 0.0);
}

TEST(Strategy, Names) {
    EXPECT_EQ(parse_strategy("code-only"), EmbeddingStrategy::CodeOnly);
    EXPECT_EQ(to_string(EmbeddingStrategy::CodeDescription), "code-description");
    EXPECT_THROW(parse_strategy("both"), Error);
}

TEST(Sentences, DescriptionPrependedOncePerFunction) {
    const FunctionRecord f{"p", "f", "void f() { go(); }"};
    const std::vector<DatasetRecord> records = {make_record(f, "net", "Fast sockets"),
                                                make_record(FunctionRecord{"q", "g", "int g() {}"}, "net", std::nullopt)};
    const auto co = embedding_sentences(records, EmbeddingStrategy::CodeOnly);
    const auto cd = embedding_sentences(records, EmbeddingStrategy::CodeDescription);
    ASSERT_EQ(co.size(), 2u);
    ASSERT_EQ(cd.size(), 2u);
    EXPECT_EQ(co[0], records[0].tokens);
    EXPECT_EQ(cd[0].size(), co[0].size() + 2);
    EXPECT_EQ(std::count(cd[0].begin(), cd[0].end(), "fast"), 1);
    EXPECT_EQ(cd[1], co[1]);
}
