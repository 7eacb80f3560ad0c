#pragma once

#include "codecat/repr.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace codecat {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class EmbeddingStrategy { CodeOnly, CodeDescription };

EmbeddingStrategy parse_strategy(std::string_view s);  // "code-only" / "code-description"
std::string_view to_string(EmbeddingStrategy s);

// vocab_size x dims; rows kPadId and kUnknownId are zero.
struct EmbeddingMatrix {
    RowMatrix values;

    std::size_t vocab_size() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t dims() const { return static_cast<std::size_t>(values.cols()); }
    bool operator==(const EmbeddingMatrix& other) const;
};

// One sentence per training function. code-description prepends the project's
// description tokens (once per function); description-less projects fall back
// to the code-only sentence.
std::vector<std::vector<std::string>> embedding_sentences(const std::vector<DatasetRecord>& records,
                                                          EmbeddingStrategy strategy);

struct GloveConfig {
    std::size_t window = 200;
    std::size_t dims = 100;
    double x_max = 100.0;
    double alpha = 0.75;
    double learning_rate = 0.05;
    std::size_t iterations = 25;
    std::uint64_t seed = 1;
    bool distance_weighting = true;

    void validate() const;
};

struct CooccurrenceEntry {
    TokenId target;
    TokenId context;
    double count;

    bool operator==(const CooccurrenceEntry&) const = default;
};

// Left-context co-occurrence: entries sorted by (target, context), all counts > 0.
struct CooccurrenceTable {
    std::vector<CooccurrenceEntry> entries;

    double total_mass() const;
    double at(TokenId target, TokenId context) const;  // 0 if absent

    // Little-endian (uint32 target, uint32 context, float64 count) triples.
    void save_binary(std::ostream& out) const;
    static CooccurrenceTable load_binary(std::istream& in);
};

using Sentence = std::vector<TokenId>;

// X[id(t), id(t-j)] += 1/j (or 1 without distance weighting) for j in
// [1, window], never across sentences. Sentences are counted in fixed shards
// of `kCooccurrenceShard` merged in shard order, so the table is identical for
// any thread count.
inline constexpr std::size_t kCooccurrenceShard = 256;
CooccurrenceTable build_cooccurrence(std::span<const Sentence> sentences, const GloveConfig& config);

// Single-threaded version over one hash table; kept as the reference the
// sharded counter is tested and benchmarked against.
CooccurrenceTable build_cooccurrence_serial(std::span<const Sentence> sentences, const GloveConfig& config);

std::vector<Sentence> encode_sentences(const std::vector<std::vector<std::string>>& sentences, const Vocabulary& vocab);

struct GloveResult {
    EmbeddingMatrix embedding;             // w + w~, pad/unk rows zero
    std::vector<double> iteration_loss;    // mean weighted loss per iteration
};

// AdaGrad over the shuffled nonzero entries, minimising
// sum f(X_ij) (w_i . w~_j + b_i + b~_j - log X_ij)^2.
GloveResult train_glove(const CooccurrenceTable& table, std::size_t vocab_size, const GloveConfig& config);

// Mean weighted loss of a set of parameters; exposed for tests.
double glove_loss(const CooccurrenceTable& table, const RowMatrix& main, const RowMatrix& context,
                  std::span<const double> main_bias, std::span<const double> context_bias, const GloveConfig& config);

// "token v1 ... vD" per line. Vocab tokens missing from the stream stay zero;
// stream tokens absent from the vocab are ignored.
EmbeddingMatrix load_embedding_text(std::istream& in, const Vocabulary& vocab, std::size_t dims = 100);

// Writes every token with id >= 2 using shortest round-trip formatting.
void save_embedding_text(std::ostream& out, const EmbeddingMatrix& embedding, const Vocabulary& vocab);

EmbeddingMatrix random_embedding(std::size_t vocab_size, std::size_t dims, std::uint64_t seed, double scale = 0.5);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct Neighbor {
    std::string token;
    TokenId id;
    double similarity;
};

// Top-k by cosine, excluding the query, pad, unk and zero rows; ties by id.
std::vector<Neighbor> nearest_neighbors(const EmbeddingMatrix& embedding, const Vocabulary& vocab,
                                        std::string_view token, std::size_t k);

}  // namespace codecat
