#include "codecat/embedding.hpp"
#include "codecat/error.hpp"
#include "codecat/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

namespace codecat {

namespace {

using PairCounts = std::unordered_map<std::uint64_t, double>;

constexpr std::uint64_t pair_key(TokenId target, TokenId context) {
    return (static_cast<std::uint64_t>(target) << 32) | context;
}

void count_sentence(const Sentence& s, const GloveConfig& config, PairCounts& counts) {
    for (std::size_t t = 1; t < s.size(); ++t) {
        const std::size_t reach = std::min(config.window, t);
        for (std::size_t j = 1; j <= reach; ++j) {
            const double weight = config.distance_weighting ? 1.0 / static_cast<double>(j) : 1.0;
            counts[pair_key(s[t], s[t - j])] += weight;
        }
    }
}

std::vector<CooccurrenceEntry> sorted_entries(const PairCounts& counts) {
    std::vector<CooccurrenceEntry> entries;
    entries.reserve(counts.size());
    for (const auto& [key, value] : counts) {
        entries.push_back({static_cast<TokenId>(key >> 32), static_cast<TokenId>(key & 0xffffffffU), value});
    }
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        return a.target != b.target ? a.target < b.target : a.context < b.context;
    });
    return entries;
}

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

void write_f64(std::ostream& out, double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

double weighting(double x, const GloveConfig& config) {
    return x < config.x_max ? std::pow(x / config.x_max, config.alpha) : 1.0;
}

}  // namespace

EmbeddingStrategy parse_strategy(std::string_view s) {
    if (s == "code-only") return EmbeddingStrategy::CodeOnly;
    if (s == "code-description") return EmbeddingStrategy::CodeDescription;
    throw Error("unknown embedding strategy '" + std::string(s) + "' (expected code-only or code-description)");
}

std::string_view to_string(EmbeddingStrategy s) {
    return s == EmbeddingStrategy::CodeOnly ? "code-only" : "code-description";
}

bool EmbeddingMatrix::operator==(const EmbeddingMatrix& other) const {
    return values.rows() == other.values.rows() && values.cols() == other.values.cols() &&
           std::equal(values.data(), values.data() + values.size(), other.values.data());
}

std::vector<std::vector<std::string>> embedding_sentences(const std::vector<DatasetRecord>& records,
                                                          EmbeddingStrategy strategy) {
    std::vector<std::vector<std::string>> sentences;
    sentences.reserve(records.size());
    for (const auto& r : records) {
        std::vector<std::string> sentence;
        if (strategy == EmbeddingStrategy::CodeDescription && r.description) sentence = tokenize(*r.description);
        sentence.insert(sentence.end(), r.tokens.begin(), r.tokens.end());
        sentences.push_back(std::move(sentence));
    }
    return sentences;
}

void GloveConfig::validate() const {
    if (window < 1) throw Error("glove window must be at least 1");
    if (dims < 1) throw Error("glove dims must be at least 1");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("glove alpha must lie in (0, 1]");
    if (!(x_max > 0.0)) throw Error("glove x_max must be positive");
    if (!(learning_rate > 0.0)) throw Error("glove learning rate must be positive");
}

double CooccurrenceTable::total_mass() const {
    double total = 0.0;
    for (const auto& e : entries) total += e.count;
    return total;
}

double CooccurrenceTable::at(TokenId target, TokenId context) const {
    const auto it = std::lower_bound(entries.begin(), entries.end(), std::pair{target, context},
                                     [](const CooccurrenceEntry& e, const std::pair<TokenId, TokenId>& key) {
                                         return e.target != key.first ? e.target < key.first : e.context < key.second;
                                     });
    return (it != entries.end() && it->target == target && it->context == context) ? it->count : 0.0;
}

void CooccurrenceTable::save_binary(std::ostream& out) const {
    for (const auto& e : entries) {
        write_u32(out, e.target);
        write_u32(out, e.context);
        write_f64(out, e.count);
    }
}

CooccurrenceTable CooccurrenceTable::load_binary(std::istream& in) {
    CooccurrenceTable table;
    unsigned char bytes[16];
    for (;;) {
        in.read(reinterpret_cast<char*>(bytes), 16);
        const auto got = in.gcount();
        if (got == 0) break;
        if (got != 16) throw Error("truncated co-occurrence triple");
        std::uint32_t target = 0;
        std::uint32_t context = 0;
        std::uint64_t bits = 0;
        for (int i = 0; i < 4; ++i) target |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
        for (int i = 0; i < 4; ++i) context |= static_cast<std::uint32_t>(bytes[4 + i]) << (8 * i);
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[8 + i]) << (8 * i);
        double count = 0.0;
        std::memcpy(&count, &bits, sizeof count);
        table.entries.push_back({target, context, count});
    }
    return table;
}

CooccurrenceTable build_cooccurrence_serial(std::span<const Sentence> sentences, const GloveConfig& config) {
    config.validate();
    PairCounts counts;
    for (const auto& s : sentences) count_sentence(s, config, counts);
    return CooccurrenceTable{sorted_entries(counts)};
}

CooccurrenceTable build_cooccurrence(std::span<const Sentence> sentences, const GloveConfig& config) {
    config.validate();
    const std::size_t shards = (sentences.size() + kCooccurrenceShard - 1) / kCooccurrenceShard;
    std::vector<std::vector<CooccurrenceEntry>> partial(shards);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(shards); ++s) {
        const std::size_t begin = static_cast<std::size_t>(s) * kCooccurrenceShard;
        const std::size_t end = std::min(sentences.size(), begin + kCooccurrenceShard);
        PairCounts counts;
        for (std::size_t i = begin; i < end; ++i) count_sentence(sentences[i], config, counts);
        partial[static_cast<std::size_t>(s)] = sorted_entries(counts);
    }
    if (shards == 0) return {};
    if (shards == 1) return CooccurrenceTable{std::move(partial.front())};

    PairCounts merged;
    for (const auto& shard : partial) {
        for (const auto& e : shard) merged[pair_key(e.target, e.context)] += e.count;
    }
    return CooccurrenceTable{sorted_entries(merged)};
}

std::vector<Sentence> encode_sentences(const std::vector<std::vector<std::string>>& sentences, const Vocabulary& vocab) {
    std::vector<Sentence> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) {
        Sentence ids;
        ids.reserve(s.size());
        for (const auto& token : s) ids.push_back(vocab.id(token));
        out.push_back(std::move(ids));
    }
    return out;
}

double glove_loss(const CooccurrenceTable& table, const RowMatrix& main, const RowMatrix& context,
                  std::span<const double> main_bias, std::span<const double> context_bias, const GloveConfig& config) {
    if (table.entries.empty()) return 0.0;
    double total = 0.0;
    for (const auto& e : table.entries) {
        const double diff = main.row(e.target).dot(context.row(e.context)) + main_bias[e.target] +
                            context_bias[e.context] - std::log(e.count);
        total += 0.5 * weighting(e.count, config) * diff * diff;
    }
    return total / static_cast<double>(table.entries.size());
}

GloveResult train_glove(const CooccurrenceTable& table, std::size_t vocab_size, const GloveConfig& config) {
    config.validate();
    if (table.entries.empty()) throw Error("cannot train an embedding on an empty co-occurrence table");
    for (const auto& e : table.entries) {
        if (e.target >= vocab_size || e.context >= vocab_size) {
            throw Error("co-occurrence entry references token id beyond the vocabulary");
        }
    }
    const auto rows = static_cast<Eigen::Index>(vocab_size);
    const auto dims = static_cast<Eigen::Index>(config.dims);

    Rng rng(config.seed);
    RowMatrix main(rows, dims);
    RowMatrix context(rows, dims);
    std::vector<double> main_bias(vocab_size);
    std::vector<double> context_bias(vocab_size);
    const double scale = 1.0 / static_cast<double>(config.dims);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index d = 0; d < dims; ++d) main(r, d) = (rng.uniform01() - 0.5) * scale;
        main_bias[static_cast<std::size_t>(r)] = (rng.uniform01() - 0.5) * scale;
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index d = 0; d < dims; ++d) context(r, d) = (rng.uniform01() - 0.5) * scale;
        context_bias[static_cast<std::size_t>(r)] = (rng.uniform01() - 0.5) * scale;
    }
    // Reserved rows carry no signal.
    for (Eigen::Index r = 0; r < std::min<Eigen::Index>(2, rows); ++r) {
        main.row(r).setZero();
        context.row(r).setZero();
        main_bias[static_cast<std::size_t>(r)] = 0.0;
        context_bias[static_cast<std::size_t>(r)] = 0.0;
    }

    RowMatrix main_sq = RowMatrix::Ones(rows, dims);
    RowMatrix context_sq = RowMatrix::Ones(rows, dims);
    std::vector<double> main_bias_sq(vocab_size, 1.0);
    std::vector<double> context_bias_sq(vocab_size, 1.0);

    std::vector<std::size_t> order(table.entries.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    GloveResult result;
    for (std::size_t iter = 0; iter < config.iterations; ++iter) {
        rng.shuffle(std::span<std::size_t>(order));
        double cost = 0.0;
        std::size_t used = 0;
        for (const std::size_t idx : order) {
            const auto& e = table.entries[idx];
            if (e.target < 2 || e.context < 2) continue;
            auto w = main.row(e.target);
            auto wc = context.row(e.context);
            const double diff = w.dot(wc) + main_bias[e.target] + context_bias[e.context] - std::log(e.count);
            double fdiff = weighting(e.count, config) * diff;
            cost += 0.5 * fdiff * diff;
            ++used;
            fdiff *= config.learning_rate;
            auto w_sq = main_sq.row(e.target);
            auto wc_sq = context_sq.row(e.context);
            for (Eigen::Index d = 0; d < dims; ++d) {
                const double g_main = fdiff * wc(d);
                const double g_context = fdiff * w(d);
                w(d) -= g_main / std::sqrt(w_sq(d));
                wc(d) -= g_context / std::sqrt(wc_sq(d));
                w_sq(d) += g_main * g_main;
                wc_sq(d) += g_context * g_context;
            }
            main_bias[e.target] -= fdiff / std::sqrt(main_bias_sq[e.target]);
            context_bias[e.context] -= fdiff / std::sqrt(context_bias_sq[e.context]);
            main_bias_sq[e.target] += fdiff * fdiff;
            context_bias_sq[e.context] += fdiff * fdiff;
        }
        const double mean = used > 0 ? cost / static_cast<double>(used) : 0.0;
        if (!std::isfinite(mean)) {
            throw Error("glove training diverged: non-finite loss at iteration " + std::to_string(iter + 1));
        }
        result.iteration_loss.push_back(mean);
    }

    result.embedding.values = main + context;
    for (Eigen::Index r = 0; r < std::min<Eigen::Index>(2, rows); ++r) result.embedding.values.row(r).setZero();
    if (!result.embedding.values.allFinite()) throw Error("glove training produced non-finite vectors");
    return result;
}

EmbeddingMatrix load_embedding_text(std::istream& in, const Vocabulary& vocab, std::size_t dims) {
    EmbeddingMatrix out;
    out.values = RowMatrix::Zero(static_cast<Eigen::Index>(vocab.size()), static_cast<Eigen::Index>(dims));
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(' ') == std::string::npos) continue;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        while (p < end && *p == ' ') ++p;
        const char* token_end = p;
        while (token_end < end && *token_end != ' ') ++token_end;
        std::string token(p, token_end);
        if (!seen.insert(token).second) {
            throw Error("embedding line " + std::to_string(line_no) + ": duplicate token '" + token + "'");
        }
        std::vector<double> row;
        row.reserve(dims);
        p = token_end;
        while (p < end) {
            while (p < end && *p == ' ') ++p;
            if (p == end) break;
            double v = 0.0;
            const auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc{} || (next < end && *next != ' ')) {
                throw Error("embedding line " + std::to_string(line_no) + ": malformed number");
            }
            row.push_back(v);
            p = next;
        }
        if (row.size() != dims) {
            throw Error("embedding line " + std::to_string(line_no) + ": expected " + std::to_string(dims) +
                        " values, found " + std::to_string(row.size()));
        }
        if (!vocab.contains(token)) continue;
        const TokenId id = vocab.id(token);
        if (id < 2) continue;
        for (std::size_t d = 0; d < dims; ++d) out.values(id, static_cast<Eigen::Index>(d)) = row[d];
    }
    return out;
}

void save_embedding_text(std::ostream& out, const EmbeddingMatrix& embedding, const Vocabulary& vocab) {
    if (embedding.vocab_size() != vocab.size()) throw Error("embedding rows do not match the vocabulary size");
    char buffer[64];
    for (std::size_t id = 2; id < vocab.size(); ++id) {
        out << vocab.token(static_cast<TokenId>(id));
        for (Eigen::Index d = 0; d < embedding.values.cols(); ++d) {
            const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, embedding.values(static_cast<Eigen::Index>(id), d));
            out << ' ';
            out.write(buffer, ptr - buffer);
        }
        out << '\n';
    }
}

EmbeddingMatrix random_embedding(std::size_t vocab_size, std::size_t dims, std::uint64_t seed, double scale) {
    Rng rng(seed);
    EmbeddingMatrix out;
    out.values = RowMatrix::Zero(static_cast<Eigen::Index>(vocab_size), static_cast<Eigen::Index>(dims));
    for (Eigen::Index r = 2; r < out.values.rows(); ++r) {
        for (Eigen::Index d = 0; d < out.values.cols(); ++d) out.values(r, d) = rng.uniform(-scale, scale);
    }
    return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error("cosine similarity of vectors with different lengths");
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingMatrix& embedding, const Vocabulary& vocab,
                                        std::string_view token, std::size_t k) {
    if (embedding.vocab_size() != vocab.size()) throw Error("embedding rows do not match the vocabulary size");
    if (!vocab.contains(token)) throw Error("token '" + std::string(token) + "' is not in the vocabulary");
    const TokenId query = vocab.id(token);
    const auto q = embedding.values.row(query);
    const double q_norm = q.norm();
    if (q_norm == 0.0) throw Error("token '" + std::string(token) + "' has a zero vector");

    std::vector<Neighbor> all;
    for (std::size_t id = 2; id < vocab.size(); ++id) {
        if (id == query) continue;
        const auto row = embedding.values.row(static_cast<Eigen::Index>(id));
        const double norm = row.norm();
        if (norm == 0.0) continue;
        all.push_back({vocab.token(static_cast<TokenId>(id)), static_cast<TokenId>(id), row.dot(q) / (norm * q_norm)});
    }
    const auto better = [](const Neighbor& a, const Neighbor& b) {
        return a.similarity != b.similarity ? a.similarity > b.similarity : a.id < b.id;
    };
    const std::size_t keep = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), better);
    all.resize(keep);
    return all;
}

}  // namespace codecat
