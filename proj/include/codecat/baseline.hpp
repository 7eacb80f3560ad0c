#pragma once

#include "codecat/prediction.hpp"
#include "codecat/repr.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace codecat {

// The `size` most frequent training tokens; ties go to the lexicographically
// smaller token.
class BowVocabulary {
public:
    BowVocabulary() = default;
    explicit BowVocabulary(std::vector<std::string> terms);

    static BowVocabulary from_counts(const std::unordered_map<std::string, std::size_t>& counts, std::size_t size);
    static BowVocabulary build(std::span<const std::vector<std::string>> training_tokens, std::size_t size = 1800);

    std::size_t size() const { return terms_.size(); }
    const std::vector<std::string>& terms() const { return terms_; }
    // -1 if absent.
    std::ptrdiff_t index(const std::string& term) const;

private:
    std::vector<std::string> terms_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct SparseCounts {
    std::size_t dim = 0;
    std::vector<std::pair<std::uint32_t, double>> entries;  // sorted by index

    std::vector<double> dense() const;
};

// Raw term counts; out-of-vocabulary tokens contribute nothing.
SparseCounts build_bow_features(std::span<const std::string> tokens, const BowVocabulary& vocab);

struct LinearModel {
    std::size_t features = 0;
    std::size_t classes = 0;
    std::vector<double> weights;  // features x classes, row-major
    std::vector<double> bias;     // classes

    static LinearModel zeros(std::size_t features, std::size_t classes);
    bool operator==(const LinearModel&) const = default;
};

struct LogRegConfig {
    double l2_lambda = 1e-4;
    double learning_rate = 0.1;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;  // 0 means full batch
    std::uint64_t seed = 1;
};

// Multinomial logistic regression: mean cross-entropy + (l2/2)|W|^2 by
// mini-batch gradient descent over a seeded shuffle.
LinearModel train_logreg(std::span<const SparseCounts> features, std::span<const std::size_t> labels,
                         std::size_t num_classes, const LogRegConfig& config,
                         std::vector<double>* epoch_loss = nullptr);

double logreg_loss(const LinearModel& model, std::span<const SparseCounts> features,
                   std::span<const std::size_t> labels, double l2_lambda);

Prediction predict_logreg(const LinearModel& model, const SparseCounts& features);
Prediction predict_logreg(const LinearModel& model, std::span<const double> dense_features);

}  // namespace codecat
