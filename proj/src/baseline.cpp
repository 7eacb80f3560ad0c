#include "codecat/baseline.hpp"
#include "codecat/error.hpp"
#include "codecat/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace codecat {

namespace {

std::vector<double> scores(const LinearModel& model, const SparseCounts& x) {
    std::vector<double> s(model.bias);
    for (const auto& [j, v] : x.entries) {
        const double* row = model.weights.data() + static_cast<std::size_t>(j) * model.classes;
        for (std::size_t k = 0; k < model.classes; ++k) s[k] += v * row[k];
    }
    return s;
}

void softmax_in_place(std::vector<double>& s) {
    const double top = *std::max_element(s.begin(), s.end());
    double total = 0.0;
    for (auto& v : s) {
        v = std::exp(v - top);
        total += v;
    }
    for (auto& v : s) v /= total;
}

void check_dim(const LinearModel& model, const SparseCounts& x) {
    if (x.dim != model.features) {
        throw Error("feature vector has dimension " + std::to_string(x.dim) + "; model expects " +
                    std::to_string(model.features));
    }
}

}  // namespace

BowVocabulary::BowVocabulary(std::vector<std::string> terms) : terms_(std::move(terms)) {
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        if (!index_.emplace(terms_[i], i).second) throw Error("duplicate bag-of-words term '" + terms_[i] + "'");
    }
}

BowVocabulary BowVocabulary::from_counts(const std::unordered_map<std::string, std::size_t>& counts, std::size_t size) {
    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (ranked.size() > size) ranked.resize(size);
    std::vector<std::string> terms;
    terms.reserve(ranked.size());
    for (auto& [term, n] : ranked) terms.push_back(std::move(term));
    return BowVocabulary(std::move(terms));
}

BowVocabulary BowVocabulary::build(std::span<const std::vector<std::string>> training_tokens, std::size_t size) {
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& doc : training_tokens) {
        for (const auto& t : doc) ++counts[t];
    }
    return from_counts(counts, size);
}

std::ptrdiff_t BowVocabulary::index(const std::string& term) const {
    const auto it = index_.find(term);
    return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

std::vector<double> SparseCounts::dense() const {
    std::vector<double> out(dim, 0.0);
    for (const auto& [j, v] : entries) out[j] = v;
    return out;
}

SparseCounts build_bow_features(std::span<const std::string> tokens, const BowVocabulary& vocab) {
    std::map<std::uint32_t, double> counts;
    for (const auto& t : tokens) {
        const auto j = vocab.index(t);
        if (j >= 0) counts[static_cast<std::uint32_t>(j)] += 1.0;
    }
    SparseCounts out;
    out.dim = vocab.size();
    out.entries.assign(counts.begin(), counts.end());
    return out;
}

LinearModel LinearModel::zeros(std::size_t features, std::size_t classes) {
    return LinearModel{features, classes, std::vector<double>(features * classes, 0.0), std::vector<double>(classes, 0.0)};
}

double logreg_loss(const LinearModel& model, std::span<const SparseCounts> features,
                   std::span<const std::size_t> labels, double l2_lambda) {
    double total = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) {
        auto s = scores(model, features[i]);
        const double top = *std::max_element(s.begin(), s.end());
        double z = 0.0;
        for (const double v : s) z += std::exp(v - top);
        total += top + std::log(z) - s[labels[i]];
    }
    double reg = 0.0;
    for (const double w : model.weights) reg += w * w;
    return total / static_cast<double>(features.size()) + 0.5 * l2_lambda * reg;
}

LinearModel train_logreg(std::span<const SparseCounts> features, std::span<const std::size_t> labels,
                         std::size_t num_classes, const LogRegConfig& config, std::vector<double>* epoch_loss) {
    if (features.size() != labels.size()) throw Error("features and labels differ in length");
    if (features.empty()) throw Error("no training data for logistic regression");
    if (num_classes < 2) throw Error("logistic regression needs at least two categories");
    std::vector<bool> seen(num_classes, false);
    for (const auto y : labels) {
        if (y >= num_classes) throw Error("label outside the category range");
        seen[y] = true;
    }
    if (std::count(seen.begin(), seen.end(), true) < 2) {
        throw Error("logistic regression needs at least two categories present in the training data");
    }
    const std::size_t dim = features.front().dim;
    for (const auto& x : features) {
        if (x.dim != dim) throw Error("inconsistent feature dimensions");
    }

    LinearModel model = LinearModel::zeros(dim, num_classes);
    Rng rng(config.seed);
    std::vector<std::size_t> order(features.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch = config.batch_size == 0 ? features.size() : config.batch_size;

    std::vector<double> grad_w(model.weights.size());
    std::vector<double> grad_b(num_classes);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (batch < features.size()) rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            std::fill(grad_w.begin(), grad_w.end(), 0.0);
            std::fill(grad_b.begin(), grad_b.end(), 0.0);
            for (std::size_t n = start; n < end; ++n) {
                const auto& x = features[order[n]];
                auto p = scores(model, x);
                softmax_in_place(p);
                p[labels[order[n]]] -= 1.0;
                for (const auto& [j, v] : x.entries) {
                    double* row = grad_w.data() + static_cast<std::size_t>(j) * num_classes;
                    for (std::size_t k = 0; k < num_classes; ++k) row[k] += v * p[k];
                }
                for (std::size_t k = 0; k < num_classes; ++k) grad_b[k] += p[k];
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            for (std::size_t i = 0; i < model.weights.size(); ++i) {
                model.weights[i] -= config.learning_rate * (grad_w[i] * inv + config.l2_lambda * model.weights[i]);
            }
            for (std::size_t k = 0; k < num_classes; ++k) model.bias[k] -= config.learning_rate * grad_b[k] * inv;
        }
        const bool finite = std::all_of(model.weights.begin(), model.weights.end(), [](double w) { return std::isfinite(w); });
        if (!finite) throw Error("logistic regression diverged at epoch " + std::to_string(epoch + 1));
        if (epoch_loss != nullptr) epoch_loss->push_back(logreg_loss(model, features, labels, config.l2_lambda));
    }
    return model;
}

Prediction predict_logreg(const LinearModel& model, const SparseCounts& features) {
    check_dim(model, features);
    auto s = scores(model, features);
    softmax_in_place(s);
    return Prediction::from_probabilities(std::move(s));
}

Prediction predict_logreg(const LinearModel& model, std::span<const double> dense_features) {
    if (dense_features.size() != model.features) {
        throw Error("feature vector has dimension " + std::to_string(dense_features.size()) + "; model expects " +
                    std::to_string(model.features));
    }
    SparseCounts x;
    x.dim = dense_features.size();
    for (std::size_t j = 0; j < dense_features.size(); ++j) {
        if (dense_features[j] != 0.0) x.entries.emplace_back(static_cast<std::uint32_t>(j), dense_features[j]);
    }
    return predict_logreg(model, x);
}

}  // namespace codecat
