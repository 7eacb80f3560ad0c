#pragma once

// Independent brute-force implementations the library is checked against.
// Deliberately naive: no shared code with src/.

#include "codecat/embedding.hpp"
#include "codecat/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

// Every ordered pair (later, earlier) inside a sentence within `window`.
inline std::map<std::pair<codecat::TokenId, codecat::TokenId>, double> cooccurrence(
    const std::vector<std::vector<codecat::TokenId>>& sentences, std::size_t window, bool weighted = true) {
    std::map<std::pair<codecat::TokenId, codecat::TokenId>, double> counts;
    for (const auto& s : sentences) {
        for (std::size_t later = 0; later < s.size(); ++later) {
            for (std::size_t earlier = 0; earlier < later; ++earlier) {
                const std::size_t d = later - earlier;
                if (d > window) continue;
                counts[{s[later], s[earlier]}] += weighted ? 1.0 / static_cast<double>(d) : 1.0;
            }
        }
    }
    return counts;
}

// Closed form of the table mass: sum over positions t of H(min(window, t)).
inline double cooccurrence_mass(const std::vector<std::vector<codecat::TokenId>>& sentences, std::size_t window) {
    double total = 0.0;
    for (const auto& s : sentences) {
        for (std::size_t t = 0; t < s.size(); ++t) {
            const std::size_t reach = std::min(window, t);
            for (std::size_t j = 1; j <= reach; ++j) total += 1.0 / static_cast<double>(j);
        }
    }
    return total;
}

struct Verdict {
    std::size_t winner = 0;
    std::vector<std::size_t> tally;
};

// Tally, then among the tied categories the larger probability sum, then the
// lower index.
inline Verdict vote(const std::vector<codecat::Prediction>& predictions) {
    const std::size_t classes = predictions.front().probabilities.size();
    Verdict v;
    v.tally.assign(classes, 0);
    for (const auto& p : predictions) {
        v.tally[p.predicted] += 1;
    }
    std::size_t top = 0;
    for (const auto t : v.tally) top = std::max(top, t);
    std::vector<std::size_t> tied;
    for (std::size_t k = 0; k < classes; ++k) {
        if (v.tally[k] == top) tied.push_back(k);
    }
    if (tied.size() == 1) {
        v.winner = tied[0];
        return v;
    }
    // Sum in a canonical order so the oracle is order-independent as well.
    auto sorted = predictions;
    std::sort(sorted.begin(), sorted.end(),
              [](const codecat::Prediction& a, const codecat::Prediction& b) { return a.probabilities < b.probabilities; });
    std::vector<double> mass(classes, 0.0);
    for (const auto& p : sorted) {
        for (std::size_t k = 0; k < classes; ++k) mass[k] += p.probabilities[k];
    }
    v.winner = tied[0];
    for (const auto k : tied) {
        if (mass[k] > mass[v.winner]) v.winner = k;
    }
    return v;
}

struct Scores {
    std::vector<double> precision, recall, f1;
    std::vector<std::size_t> support;
    double weighted_precision = 0, weighted_recall = 0, weighted_f1 = 0, accuracy = 0;
};

// Confusion matrix first, metrics from its rows and columns.
inline Scores report(const std::vector<std::size_t>& gold, const std::vector<std::size_t>& predicted,
                     std::size_t classes) {
    std::vector<std::vector<std::size_t>> confusion(classes, std::vector<std::size_t>(classes, 0));
    for (std::size_t i = 0; i < gold.size(); ++i) ++confusion[gold[i]][predicted[i]];
    Scores s;
    std::size_t diagonal = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        std::size_t row = 0, col = 0;
        for (std::size_t k = 0; k < classes; ++k) {
            row += confusion[c][k];
            col += confusion[k][c];
        }
        const double tp = static_cast<double>(confusion[c][c]);
        diagonal += confusion[c][c];
        const double p = col ? tp / static_cast<double>(col) : 0.0;
        const double r = row ? tp / static_cast<double>(row) : 0.0;
        s.precision.push_back(p);
        s.recall.push_back(r);
        s.f1.push_back(p + r > 0 ? 2 * p * r / (p + r) : 0.0);
        s.support.push_back(row);
    }
    const double n = static_cast<double>(gold.size());
    for (std::size_t c = 0; c < classes && n > 0; ++c) {
        const double w = static_cast<double>(s.support[c]) / n;
        s.weighted_precision += w * s.precision[c];
        s.weighted_recall += w * s.recall[c];
        s.weighted_f1 += w * s.f1[c];
    }
    s.accuracy = n > 0 ? static_cast<double>(diagonal) / n : 0.0;
    return s;
}

// Central-difference derivative of a scalar function of one variable.
template <typename F>
double central_difference(F&& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracle
