#include "codecat/evaluation.hpp"
#include "codecat/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <ostream>

namespace codecat {

ProjectVerdict vote(std::span<const Prediction> predictions) {
    if (predictions.empty()) throw Error("cannot vote over an empty prediction list");
    const std::size_t classes = predictions.front().probabilities.size();
    if (classes == 0) throw Error("prediction without probabilities");

    ProjectVerdict verdict;
    verdict.tally.assign(classes, 0);
    std::vector<double> mass(classes, 0.0);
    for (const auto& p : predictions) {
        if (p.probabilities.size() != classes || p.predicted >= classes) {
            throw Error("predictions disagree on the number of categories");
        }
        ++verdict.tally[p.predicted];
    }
    // Probability sums in a canonical order so the verdict depends only on
    // the multiset of predictions.
    std::vector<const Prediction*> sorted;
    for (const auto& p : predictions) sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(), [](const Prediction* a, const Prediction* b) {
        return a->probabilities < b->probabilities;
    });
    for (const Prediction* p : sorted) {
        for (std::size_t k = 0; k < classes; ++k) mass[k] += p->probabilities[k];
    }

    const std::size_t top = *std::max_element(verdict.tally.begin(), verdict.tally.end());
    std::size_t winner = classes;
    for (std::size_t k = 0; k < classes; ++k) {
        if (verdict.tally[k] != top) continue;
        if (winner == classes || mass[k] > mass[winner]) winner = k;
    }
    verdict.winner = winner;
    verdict.function_predictions.assign(predictions.begin(), predictions.end());
    return verdict;
}

MetricsReport classification_report(std::span<const std::string> gold, std::span<const std::string> predicted,
                                     const std::vector<std::string>& categories) {
    if (gold.size() != predicted.size()) throw Error("gold and predicted label lists differ in length");
    const std::size_t n = categories.size();
    const auto index_of = [&](const std::string& label) {
        const auto it = std::find(categories.begin(), categories.end(), label);
        if (it == categories.end()) throw Error("label '" + label + "' is not in the category set");
        return static_cast<std::size_t>(it - categories.begin());
    };
    std::vector<std::size_t> tp(n, 0), fp(n, 0), fn(n, 0), support(n, 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const std::size_t g = index_of(gold[i]);
        const std::size_t p = index_of(predicted[i]);
        ++support[g];
        if (g == p) {
            ++tp[g];
            ++correct;
        } else {
            ++fp[p];
            ++fn[g];
        }
    }

    MetricsReport report;
    report.categories = categories;
    report.per_category.resize(n);
    const auto ratio = [](std::size_t num, std::size_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    const std::size_t total = gold.size();
    for (std::size_t c = 0; c < n; ++c) {
        auto& m = report.per_category[c];
        m.precision = ratio(tp[c], tp[c] + fp[c]);
        m.recall = ratio(tp[c], tp[c] + fn[c]);
        m.f1 = (m.precision + m.recall) == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
        m.support = support[c];
        if (total > 0) {
            const double w = static_cast<double>(support[c]) / static_cast<double>(total);
            report.weighted.precision += w * m.precision;
            report.weighted.recall += w * m.recall;
            report.weighted.f1 += w * m.f1;
        }
    }
    report.weighted.support = total;
    report.accuracy = ratio(correct, total);
    return report;
}

nlohmann::ordered_json MetricsReport::to_json() const {
    nlohmann::ordered_json j;
    auto& per = j["per_category"];
    per = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < categories.size(); ++c) {
        const auto& m = per_category[c];
        per[categories[c]] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
    }
    j["weighted"] = {{"precision", weighted.precision},
                     {"recall", weighted.recall},
                     {"f1", weighted.f1},
                     {"support", weighted.support}};
    j["accuracy"] = accuracy;
    return j;
}

std::string MetricsReport::to_text(int digits) const {
    std::size_t width = 12;  // "weighted avg"
    for (const auto& c : categories) width = std::max(width, c.size());
    std::string out = fmt::format("{:>{}}  {:>9}  {:>9}  {:>9}  {:>7}\n\n", "", width, "precision", "recall",
                                  "f1-score", "support");
    const auto row = [&](const std::string& label, const CategoryMetrics& m) {
        return fmt::format("{:>{}}  {:>9.{}f}  {:>9.{}f}  {:>9.{}f}  {:>7}\n", label, width, m.precision, digits,
                           m.recall, digits, m.f1, digits, m.support);
    };
    for (std::size_t c = 0; c < categories.size(); ++c) out += row(categories[c], per_category[c]);
    out += "\n";
    out += row("weighted avg", weighted);
    return out;
}

ProjectEvaluation evaluate_project_level(const FunctionClassifier& classifier,
                                         const std::vector<DatasetRecord>& holdout, Variant variant) {
    if (holdout.empty()) throw Error("empty holdout set");
    const auto& categories = classifier.categories();
    const auto groups = group_by_project(holdout);

    std::vector<const DatasetRecord*> flat;
    std::vector<std::size_t> group_start;
    for (const auto& g : groups) {
        group_start.push_back(flat.size());
        flat.insert(flat.end(), g.records.begin(), g.records.end());
    }
    group_start.push_back(flat.size());

    std::vector<Prediction> predictions(flat.size());
    std::vector<std::string> errors(flat.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(flat.size()); ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            predictions[k] = classifier.predict(flat[k]->representation(variant));
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    }
    for (const auto& e : errors) {
        if (!e.empty()) throw Error(e);
    }

    ProjectEvaluation eval;
    std::vector<std::string> predicted;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const std::span<const Prediction> slice(predictions.data() + group_start[g], group_start[g + 1] - group_start[g]);
        auto verdict = vote(slice);
        verdict.project = groups[g].project;
        eval.gold.push_back(groups[g].category);
        predicted.push_back(categories.at(verdict.winner));
        eval.verdicts.push_back(std::move(verdict));
    }
    eval.report = classification_report(eval.gold, predicted, categories);
    return eval;
}

void write_verdicts(std::ostream& out, const ProjectEvaluation& evaluation, const std::vector<std::string>& categories) {
    for (std::size_t i = 0; i < evaluation.verdicts.size(); ++i) {
        const auto& v = evaluation.verdicts[i];
        nlohmann::ordered_json obj;
        obj["project"] = v.project;
        obj["gold"] = evaluation.gold[i];
        obj["predicted"] = categories.at(v.winner);
        auto& tally = obj["tally"];
        tally = nlohmann::ordered_json::object();
        for (std::size_t k = 0; k < categories.size(); ++k) tally[categories[k]] = v.tally[k];
        auto& functions = obj["functions"];
        functions = nlohmann::ordered_json::array();
        for (const auto& p : v.function_predictions) functions.push_back(categories.at(p.predicted));
        out << obj.dump() << '\n';
    }
}

}  // namespace codecat
