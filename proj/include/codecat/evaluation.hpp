#pragma once

#include "codecat/prediction.hpp"
#include "codecat/repr.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace codecat {

struct ProjectVerdict {
    std::string project;
    std::vector<Prediction> function_predictions;
    std::size_t winner = 0;
    std::vector<std::size_t> tally;  // votes per category
};

// Plurality vote, one function one vote. Ties go to the highest summed
// probability across the tied categories, then to the lowest index.
ProjectVerdict vote(std::span<const Prediction> predictions);

struct CategoryMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct MetricsReport {
    std::vector<std::string> categories;
    std::vector<CategoryMetrics> per_category;
    CategoryMetrics weighted;  // support = total
    double accuracy = 0.0;

    nlohmann::ordered_json to_json() const;
    // Aligned table in the familiar classification-report layout.
    std::string to_text(int digits = 3) const;
};

// Zero denominators yield 0; weighted averages use gold supports.
MetricsReport classification_report(std::span<const std::string> gold, std::span<const std::string> predicted,
                                     const std::vector<std::string>& categories);

// Anything that labels one function representation.
class FunctionClassifier {
public:
    virtual ~FunctionClassifier() = default;
    virtual const std::vector<std::string>& categories() const = 0;
    virtual Prediction predict(const std::vector<std::string>& tokens) const = 0;
};

struct ProjectEvaluation {
    MetricsReport report;
    std::vector<ProjectVerdict> verdicts;  // sorted by project
    std::vector<std::string> gold;
};

// Encodes every holdout function in `variant`, predicts, votes per project and
// scores the project labels. Predictions run concurrently.
ProjectEvaluation evaluate_project_level(const FunctionClassifier& classifier,
                                         const std::vector<DatasetRecord>& holdout, Variant variant);

// One JSON object per project: {"project","gold","predicted","tally":{...},"functions":[...]}.
void write_verdicts(std::ostream& out, const ProjectEvaluation& evaluation, const std::vector<std::string>& categories);

}  // namespace codecat
