#pragma once

#include "codecat/baseline.hpp"
#include "codecat/evaluation.hpp"
#include "codecat/model.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace codecat {

// Container layout:
//   8 bytes   magic "CODECAT1"
//   8 bytes   header length N, little-endian uint64
//   N bytes   UTF-8 JSON header; "arrays" lists {"name","shape"} in storage order
//   ...       each array as little-endian float64, in the listed order
struct NamedArray {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> values;
};

struct Container {
    nlohmann::ordered_json header = nlohmann::ordered_json::object();
    std::vector<NamedArray> arrays;

    const NamedArray& array(const std::string& name) const;
};

void write_container(std::ostream& out, const Container& container);
Container read_container(std::istream& in);

// Trained classifier plus everything needed to encode new functions.
struct NeuralCheckpoint {
    ClassifierModel model;
    Vocabulary vocab;
    std::vector<std::string> categories;
    nlohmann::ordered_json provenance = nlohmann::ordered_json::object();  // run config, seeds
};

struct BaselineCheckpoint {
    LinearModel model;
    BowVocabulary vocab;
    std::vector<std::string> categories;
    nlohmann::ordered_json provenance = nlohmann::ordered_json::object();
};

Container to_container(const NeuralCheckpoint& checkpoint);
Container to_container(const BaselineCheckpoint& checkpoint);
NeuralCheckpoint neural_from_container(const Container& container);
BaselineCheckpoint baseline_from_container(const Container& container);

class NeuralClassifier final : public FunctionClassifier {
public:
    explicit NeuralClassifier(NeuralCheckpoint checkpoint) : checkpoint_(std::move(checkpoint)) {}
    const std::vector<std::string>& categories() const override { return checkpoint_.categories; }
    Prediction predict(const std::vector<std::string>& tokens) const override;
    const NeuralCheckpoint& checkpoint() const { return checkpoint_; }

private:
    NeuralCheckpoint checkpoint_;
};

class BaselineClassifier final : public FunctionClassifier {
public:
    explicit BaselineClassifier(BaselineCheckpoint checkpoint) : checkpoint_(std::move(checkpoint)) {}
    const std::vector<std::string>& categories() const override { return checkpoint_.categories; }
    Prediction predict(const std::vector<std::string>& tokens) const override;

private:
    BaselineCheckpoint checkpoint_;
};

// Dispatches on the header "kind" ("nn" or "lr").
std::unique_ptr<FunctionClassifier> load_classifier(const std::filesystem::path& path);

}  // namespace codecat
