#pragma once

#include "codecat/baseline.hpp"
#include "codecat/embedding.hpp"
#include "codecat/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace codecat {

struct SplitConfig {
    std::size_t holdout_per_category = 10;
    std::size_t per_category = 500;
    std::uint64_t seed = 1;
};

struct BaselineConfig {
    std::size_t vocab_size = 1800;
    LogRegConfig logreg;
};

struct SynthConfig {
    std::size_t categories = 3;
    std::size_t projects_per_category = 40;
    std::size_t functions_per_project = 20;
    double noise = 0.2;          // chance a planted code term comes from another category
    double phrase_rate = 0.5;    // share of functions carrying their category's phrase
    std::size_t code_terms = 30; // planted code vocabulary per category
    std::size_t description_terms = 12;
    std::uint64_t seed = 1;
};

// Every tunable of the pipeline. Serialised as a plain "key = value" document
// (one per line, '#' comments); keys not present keep their defaults.
struct RunConfig {
    SplitConfig split;
    GloveConfig glove;
    ClassifierConfig nn;
    BaselineConfig lr;
    SynthConfig synth;

    static RunConfig parse(std::string_view text);
    static RunConfig load(const std::string& path);
    std::string to_text() const;
    nlohmann::ordered_json to_json() const;

    // The global --seed flag: reseeds every stage.
    void set_seed(std::uint64_t seed);
};

}  // namespace codecat
