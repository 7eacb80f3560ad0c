#pragma once

#include "codecat/corpus.hpp"
#include "codecat/run_config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace codecat {

struct SynthFile {
    std::string name;
    std::string text;
};

struct SynthProject {
    ProjectMeta meta;
    std::vector<SynthFile> files;
};

// A generated labeled corpus of C-like sources. Each category owns a set of
// code terms, description words and one four-token phrase; function bodies
// draw their terms from the own category except with probability `noise`.
struct SynthCorpus {
    std::vector<std::string> categories;
    std::vector<std::vector<std::string>> code_terms;
    std::vector<std::vector<std::string>> description_terms;
    std::vector<std::vector<std::string>> phrases;
    std::vector<SynthProject> projects;  // sorted by name
};

SynthCorpus generate_corpus(const SynthConfig& config);

// Writes <root>/src/<project>/partNN.c and <root>/labels.jsonl.
void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& root);

std::map<std::string, ProjectMeta> corpus_metadata(const SynthCorpus& corpus);

// Extracts the generated sources without touching the file system.
std::vector<Project> corpus_projects(const SynthCorpus& corpus);

}  // namespace codecat
