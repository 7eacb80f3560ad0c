#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace codecat {

struct FunctionRecord {
    std::string project_name;
    std::string function_name;
    std::string body;  // signature through closing brace, comments kept

    bool operator==(const FunctionRecord&) const = default;
};

struct Project {
    std::string name;  // lowercase
    std::optional<std::string> description;
    std::string category;
    std::vector<FunctionRecord> functions;
};

struct ExtractionResult {
    std::vector<FunctionRecord> functions;
    std::vector<std::string> diagnostics;
};

// Heuristic top-level function extraction: an identifier, a parenthesized
// parameter list and a brace-balanced block. Braces inside comments, string,
// char and raw-string literals and preprocessor lines are not counted.
// Namespace and extern "C" blocks are entered; class/struct/enum bodies and
// brace initializers are skipped. Throws Error on binary input.
ExtractionResult extract_functions(std::string_view source, std::string_view project_name = {});

// True if `text` has balanced braces once literals, comments and preprocessor
// lines are ignored. Used to re-validate extracted bodies.
bool braces_balanced(std::string_view text);

bool is_cpp_source_path(const std::filesystem::path& path);

struct ProjectMeta {
    std::string name;
    std::string category;
    std::optional<std::string> description;
};

// One JSON object per line: {"name", "category", "description"?}. Names are
// lowercased. A repeated name keeps its first entry.
std::map<std::string, ProjectMeta> read_project_metadata(const std::filesystem::path& path);
std::map<std::string, ProjectMeta> parse_project_metadata(std::string_view jsonl);

struct LoadResult {
    std::vector<Project> projects;  // sorted by name
    std::vector<std::string> warnings;
};

// Each subdirectory of `root` is one project, matched case-insensitively
// against the label map. Projects without any extracted function are dropped.
// Files are extracted concurrently; output order is deterministic.
LoadResult load_repository(const std::filesystem::path& root,
                           const std::map<std::string, std::string>& labels,
                           const std::map<std::string, std::string>& descriptions);

LoadResult load_repository(const std::filesystem::path& root,
                           const std::map<std::string, ProjectMeta>& metadata);

struct LabeledFunction {
    FunctionRecord function;
    std::string category;
    std::optional<std::string> description;
};

struct DatasetSplit {
    std::vector<LabeledFunction> train;
    std::vector<Project> holdout_projects;
    std::uint64_t seed = 0;
    std::size_t per_category_count = 0;
};

// Withholds `holdout_per_category` whole projects per category and undersamples
// the remaining functions to exactly `per_category_count` per category.
//
// Procedure (reproducible from the Rng rules): categories in lexicographic
// order, projects sorted by name; one Rng(seed) is shared across categories.
// Per category: shuffle the projects, take the first holdout_per_category as
// holdout; pool the remaining projects' functions in (project, position) order,
// shuffle the pool, keep the first per_category_count and restore pool order.
DatasetSplit make_splits(const std::vector<Project>& projects,
                         std::size_t holdout_per_category,
                         std::size_t per_category_count,
                         std::uint64_t seed);

// The selection behind make_splits, over project summaries. Returns holdout
// project indices and the chosen (project index, function position) training
// pairs, grouped by category.
struct ProjectSummary {
    std::string name;
    std::string category;
    std::size_t function_count = 0;
};

struct SplitSelection {
    std::vector<std::size_t> holdout;  // sorted by project name
    std::vector<std::pair<std::size_t, std::size_t>> train;
};

SplitSelection select_split(const std::vector<ProjectSummary>& projects,
                            std::size_t holdout_per_category,
                            std::size_t per_category_count,
                            std::uint64_t seed);

}  // namespace codecat
