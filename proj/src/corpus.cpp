#include "codecat/corpus.hpp"
#include "codecat/error.hpp"
#include "codecat/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

namespace codecat {

namespace fs = std::filesystem;

namespace {

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

struct FileExtraction {
    std::vector<FunctionRecord> functions;
    std::vector<std::string> warnings;
};

FileExtraction extract_file(const fs::path& path, const std::string& project) {
    FileExtraction out;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        out.warnings.push_back("cannot read " + path.string() + ", skipped");
        return out;
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) {
        out.warnings.push_back("read error on " + path.string() + ", skipped");
        return out;
    }
    try {
        auto result = extract_functions(buffer.str(), project);
        out.functions = std::move(result.functions);
        for (auto& d : result.diagnostics) out.warnings.push_back(path.string() + ": " + d);
    } catch (const Error& e) {
        out.warnings.push_back(path.string() + ": " + e.what() + ", skipped");
    }
    return out;
}

}  // namespace

std::map<std::string, ProjectMeta> parse_project_metadata(std::string_view jsonl) {
    std::map<std::string, ProjectMeta> out;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error("metadata line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!obj.is_object() || !obj.contains("name") || !obj.contains("category") || !obj["name"].is_string() ||
            !obj["category"].is_string()) {
            throw Error("metadata line " + std::to_string(line_no) + ": expected {\"name\", \"category\"} strings");
        }
        ProjectMeta meta;
        meta.name = lowercase(obj["name"].get<std::string>());
        meta.category = obj["category"].get<std::string>();
        if (meta.name.empty()) throw Error("metadata line " + std::to_string(line_no) + ": empty project name");
        if (obj.contains("description") && obj["description"].is_string()) {
            meta.description = obj["description"].get<std::string>();
        }
        out.emplace(meta.name, std::move(meta));
    }
    return out;
}

std::map<std::string, ProjectMeta> read_project_metadata(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open metadata file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_project_metadata(buffer.str());
}

LoadResult load_repository(const fs::path& root, const std::map<std::string, ProjectMeta>& metadata) {
    LoadResult result;
    if (!fs::is_directory(root)) throw Error("repository root " + root.string() + " is not a directory");

    std::map<std::string, fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory()) dirs.emplace(lowercase(entry.path().filename().string()), entry.path());
    }

    struct Job {
        std::size_t project;
        fs::path file;
    };
    std::vector<Job> jobs;
    for (const auto& [name, meta] : metadata) {
        const auto dir = dirs.find(name);
        if (dir == dirs.end()) {
            result.warnings.push_back("project '" + name + "' is labeled but has no directory, skipped");
            continue;
        }
        Project project;
        project.name = name;
        project.category = meta.category;
        project.description = meta.description;
        std::vector<fs::path> files;
        std::error_code ec;
        for (fs::recursive_directory_iterator it(dir->second, fs::directory_options::skip_permission_denied, ec), end;
             it != end; it.increment(ec)) {
            if (ec) break;
            if (it->is_regular_file() && is_cpp_source_path(it->path())) files.push_back(it->path());
        }
        if (ec) result.warnings.push_back("error walking " + dir->second.string() + ": " + ec.message());
        std::sort(files.begin(), files.end());
        for (auto& f : files) jobs.push_back({result.projects.size(), std::move(f)});
        result.projects.push_back(std::move(project));
    }

    std::vector<FileExtraction> extracted(jobs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(jobs.size()); ++j) {
        const auto& job = jobs[static_cast<std::size_t>(j)];
        extracted[static_cast<std::size_t>(j)] = extract_file(job.file, result.projects[job.project].name);
    }
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        auto& project = result.projects[jobs[j].project];
        for (auto& f : extracted[j].functions) project.functions.push_back(std::move(f));
        for (auto& w : extracted[j].warnings) result.warnings.push_back(std::move(w));
    }

    std::erase_if(result.projects, [](const Project& p) { return p.functions.empty(); });
    return result;
}

LoadResult load_repository(const fs::path& root, const std::map<std::string, std::string>& labels,
                           const std::map<std::string, std::string>& descriptions) {
    std::map<std::string, ProjectMeta> metadata;
    for (const auto& [name, category] : labels) {
        ProjectMeta meta{lowercase(name), category, std::nullopt};
        if (const auto d = descriptions.find(name); d != descriptions.end()) meta.description = d->second;
        metadata.emplace(meta.name, std::move(meta));
    }
    return load_repository(root, metadata);
}

SplitSelection select_split(const std::vector<ProjectSummary>& projects, std::size_t holdout_per_category,
                            std::size_t per_category_count, std::uint64_t seed) {
    std::map<std::string, std::vector<std::size_t>> by_category;
    for (std::size_t i = 0; i < projects.size(); ++i) by_category[projects[i].category].push_back(i);
    const auto by_name = [&](std::size_t a, std::size_t b) { return projects[a].name < projects[b].name; };

    SplitSelection selection;
    Rng rng(seed);
    for (auto& [category, members] : by_category) {
        std::sort(members.begin(), members.end(), by_name);
        if (members.size() <= holdout_per_category) {
            throw Error("category '" + category + "' has " + std::to_string(members.size()) +
                        " projects; need more than " + std::to_string(holdout_per_category) + " for the holdout");
        }
        rng.shuffle(std::span<std::size_t>(members));
        selection.holdout.insert(selection.holdout.end(), members.begin(),
                                 members.begin() + static_cast<std::ptrdiff_t>(holdout_per_category));

        std::vector<std::size_t> remaining(members.begin() + static_cast<std::ptrdiff_t>(holdout_per_category),
                                           members.end());
        std::sort(remaining.begin(), remaining.end(), by_name);
        std::vector<std::pair<std::size_t, std::size_t>> pool;
        for (const std::size_t p : remaining) {
            for (std::size_t f = 0; f < projects[p].function_count; ++f) pool.emplace_back(p, f);
        }
        if (pool.size() < per_category_count) {
            throw Error("category '" + category + "' has " + std::to_string(pool.size()) +
                        " training functions; need at least " + std::to_string(per_category_count));
        }
        std::vector<std::size_t> order(pool.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(std::span<std::size_t>(order));
        order.resize(per_category_count);
        std::sort(order.begin(), order.end());
        for (const std::size_t idx : order) selection.train.push_back(pool[idx]);
    }
    std::sort(selection.holdout.begin(), selection.holdout.end(), by_name);
    return selection;
}

DatasetSplit make_splits(const std::vector<Project>& projects, std::size_t holdout_per_category,
                         std::size_t per_category_count, std::uint64_t seed) {
    std::vector<ProjectSummary> summary;
    summary.reserve(projects.size());
    for (const auto& p : projects) summary.push_back({p.name, p.category, p.functions.size()});
    const SplitSelection selection = select_split(summary, holdout_per_category, per_category_count, seed);

    DatasetSplit split;
    split.seed = seed;
    split.per_category_count = per_category_count;
    for (const std::size_t h : selection.holdout) split.holdout_projects.push_back(projects[h]);
    for (const auto& [p, f] : selection.train) {
        split.train.push_back({projects[p].functions[f], projects[p].category, projects[p].description});
    }
    return split;
}

}  // namespace codecat
