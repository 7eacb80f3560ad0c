#include "codecat/synth.hpp"
#include "codecat/error.hpp"
#include "codecat/io.hpp"
#include "codecat/rng.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

namespace codecat {

namespace {

const std::vector<std::string> kCategoryNames = {"sound", "net", "graphics", "science", "database",
                                                 "games", "text", "system"};
const std::vector<std::string> kGeneric = {"buf",  "len",   "ctx",    "data",  "size", "count", "value", "state",
                                           "flags", "result", "tmp", "ptr",   "node", "list",  "index", "offset"};
const std::vector<std::string> kVerbs = {"init", "free", "get",  "set",  "read", "write", "open",
                                         "close", "update", "reset", "parse", "load", "find", "copy"};
const std::vector<std::string> kTypes = {"int", "char", "long", "unsigned"};
const std::vector<std::string> kFillerAdjectives = {"small", "simple", "fast", "portable", "lightweight", "free"};
const std::set<std::string> kReserved = {"auto", "case", "char", "else", "enum", "goto", "long", "void",
                                         "main", "free", "read", "open", "size", "data", "list", "node",
                                         "file", "line", "time", "name", "type", "bool", "true", "null"};

class WordMaker {
public:
    explicit WordMaker(Rng& rng) : rng_(rng) {
        for (const auto& w : kGeneric) used_.insert(w);
        for (const auto& w : kVerbs) used_.insert(w);
        for (const auto& w : kTypes) used_.insert(w);
    }

    std::string make() {
        static constexpr std::string_view consonants = "bdfgklmnprstvz";
        static constexpr std::string_view vowels = "aeiou";
        for (;;) {
            const auto syllables = 2 + rng_.uniform_below(2);
            std::string w;
            for (std::uint64_t s = 0; s < syllables; ++s) {
                w += consonants[rng_.uniform_below(consonants.size())];
                w += vowels[rng_.uniform_below(vowels.size())];
            }
            if (kReserved.count(w) == 0 && used_.insert(w).second) return w;
        }
    }

private:
    Rng& rng_;
    std::set<std::string> used_;
};

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
    return items[rng.uniform_below(items.size())];
}

}  // namespace

SynthCorpus generate_corpus(const SynthConfig& config) {
    if (config.categories < 2) throw Error("synthetic corpus needs at least two categories");
    if (config.projects_per_category == 0 || config.functions_per_project == 0) {
        throw Error("synthetic corpus needs projects and functions");
    }
    if (config.code_terms == 0 || config.description_terms < 4) throw Error("too few planted terms");
    if (!(config.noise >= 0.0 && config.noise <= 1.0) || !(config.phrase_rate >= 0.0 && config.phrase_rate <= 1.0)) {
        throw Error("noise and phrase_rate must lie in [0, 1]");
    }

    Rng rng(mix_seed(config.seed, 0x5e17c0de));
    WordMaker words(rng);
    SynthCorpus corpus;
    const std::size_t n_cat = config.categories;
    for (std::size_t c = 0; c < n_cat; ++c) {
        corpus.categories.push_back(c < kCategoryNames.size() ? kCategoryNames[c] : fmt::format("cat{}", c));
        std::vector<std::string> code, descr, phrase;
        for (std::size_t i = 0; i < config.code_terms; ++i) code.push_back(words.make());
        for (std::size_t i = 0; i < config.description_terms; ++i) descr.push_back(words.make());
        for (int i = 0; i < 4; ++i) phrase.push_back(words.make());
        corpus.code_terms.push_back(std::move(code));
        corpus.description_terms.push_back(std::move(descr));
        corpus.phrases.push_back(std::move(phrase));
    }

    const auto term_for = [&](std::size_t category) -> const std::string& {
        std::size_t source = category;
        if (rng.uniform01() < config.noise) {
            source = (category + 1 + rng.uniform_below(n_cat - 1)) % n_cat;
        }
        return pick(rng, corpus.code_terms[source]);
    };

    for (std::size_t c = 0; c < n_cat; ++c) {
        for (std::size_t p = 0; p < config.projects_per_category; ++p) {
            SynthProject project;
            project.meta.name = words.make() + words.make().substr(0, 2);
            project.meta.category = corpus.categories[c];
            const auto& d = corpus.description_terms[c];
            project.meta.description =
                fmt::format("{} is a {} {} {} library for {} and {}. It provides {} support with {}.",
                            project.meta.name, pick(rng, kFillerAdjectives), pick(rng, d), pick(rng, d),
                            pick(rng, d), pick(rng, d), pick(rng, d), pick(rng, d));

            std::vector<std::string> functions;
            std::set<std::string> names;
            while (functions.size() < config.functions_per_project) {
                std::string name = term_for(c) + "_" + pick(rng, kVerbs);
                if (!names.insert(name).second) continue;
                const std::string g1 = pick(rng, kGeneric), g2 = pick(rng, kGeneric);
                std::vector<std::string> statements;
                const auto n_statements = 3 + rng.uniform_below(3);
                for (std::uint64_t s = 0; s < n_statements; ++s) {
                    const std::string& g = pick(rng, kGeneric);
                    switch (rng.uniform_below(4)) {
                        case 0:
                            statements.push_back(fmt::format("{} = {}({}, {});", g, term_for(c), g1, g2));
                            break;
                        case 1:
                            statements.push_back(fmt::format("if ({} > {}) {} = {};", g, term_for(c), g, term_for(c)));
                            break;
                        case 2:
                            statements.push_back(fmt::format("for (i = 0; i < {}; i++) {}({}, i);", g2, term_for(c), g1));
                            break;
                        default:
                            statements.push_back(fmt::format("{} += {};", g, term_for(c)));
                            break;
                    }
                }
                if (rng.uniform01() < config.phrase_rate) {
                    const auto& ph = corpus.phrases[c];
                    const auto at = rng.uniform_below(statements.size() + 1);
                    statements.insert(statements.begin() + static_cast<std::ptrdiff_t>(at),
                                      fmt::format("if ({}) {}({}, {});", ph[0], ph[1], ph[2], ph[3]));
                }
                std::string text = fmt::format("{} {}({} *{}, int {})\n{{\n    int i;\n", pick(rng, kTypes), name,
                                               pick(rng, kTypes), g1, g2);
                for (const auto& s : statements) text += "    " + s + "\n";
                text += fmt::format("    return {};\n}}\n", g2);
                functions.push_back(std::move(text));
            }

            constexpr std::size_t kPerFile = 8;
            for (std::size_t start = 0, part = 0; start < functions.size(); start += kPerFile, ++part) {
                SynthFile file;
                file.name = fmt::format("part{:02}.c", part);
                file.text = fmt::format("/* {} part {} */\n#include <stdio.h>\n\n", project.meta.name, part);
                if (part == 0) file.text += fmt::format("struct {}_state {{\n    int count;\n}};\n\n", project.meta.name);
                for (std::size_t f = start; f < std::min(functions.size(), start + kPerFile); ++f) {
                    file.text += functions[f] + "\n";
                }
                project.files.push_back(std::move(file));
            }
            corpus.projects.push_back(std::move(project));
        }
    }
    std::sort(corpus.projects.begin(), corpus.projects.end(),
              [](const SynthProject& a, const SynthProject& b) { return a.meta.name < b.meta.name; });
    return corpus;
}

std::map<std::string, ProjectMeta> corpus_metadata(const SynthCorpus& corpus) {
    std::map<std::string, ProjectMeta> out;
    for (const auto& p : corpus.projects) out.emplace(p.meta.name, p.meta);
    return out;
}

void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& root) {
    for (const auto& p : corpus.projects) {
        for (const auto& f : p.files) {
            write_file_atomic(root / "src" / p.meta.name / f.name, [&](std::ostream& out) { out << f.text; });
        }
    }
    write_file_atomic(root / "labels.jsonl", [&](std::ostream& out) {
        for (const auto& p : corpus.projects) {
            nlohmann::ordered_json j;
            j["name"] = p.meta.name;
            j["category"] = p.meta.category;
            if (p.meta.description) j["description"] = *p.meta.description;
            out << j.dump() << '\n';
        }
    });
}

std::vector<Project> corpus_projects(const SynthCorpus& corpus) {
    std::vector<Project> out;
    for (const auto& p : corpus.projects) {
        Project project{p.meta.name, p.meta.description, p.meta.category, {}};
        for (const auto& f : p.files) {
            auto result = extract_functions(f.text, p.meta.name);
            if (!result.diagnostics.empty()) throw Error("generated source failed to extract: " + result.diagnostics[0]);
            for (auto& fn : result.functions) project.functions.push_back(std::move(fn));
        }
        out.push_back(std::move(project));
    }
    return out;
}

}  // namespace codecat
