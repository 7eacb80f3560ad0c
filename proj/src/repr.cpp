#include "codecat/repr.hpp"
#include "codecat/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>

namespace codecat {

namespace {

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace

std::string_view to_string(Variant v) {
    return v == Variant::CodeOnly ? "co" : "cd";
}

Variant parse_variant(std::string_view s) {
    if (s == "co") return Variant::CodeOnly;
    if (s == "cd") return Variant::CodeDescription;
    throw Error("unknown variant '" + std::string(s) + "' (expected co or cd)");
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (const char raw : text) {
        const auto c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
        const bool word = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
        if (word) {
            current.push_back(c);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::vector<std::string> build_representation(const FunctionRecord& f, const std::optional<std::string>& description,
                                              Variant variant) {
    std::vector<std::string> tokens;
    tokens.push_back(lowercase(f.project_name));
    tokens.push_back(lowercase(f.function_name));
    auto body = tokenize(f.body);
    tokens.insert(tokens.end(), std::make_move_iterator(body.begin()), std::make_move_iterator(body.end()));
    if (variant == Variant::CodeDescription && description) {
        tokens.emplace_back(kDescriptionDelimiter);
        auto words = tokenize(*description);
        tokens.insert(tokens.end(), std::make_move_iterator(words.begin()), std::make_move_iterator(words.end()));
    }
    return tokens;
}

Vocabulary::Vocabulary() {
    add(kPadToken);
    add(kUnknownToken);
}

TokenId Vocabulary::add(std::string_view token) {
    const auto [it, inserted] = index_.try_emplace(std::string(token), static_cast<TokenId>(tokens_.size()));
    if (inserted) tokens_.emplace_back(token);
    return it->second;
}

TokenId Vocabulary::id(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnknownId : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
    return index_.contains(std::string(token));
}

const std::string& Vocabulary::token(TokenId id) const {
    if (id >= tokens_.size()) throw Error("token id " + std::to_string(id) + " out of range");
    return tokens_[id];
}

std::uint64_t Vocabulary::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto feed = [&h](std::string_view s) {
        for (const char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
    };
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        feed(tokens_[i]);
        feed("\t");
        feed(std::to_string(i));
        feed("\n");
    }
    return h;
}

void Vocabulary::save(std::ostream& out) const {
    for (std::size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << i << '\n';
}

Vocabulary Vocabulary::load(std::istream& in) {
    std::vector<std::string> tokens;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto tab = line.rfind('\t');
        if (tab == std::string::npos) throw Error("vocabulary line " + std::to_string(line_no) + ": missing tab");
        std::size_t id = 0;
        try {
            id = std::stoul(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw Error("vocabulary line " + std::to_string(line_no) + ": bad id");
        }
        if (id != tokens.size()) throw Error("vocabulary line " + std::to_string(line_no) + ": ids must be dense and ascending");
        tokens.push_back(line.substr(0, tab));
    }
    return from_tokens(tokens);
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens_in_id_order) {
    if (tokens_in_id_order.size() < 2 || tokens_in_id_order[0] != kPadToken || tokens_in_id_order[1] != kUnknownToken) {
        throw Error("vocabulary must start with the reserved <pad> and <unk> entries");
    }
    Vocabulary vocab;
    for (std::size_t i = 2; i < tokens_in_id_order.size(); ++i) {
        if (vocab.add(tokens_in_id_order[i]) != i) throw Error("duplicate vocabulary token '" + tokens_in_id_order[i] + "'");
    }
    return vocab;
}

Vocabulary build_vocabulary(std::span<const std::vector<std::string>> streams) {
    Vocabulary vocab;
    for (const auto& stream : streams) {
        for (const auto& token : stream) vocab.add(token);
    }
    if (vocab.size() == 2) throw Error("cannot build a vocabulary from an empty corpus");
    vocab.add(kDescriptionDelimiter);
    return vocab;
}

std::vector<TokenId> encode_ids(std::span<const std::string> tokens, const Vocabulary& vocab, std::size_t seq_len) {
    if (seq_len < 1) throw Error("sequence length must be at least 1");
    std::vector<TokenId> ids(seq_len, kPadId);
    const std::size_t n = std::min(seq_len, tokens.size());
    for (std::size_t i = 0; i < n; ++i) ids[i] = vocab.id(tokens[i]);
    return ids;
}

Representation encode(std::span<const std::string> tokens, const Vocabulary& vocab, std::size_t seq_len) {
    Representation r;
    r.ids = encode_ids(tokens, vocab, seq_len);
    return r;
}

std::vector<std::string> DatasetRecord::representation(Variant variant) const {
    std::vector<std::string> out = tokens;
    if (variant == Variant::CodeDescription && description) {
        out.emplace_back(kDescriptionDelimiter);
        auto words = tokenize(*description);
        out.insert(out.end(), std::make_move_iterator(words.begin()), std::make_move_iterator(words.end()));
    }
    return out;
}

DatasetRecord make_record(const FunctionRecord& f, const std::string& category,
                          const std::optional<std::string>& description) {
    return DatasetRecord{f.project_name, f.function_name, category, description,
                         build_representation(f, std::nullopt, Variant::CodeOnly)};
}

std::vector<DatasetRecord> records_from_projects(const std::vector<Project>& projects) {
    std::vector<DatasetRecord> out;
    for (const auto& p : projects) {
        for (const auto& f : p.functions) out.push_back(make_record(f, p.category, p.description));
    }
    return out;
}

std::vector<DatasetRecord> records_from_labeled(const std::vector<LabeledFunction>& functions) {
    std::vector<DatasetRecord> out;
    out.reserve(functions.size());
    for (const auto& f : functions) out.push_back(make_record(f.function, f.category, f.description));
    return out;
}

void write_records(std::ostream& out, const std::vector<DatasetRecord>& records) {
    for (const auto& r : records) {
        nlohmann::ordered_json obj;
        obj["project"] = r.project;
        obj["function"] = r.function;
        obj["category"] = r.category;
        if (r.description) obj["description"] = *r.description;
        obj["tokens"] = r.tokens;
        out << obj.dump() << '\n';
    }
}

std::vector<DatasetRecord> read_records(std::istream& in) {
    std::vector<DatasetRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto obj = nlohmann::json::parse(line);
            DatasetRecord r;
            r.project = obj.at("project").get<std::string>();
            r.function = obj.at("function").get<std::string>();
            r.category = obj.at("category").get<std::string>();
            if (obj.contains("description") && obj["description"].is_string()) {
                r.description = obj["description"].get<std::string>();
            }
            r.tokens = obj.at("tokens").get<std::vector<std::string>>();
            records.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw Error("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

std::vector<RecordGroup> group_by_project(const std::vector<DatasetRecord>& records) {
    std::map<std::string, RecordGroup> groups;
    for (const auto& r : records) {
        auto& g = groups[r.project];
        if (g.records.empty()) {
            g.project = r.project;
            g.category = r.category;
        } else if (g.category != r.category) {
            throw Error("project '" + r.project + "' appears with two categories");
        }
        g.records.push_back(&r);
    }
    std::vector<RecordGroup> out;
    out.reserve(groups.size());
    for (auto& [name, g] : groups) out.push_back(std::move(g));
    return out;
}

}  // namespace codecat
