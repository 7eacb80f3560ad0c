#pragma once

#include "codecat/corpus.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace codecat {

using TokenId = std::uint32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnknownId = 1;
inline constexpr std::string_view kDescriptionDelimiter = "descrdelim";

enum class Variant { CodeOnly, CodeDescription };

std::string_view to_string(Variant v);  // "co" / "cd"
Variant parse_variant(std::string_view s);

// Lowercase, map every character outside [a-z0-9_] to a space, split on
// whitespace. Identifiers are never split.
std::vector<std::string> tokenize(std::string_view text);

// co: [project, function, body tokens...]
// cd: co ++ ["descrdelim"] ++ tokenize(description); equals co if no description.
std::vector<std::string> build_representation(const FunctionRecord& f,
                                              const std::optional<std::string>& description,
                                              Variant variant);

class Vocabulary {
public:
    Vocabulary();

    // Assigns the next id if `token` is new. Returns its id.
    TokenId add(std::string_view token);

    TokenId id(std::string_view token) const;  // kUnknownId if absent
    bool contains(std::string_view token) const;
    const std::string& token(TokenId id) const;
    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    // FNV-1a 64 over the "token\tid\n" serialization.
    std::uint64_t hash() const;

    // One "token<TAB>id" line per entry, ids ascending.
    void save(std::ostream& out) const;
    static Vocabulary load(std::istream& in);
    static Vocabulary from_tokens(const std::vector<std::string>& tokens_in_id_order);

    bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
};

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kUnknownToken = "<unk>";

// First-seen order over the training streams; rare tokens kept; "descrdelim"
// appended if it never occurred. Throws on an empty corpus.
Vocabulary build_vocabulary(std::span<const std::vector<std::string>> streams);

struct Representation {
    std::vector<TokenId> ids;
    Variant variant = Variant::CodeOnly;
    std::string project;
    std::string function;
};

// Head-keep truncation to seq_len, tail padding with kPadId, OOV -> kUnknownId.
std::vector<TokenId> encode_ids(std::span<const std::string> tokens, const Vocabulary& vocab, std::size_t seq_len = 60);

Representation encode(std::span<const std::string> tokens, const Vocabulary& vocab, std::size_t seq_len = 60);

// A function as stored in the JSON-lines dataset: "tokens" holds the co
// representation; cd is rebuilt from the description.
struct DatasetRecord {
    std::string project;
    std::string function;
    std::string category;
    std::optional<std::string> description;
    std::vector<std::string> tokens;

    std::vector<std::string> representation(Variant variant) const;
};

DatasetRecord make_record(const FunctionRecord& f, const std::string& category,
                          const std::optional<std::string>& description);

std::vector<DatasetRecord> records_from_projects(const std::vector<Project>& projects);
std::vector<DatasetRecord> records_from_labeled(const std::vector<LabeledFunction>& functions);

void write_records(std::ostream& out, const std::vector<DatasetRecord>& records);
std::vector<DatasetRecord> read_records(std::istream& in);

// Group consecutive-or-not records back into projects (sorted by name),
// keeping record order within each project.
struct RecordGroup {
    std::string project;
    std::string category;
    std::vector<const DatasetRecord*> records;
};
std::vector<RecordGroup> group_by_project(const std::vector<DatasetRecord>& records);

}  // namespace codecat
