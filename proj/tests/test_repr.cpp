#include "codecat/error.hpp"
#include "codecat/repr.hpp"
#include "codecat/rng.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace codecat;

namespace {

// Character-class oracle: a byte belongs to a token iff it is [A-Za-z0-9_].
std::vector<std::string> tokenize_oracle(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    for (const char ch : text) {
        const bool word = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '_';
        if (word) {
            current += (ch >= 'A' && ch <= 'Z') ? static_cast<char>(ch - 'A' + 'a') : ch;
        } else if (!current.empty()) {
            out.push_back(current);
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(current);
    return out;
}

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) out += (out.empty() ? "" : " ") + t;
    return out;
}

}  // namespace

TEST(Tokenize, Examples) {
    EXPECT_EQ(tokenize("CalEditDistance(s, t)"), (std::vector<std::string>{"caleditdistance", "s", "t"}));
    EXPECT_TRUE(tokenize("").empty());
    EXPECT_TRUE(tokenize("{}();,").empty());
    EXPECT_EQ(tokenize("if (x->y != NULL) /* free mem */"),
              (std::vector<std::string>{"if", "x", "y", "null", "free", "mem"}));
    EXPECT_EQ(tokenize("snd_pcm_open"), (std::vector<std::string>{"snd_pcm_open"}));
}

TEST(Tokenize, MatchesOracleAndIsIdempotent) {
    Rng rng(3);
    const std::string alphabet = "abcXYZ019_ (){}[];,.->*/\"'\t\n#+=!\x80\xff";
    for (int trial = 0; trial < 500; ++trial) {
        std::string text;
        const auto n = rng.uniform_below(80);
        for (std::uint64_t i = 0; i < n; ++i) text += alphabet[rng.uniform_below(alphabet.size())];
        const auto tokens = tokenize(text);
        EXPECT_EQ(tokens, tokenize_oracle(text));
        EXPECT_EQ(tokenize(join(tokens)), tokens);
    }
}

TEST(Representation, CodeOnlyAndCodeDescription) {
    const FunctionRecord f{"stardict", "CalEditDistance", "int CalEditDistance(const char *s) { return 0; }"};
    const std::optional<std::string> descr = "International dictionary lookup program";
    const auto co = build_representation(f, descr, Variant::CodeOnly);
    const auto cd = build_representation(f, descr, Variant::CodeDescription);
    ASSERT_GE(co.size(), 2u);
    EXPECT_EQ(co[0], "stardict");
    EXPECT_EQ(co[1], "caleditdistance");
    EXPECT_EQ(std::count(co.begin(), co.end(), "descrdelim"), 0);
    ASSERT_GT(cd.size(), co.size());
    EXPECT_TRUE(std::equal(co.begin(), co.end(), cd.begin()));
    EXPECT_EQ(cd[co.size()], "descrdelim");
    EXPECT_EQ(cd[co.size() + 1], "international");
    EXPECT_EQ(cd[co.size() + 2], "dictionary");
    EXPECT_EQ(build_representation(f, std::nullopt, Variant::CodeDescription), co);
}

TEST(Representation, VariantNames) {
    EXPECT_EQ(to_string(Variant::CodeOnly), "co");
    EXPECT_EQ(parse_variant("cd"), Variant::CodeDescription);
    EXPECT_THROW(parse_variant("xx"), Error);
}

TEST(Vocabulary, FirstSeenOrder) {
    const std::vector<std::vector<std::string>> streams = {{"a", "b", "a", "c"}};
    const auto v = build_vocabulary(streams);
    EXPECT_EQ(v.id("<pad>"), 0u);
    EXPECT_EQ(v.id("<unk>"), 1u);
    EXPECT_EQ(v.id("a"), 2u);
    EXPECT_EQ(v.id("b"), 3u);
    EXPECT_EQ(v.id("c"), 4u);
    EXPECT_TRUE(v.contains("descrdelim"));
    EXPECT_EQ(v.id("zzz"), kUnknownId);
    EXPECT_EQ(build_vocabulary(streams), v);
    EXPECT_EQ(build_vocabulary(streams).hash(), v.hash());
}

TEST(Vocabulary, KeepsRareTokensAndRejectsEmpty) {
    const std::vector<std::vector<std::string>> streams = {{"common", "common"}, {"once"}};
    EXPECT_TRUE(build_vocabulary(streams).contains("once"));
    EXPECT_THROW(build_vocabulary(std::vector<std::vector<std::string>>{}), Error);
    EXPECT_THROW(build_vocabulary(std::vector<std::vector<std::string>>{{}}), Error);
}

TEST(Vocabulary, SaveLoadRoundTrip) {
    const std::vector<std::vector<std::string>> streams = {{"x", "y", "descrdelim", "z"}};
    const auto v = build_vocabulary(streams);
    std::stringstream buffer;
    v.save(buffer);
    EXPECT_EQ(buffer.str().substr(0, 8), "<pad>\t0\n");
    const auto loaded = Vocabulary::load(buffer);
    EXPECT_EQ(loaded, v);
    std::stringstream bad("<pad>\t0\n<unk>\t2\n");
    EXPECT_THROW(Vocabulary::load(bad), Error);
}

TEST(Encode, TruncatesPadsAndMapsUnknown) {
    std::vector<std::string> tokens;
    for (int i = 0; i < 70; ++i) tokens.push_back("t" + std::to_string(i));
    const std::vector<std::vector<std::string>> streams = {tokens};
    const auto v = build_vocabulary(streams);

    const auto ids = encode_ids(tokens, v, 60);
    ASSERT_EQ(ids.size(), 60u);
    for (std::size_t i = 0; i < 60; ++i) EXPECT_EQ(ids[i], v.id(tokens[i]));

    const std::vector<std::string> shorter = {"t0", "nope", "t2"};
    const auto padded = encode(shorter, v, 60);
    ASSERT_EQ(padded.ids.size(), 60u);
    EXPECT_EQ(padded.ids[0], v.id("t0"));
    EXPECT_EQ(padded.ids[1], kUnknownId);
    EXPECT_EQ(padded.ids[2], v.id("t2"));
    for (std::size_t i = 3; i < 60; ++i) EXPECT_EQ(padded.ids[i], kPadId);
    EXPECT_THROW(encode_ids(shorter, v, 0), Error);
}

TEST(Encode, HoldoutOnlyTokensGetNoId) {
    const std::vector<std::vector<std::string>> train = {{"alpha", "beta"}};
    const auto v = build_vocabulary(train);
    const std::vector<std::string> holdout = {"alpha", "gamma", "delta"};
    const auto ids = encode_ids(holdout, v, 5);
    EXPECT_EQ(ids[1], kUnknownId);
    EXPECT_EQ(ids[2], kUnknownId);
    for (const auto id : ids) EXPECT_LT(id, v.size());
}

TEST(Records, JsonLinesRoundTripAndGrouping) {
    const FunctionRecord f1{"proj", "f", "void f() { a(); }"};
    const FunctionRecord f2{"proj", "g", "void g() { b(); }"};
    const FunctionRecord f3{"other", "h", "int h() { return 1; }"};
    std::vector<DatasetRecord> records = {make_record(f1, "sound", "Mixes audio."), make_record(f3, "net", std::nullopt),
                                          make_record(f2, "sound", "Mixes audio.")};
    std::stringstream buffer;
    write_records(buffer, records);
    const auto back = read_records(buffer);
    ASSERT_EQ(back.size(), 3u);
    EXPECT_EQ(back[0].tokens, records[0].tokens);
    EXPECT_EQ(back[1].description, std::nullopt);
    EXPECT_EQ(back[2].representation(Variant::CodeDescription),
              build_representation(f2, std::string("Mixes audio."), Variant::CodeDescription));

    const auto groups = group_by_project(back);
    ASSERT_EQ(groups.size(), 2u);
    EXPECT_EQ(groups[0].project, "other");
    EXPECT_EQ(groups[1].project, "proj");
    ASSERT_EQ(groups[1].records.size(), 2u);
    EXPECT_EQ(groups[1].records[0]->function, "f");

    records.push_back(make_record(FunctionRecord{"proj", "k", "void k() {}"}, "net", std::nullopt));
    EXPECT_THROW(group_by_project(records), Error);
}

TEST(Records, MalformedLineReportsLineNumber) {
    std::stringstream buffer("{\"project\":\"p\",\"function\":\"f\",\"category\":\"c\",\"tokens\":[]}\nnot json\n");
    try {
        read_records(buffer);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
    }
}
