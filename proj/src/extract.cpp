#include "codecat/corpus.hpp"
#include "codecat/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <vector>

namespace codecat {

namespace {

bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

void check_text(std::string_view source) {
    if (source.find('\0') != std::string_view::npos) {
        throw Error("input looks binary (contains NUL bytes)");
    }
    const std::size_t probe = std::min<std::size_t>(source.size(), 8192);
    std::size_t control = 0;
    for (std::size_t i = 0; i < probe; ++i) {
        const auto c = static_cast<unsigned char>(source[i]);
        if (c < 0x20 && c != '\t' && c != '\n' && c != '\r' && c != '\f' && c != '\v' && c != 0x1b) {
            ++control;
        }
    }
    if (probe > 0 && control * 10 > probe) {
        throw Error("input looks binary (too many control characters)");
    }
}

// Blank out everything brace matching must ignore: comments, string/char/raw
// literals and preprocessor directives. Newlines and length are preserved so
// offsets map straight back to the original text.
std::string mask_source(std::string_view src) {
    std::string out(src);
    const std::size_t n = src.size();
    auto blank = [&](std::size_t from, std::size_t to) {
        for (std::size_t k = from; k < to && k < n; ++k) {
            if (out[k] != '\n') out[k] = ' ';
        }
    };

    bool line_start = true;  // only whitespace seen since the last newline
    std::size_t i = 0;
    while (i < n) {
        const char c = src[i];
        if (c == '\n') {
            line_start = true;
            ++i;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
            ++i;
            continue;
        }
        if (c == '#' && line_start) {
            std::size_t j = i;
            while (j < n) {
                if (src[j] == '\n') {
                    if (j > i && src[j - 1] == '\\') { ++j; continue; }
                    if (j > i + 1 && src[j - 1] == '\r' && src[j - 2] == '\\') { ++j; continue; }
                    break;
                }
                if (src[j] == '/' && j + 1 < n && src[j + 1] == '*') {
                    // block comment inside a directive may span lines
                    const auto close = src.find("*/", j + 2);
                    j = close == std::string_view::npos ? n : close + 2;
                    continue;
                }
                ++j;
            }
            blank(i, j);
            i = j;
            continue;
        }
        line_start = false;
        if (c == '/' && i + 1 < n && src[i + 1] == '/') {
            std::size_t j = i + 2;
            while (j < n && !(src[j] == '\n' && src[j - 1] != '\\')) ++j;
            blank(i, j);
            i = j;
            continue;
        }
        if (c == '/' && i + 1 < n && src[i + 1] == '*') {
            const auto close = src.find("*/", i + 2);
            const std::size_t j = close == std::string_view::npos ? n : close + 2;
            blank(i, j);
            i = j;
            continue;
        }
        if (is_ident_start(c) || std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            const bool numeric = std::isdigit(static_cast<unsigned char>(c)) != 0;
            while (j < n && (is_ident_char(src[j]) || (numeric && (src[j] == '\'' || src[j] == '.')))) ++j;
            // raw string: R"delim( ... )delim" with optional encoding prefix
            if (!numeric && j < n && src[j] == '"' && src[j - 1] == 'R') {
                const std::string_view prefix = src.substr(i, j - i);
                if (prefix == "R" || prefix == "u8R" || prefix == "uR" || prefix == "UR" || prefix == "LR") {
                    const auto open = src.find('(', j + 1);
                    if (open != std::string_view::npos && open - j - 1 <= 16) {
                        std::string terminator = ")";
                        terminator.append(src.substr(j + 1, open - j - 1));
                        terminator.push_back('"');
                        const auto close = src.find(terminator, open + 1);
                        const std::size_t end = close == std::string_view::npos ? n : close + terminator.size();
                        blank(j, end);
                        i = end;
                        continue;
                    }
                }
            }
            i = j;
            continue;
        }
        if (c == '"' || c == '\'') {
            std::size_t j = i + 1;
            while (j < n && src[j] != c && src[j] != '\n') {
                if (src[j] == '\\' && j + 1 < n) ++j;
                ++j;
            }
            const std::size_t end = (j < n && src[j] == c) ? j + 1 : j;
            blank(i, end);
            i = end;
            continue;
        }
        ++i;
    }
    return out;
}

// Position of the brace matching the one at `open`, or npos.
std::size_t match_brace(const std::string& masked, std::size_t open) {
    int depth = 0;
    for (std::size_t i = open; i < masked.size(); ++i) {
        if (masked[i] == '{') {
            ++depth;
        } else if (masked[i] == '}') {
            if (--depth == 0) return i;
        }
    }
    return std::string::npos;
}

struct HeaderToken {
    std::string text;
    std::size_t pos;  // absolute offset in the source
    bool ident;
};

std::vector<HeaderToken> lex_header(const std::string& masked, std::size_t from, std::size_t to) {
    std::vector<HeaderToken> tokens;
    std::size_t i = from;
    while (i < to) {
        const char c = masked[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (is_ident_char(c)) {
            std::size_t j = i;
            while (j < to && is_ident_char(masked[j])) ++j;
            tokens.push_back({masked.substr(i, j - i), i, is_ident_start(c)});
            i = j;
            continue;
        }
        if (i + 1 < to) {
            const std::string two = masked.substr(i, 2);
            if (two == "::" || two == "->" || two == "==" || two == "!=" || two == "<=" || two == ">=") {
                tokens.push_back({two, i, false});
                i += 2;
                continue;
            }
        }
        tokens.push_back({std::string(1, c), i, false});
        ++i;
    }
    return tokens;
}

enum class HeaderKind { Function, Transparent, BraceInit, Other };

struct HeaderInfo {
    HeaderKind kind = HeaderKind::Other;
    std::string name;
    std::size_t start = 0;
};

bool in_list(const std::string& s, std::initializer_list<const char*> list) {
    return std::any_of(list.begin(), list.end(), [&](const char* k) { return s == k; });
}

// Index one past the group closing tokens[open], counting `open_ch`/`close_ch`.
std::size_t skip_group(const std::vector<HeaderToken>& t, std::size_t open, const char* open_ch,
                       const char* close_ch) {
    int depth = 0;
    for (std::size_t k = open; k < t.size(); ++k) {
        if (t[k].text == open_ch) ++depth;
        if (t[k].text == close_ch && --depth == 0) return k + 1;
    }
    return t.size();
}

HeaderInfo classify_header(const std::string& masked, std::size_t from, std::size_t to) {
    HeaderInfo info;
    const auto t = lex_header(masked, from, to);
    if (t.empty()) return info;
    info.start = t.front().pos;

    std::size_t k = 0;
    while (k < t.size() && t[k].text == "template") {
        ++k;
        if (k < t.size() && t[k].text == "<") k = skip_group(t, k, "<", ">");
    }

    bool have_candidate = false;
    bool after_colon = false;
    bool after_arrow = false;
    std::size_t candidate_close = 0;
    while (k < t.size()) {
        const auto& tok = t[k];
        if (tok.text == "(") {
            k = skip_group(t, k, "(", ")");
            continue;
        }
        if (tok.text == "{") {
            k = skip_group(t, k, "{", "}");
            continue;
        }
        if (tok.text == "=") {
            return info;
        }
        if (tok.text == ":" && have_candidate) {
            after_colon = true;
        } else if (tok.text == "->" && have_candidate) {
            after_arrow = true;
        } else if (tok.text == "operator" && !after_colon && !after_arrow) {
            std::size_t j = k + 1;
            if (j + 1 < t.size() && t[j].text == "(" && t[j + 1].text == ")") j += 2;
            while (j < t.size() && t[j].text != "(") ++j;
            if (j == t.size()) return info;
            info.name = "operator";
            have_candidate = true;
            k = skip_group(t, j, "(", ")");
            candidate_close = k;
            continue;
        } else if (tok.ident && k + 1 < t.size() && t[k + 1].text == "(") {
            if (in_list(tok.text, {"if", "while", "for", "switch", "return", "catch", "do", "else", "case",
                                   "sizeof", "alignof", "static_assert"})) {
                return info;
            }
            const bool attribute_like = in_list(tok.text, {"__attribute__", "__declspec", "alignas", "_Alignas",
                                                           "decltype", "noexcept", "throw", "__asm__", "asm",
                                                           "__typeof__", "typeof", "requires"});
            if (!attribute_like && !after_colon && !after_arrow) {
                info.name = tok.text;
                have_candidate = true;
                k = skip_group(t, k + 1, "(", ")");
                candidate_close = k;
                continue;
            }
            k = skip_group(t, k + 1, "(", ")");
            continue;
        }
        ++k;
    }

    if (!have_candidate) {
        const bool is_namespace = std::any_of(t.begin(), t.end(), [](const auto& x) { return x.text == "namespace"; });
        const bool is_extern = t.size() == 1 && t.front().text == "extern";
        info.kind = (is_namespace || is_extern) ? HeaderKind::Transparent : HeaderKind::Other;
        return info;
    }
    for (std::size_t j = candidate_close; j < t.size(); ++j) {
        if (in_list(t[j].text, {"struct", "class", "union", "enum"})) return info;
    }
    if (after_colon && (t.back().ident || t.back().text == ">")) {
        info.kind = HeaderKind::BraceInit;
        return info;
    }
    info.kind = HeaderKind::Function;
    return info;
}

}  // namespace

bool braces_balanced(std::string_view text) {
    const std::string masked = mask_source(text);
    long depth = 0;
    for (const char c : masked) {
        if (c == '{') ++depth;
        if (c == '}' && --depth < 0) return false;
    }
    return depth == 0;
}

ExtractionResult extract_functions(std::string_view source, std::string_view project_name) {
    check_text(source);
    ExtractionResult result;
    const std::string masked = mask_source(source);

    std::size_t stmt_start = 0;
    int transparent_depth = 0;
    std::size_t i = 0;
    while (i < masked.size()) {
        const char c = masked[i];
        if (c == ';') {
            stmt_start = i + 1;
        } else if (c == '}') {
            if (transparent_depth > 0) {
                --transparent_depth;
            } else {
                result.diagnostics.push_back("unmatched '}' at offset " + std::to_string(i));
            }
            stmt_start = i + 1;
        } else if (c == '{') {
            const HeaderInfo header = classify_header(masked, stmt_start, i);
            if (header.kind == HeaderKind::Transparent) {
                ++transparent_depth;
                stmt_start = i + 1;
            } else {
                const std::size_t close = match_brace(masked, i);
                if (close == std::string::npos) {
                    result.diagnostics.push_back("unbalanced braces: block opened at offset " + std::to_string(i) +
                                                 " is never closed");
                    return result;
                }
                if (header.kind == HeaderKind::Function) {
                    FunctionRecord record;
                    record.project_name = std::string(project_name);
                    record.function_name = header.name;
                    record.body = std::string(source.substr(header.start, close + 1 - header.start));
                    result.functions.push_back(std::move(record));
                }
                i = close;
                if (header.kind != HeaderKind::BraceInit) stmt_start = close + 1;
            }
        }
        ++i;
    }
    if (transparent_depth > 0) {
        result.diagnostics.push_back("unbalanced braces: " + std::to_string(transparent_depth) +
                                     " namespace/extern block(s) not closed at end of file");
    }
    return result;
}

bool is_cpp_source_path(const std::filesystem::path& path) {
    static constexpr std::array<std::string_view, 12> kExtensions = {
        ".c", ".h", ".cc", ".cpp", ".cxx", ".c++", ".hh", ".hpp", ".hxx", ".h++", ".inl", ".ipp"};
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return std::find(kExtensions.begin(), kExtensions.end(), ext) != kExtensions.end();
}

}  // namespace codecat
