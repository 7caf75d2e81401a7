// SPDX-License-Identifier: Apache-2.0
#include "linefix/tokenizer.hpp"

#include <array>
#include <cstring>
#include <stdexcept>

#include "linefix/common.hpp"

namespace linefix {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_ascii_letter(char c) { return is_lower(c) || is_upper(c); }
// Non-ASCII bytes are treated as caseless letters so UTF-8 identifiers hold
// together through split and rejoin.
bool is_ident_char(char c) {
    return is_ascii_letter(c) || is_digit(c) || c == '_' ||
           static_cast<unsigned char>(c) >= 0x80;
}
bool is_hex_digit(char c) {
    return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

const LanguageProfile& make_profile(Language lang) {
    static const LanguageProfile java{
        Language::java,
        {"//"},
        {{'"', '"', '\\'}, {'\'', '\'', '\\'}},
        true,
        {}};
    static const LanguageProfile python{
        Language::python,
        {"#"},
        {{'"', '"', '\\'}, {'\'', '\'', '\\'}},
        false,
        {"f", "r", "b", "u", "F", "R", "B", "U", "fr", "rb", "Rb", "rB", "br"}};
    static const LanguageProfile cpp{
        Language::cpp,
        {"//"},
        {{'"', '"', '\\'}, {'\'', '\'', '\\'}},
        true,
        {"L", "u", "U", "u8"}};
    static const LanguageProfile javascript{
        Language::javascript,
        {"//"},
        {{'"', '"', '\\'}, {'\'', '\'', '\\'}, {'`', '`', '\\'}},
        true,
        {}};
    switch (lang) {
        case Language::java: return java;
        case Language::python: return python;
        case Language::cpp: return cpp;
        case Language::javascript: return javascript;
    }
    return java;
}

const StringDelimiter* delimiter_for(const LanguageProfile& p, char c) {
    for (const auto& d : p.string_delimiters)
        if (d.open == c) return &d;
    return nullptr;
}

// Scans a string literal starting at `i` (which must point at the open
// delimiter). Returns one-past-the-close, or line.size() if unterminated.
size_t scan_literal(std::string_view line, size_t i, const StringDelimiter& d,
                    bool* unterminated) {
    size_t j = i + 1;
    while (j < line.size()) {
        char c = line[j];
        if (d.escape != 0 && c == d.escape && j + 1 < line.size()) {
            j += 2;
            continue;
        }
        if (c == d.close) return j + 1;
        ++j;
    }
    *unterminated = true;
    return line.size();
}

// Scans a numeric literal starting at a digit: decimal/float/exponent or
// 0x hex, with common integer/float suffixes.
size_t scan_number(std::string_view line, size_t i) {
    size_t j = i;
    if (line[j] == '0' && j + 1 < line.size() &&
        (line[j + 1] == 'x' || line[j + 1] == 'X') && j + 2 < line.size() &&
        is_hex_digit(line[j + 2])) {
        j += 2;
        while (j < line.size() && is_hex_digit(line[j])) ++j;
    } else {
        while (j < line.size() && is_digit(line[j])) ++j;
        if (j < line.size() && line[j] == '.' && j + 1 < line.size() &&
            is_digit(line[j + 1])) {
            ++j;
            while (j < line.size() && is_digit(line[j])) ++j;
        } else if (j < line.size() && line[j] == '.' &&
                   (j + 1 == line.size() || !is_ident_char(line[j + 1]))) {
            ++j;  // trailing-dot float like "1."
        }
        if (j < line.size() && (line[j] == 'e' || line[j] == 'E')) {
            size_t k = j + 1;
            if (k < line.size() && (line[k] == '+' || line[k] == '-')) ++k;
            if (k < line.size() && is_digit(line[k])) {
                j = k;
                while (j < line.size() && is_digit(line[j])) ++j;
            }
        }
    }
    while (j < line.size() && std::strchr("uUlLfF", line[j]) != nullptr) ++j;
    return j;
}

// Splits an underscore-free identifier fragment at camel and letter<->digit
// boundaries. "XMLReader" -> XML|Reader, "utf8Decode" -> utf|8|Decode.
std::vector<std::string> split_camel(std::string_view piece) {
    std::vector<std::string> parts;
    size_t start = 0;
    auto cls = [&](size_t k) -> int {
        char c = piece[k];
        if (is_upper(c)) return 0;
        if (is_digit(c)) return 2;
        return 1;  // lowercase and non-ASCII
    };
    for (size_t k = 0; k + 1 < piece.size(); ++k) {
        int a = cls(k), b = cls(k + 1);
        bool boundary = false;
        if (a == 1 && b == 0) boundary = true;                       // aB
        else if ((a != 2 && b == 2) || (a == 2 && b != 2)) boundary = true;  // a1, 1a
        else if (a == 0 && b == 0 && k + 2 < piece.size() && cls(k + 2) == 1)
            boundary = true;  // XMLReader: split before last capital of a run
        if (boundary) {
            parts.emplace_back(piece.substr(start, k + 1 - start));
            start = k + 1;
        }
    }
    parts.emplace_back(piece.substr(start));
    return parts;
}

void emit_identifier(std::string_view run, std::vector<std::string>& out) {
    size_t i = 0;
    while (i < run.size()) {
        if (run[i] == '_') {
            out.emplace_back("_");
            ++i;
            continue;
        }
        size_t j = i;
        while (j < run.size() && run[j] != '_') ++j;
        auto parts = split_camel(run.substr(i, j - i));
        for (size_t p = 0; p < parts.size(); ++p) {
            if (p > 0) out.emplace_back(kCamelToken);
            out.push_back(std::move(parts[p]));
        }
        i = j;
    }
}

// Appends a raw literal (quotes included) to the token stream: as a single
// token when it has no internal whitespace, otherwise split on whitespace
// runs so the no-whitespace token invariant holds. The fragments rejoin to
// the whitespace-collapsed literal. A literal always begins and ends with a
// non-space delimiter, so at least one fragment is produced.
void emit_literal_tokens(std::string_view literal, std::vector<std::string>& out) {
    size_t i = 0;
    while (i < literal.size()) {
        while (i < literal.size() && is_space(literal[i])) ++i;
        size_t j = i;
        while (j < literal.size() && !is_space(literal[j])) ++j;
        if (j > i) out.emplace_back(literal.substr(i, j - i));
        i = j;
    }
}

bool is_string_prefix(const LanguageProfile& p, std::string_view run) {
    for (const auto& pre : p.string_prefixes)
        if (pre == run) return true;
    return false;
}

}  // namespace

const char* to_string(Language lang) {
    switch (lang) {
        case Language::java: return "java";
        case Language::python: return "python";
        case Language::cpp: return "cpp";
        case Language::javascript: return "javascript";
    }
    return "?";
}

std::optional<Language> language_from_string(std::string_view name) {
    if (name == "java") return Language::java;
    if (name == "python" || name == "py") return Language::python;
    if (name == "cpp" || name == "c++" || name == "cxx") return Language::cpp;
    if (name == "javascript" || name == "js") return Language::javascript;
    return std::nullopt;
}

std::optional<Language> language_from_extension(std::string_view path) {
    auto dot = path.rfind('.');
    if (dot == std::string_view::npos) return std::nullopt;
    auto ext = path.substr(dot);
    if (ext == ".java") return Language::java;
    if (ext == ".py") return Language::python;
    if (ext == ".cpp" || ext == ".cc" || ext == ".cxx" || ext == ".hpp" ||
        ext == ".h" || ext == ".hh" || ext == ".hxx" || ext == ".c")
        return Language::cpp;
    if (ext == ".js" || ext == ".jsx" || ext == ".mjs") return Language::javascript;
    return std::nullopt;
}

const LanguageProfile& profile_for(Language lang) { return make_profile(lang); }

TokenSequence tokenize(std::string_view line, const LanguageProfile& profile,
                       bool abstract) {
    TokenSequence seq;
    size_t i = 0;
    const size_t n = line.size();
    while (i < n) {
        char c = line[i];
        if (is_space(c)) {
            ++i;
            continue;
        }
        if (const StringDelimiter* d = delimiter_for(profile, c)) {
            size_t end = scan_literal(line, i, *d, &seq.unterminated_literal);
            std::string_view lit = line.substr(i, end - i);
            if (abstract) {
                seq.tokens.emplace_back(kStringToken);
                seq.abstraction_table.push_back(
                    {AbstractionKind::string_literal, std::string(lit)});
            } else {
                emit_literal_tokens(lit, seq.tokens);
            }
            i = end;
            continue;
        }
        if (is_digit(c)) {
            size_t end = scan_number(line, i);
            std::string_view num = line.substr(i, end - i);
            if (abstract && num != "0" && num != "1") {
                seq.tokens.emplace_back(kNumberToken);
                seq.abstraction_table.push_back(
                    {AbstractionKind::number_literal, std::string(num)});
            } else {
                seq.tokens.emplace_back(num);
            }
            i = end;
            continue;
        }
        if (is_ident_char(c)) {
            size_t j = i;
            while (j < n && is_ident_char(line[j])) ++j;
            std::string_view run = line.substr(i, j - i);
            // f"...", L"..." and friends: prefix belongs to the literal.
            if (j < n && delimiter_for(profile, line[j]) &&
                is_string_prefix(profile, run)) {
                const StringDelimiter* d = delimiter_for(profile, line[j]);
                size_t end = scan_literal(line, j, *d, &seq.unterminated_literal);
                std::string_view lit = line.substr(i, end - i);
                if (abstract) {
                    seq.tokens.emplace_back(kStringToken);
                    seq.abstraction_table.push_back(
                        {AbstractionKind::string_literal, std::string(lit)});
                } else {
                    emit_literal_tokens(lit, seq.tokens);
                }
                i = end;
                continue;
            }
            emit_identifier(run, seq.tokens);
            i = j;
            continue;
        }
        // Every other character is punctuation and its own token.
        seq.tokens.emplace_back(1, c);
        ++i;
    }
    return seq;
}

std::string detokenize(const TokenSequence& seq) {
    const auto& toks = seq.tokens;
    for (size_t k = 0; k < toks.size(); ++k) {
        if (toks[k] == kStringToken || toks[k] == kNumberToken)
            throw std::invalid_argument(
                "detokenize: unresolved placeholder at index " + std::to_string(k));
        if (toks[k] == kCamelToken) {
            bool bad = k == 0 || k + 1 == toks.size() || toks[k + 1] == kCamelToken;
            if (bad)
                throw std::invalid_argument(
                    "detokenize: <CAMEL> in illegal position at index " +
                    std::to_string(k));
        }
    }
    std::string out;
    bool suppress_space = true;  // no leading space
    for (size_t k = 0; k < toks.size(); ++k) {
        const std::string& t = toks[k];
        if (t == kCamelToken) {
            suppress_space = true;  // erase the space slot on both sides
            continue;
        }
        bool glue = suppress_space;
        if (!glue && t == "_" && !out.empty() && is_ident_char(out.back()))
            glue = true;
        if (!glue && k > 0 && toks[k - 1] == "_" && !t.empty() &&
            is_ident_char(t.front()))
            glue = true;
        if (!glue && !out.empty()) out.push_back(' ');
        out += t;
        suppress_space = false;
    }
    return out;
}

std::vector<std::string> reconstruct(const TokenSequence& seq,
                                     std::string_view buggy_line,
                                     const LanguageProfile& profile,
                                     size_t max_combinations) {
    bool has_placeholder = false;
    for (const auto& t : seq.tokens)
        if (t == kStringToken || t == kNumberToken) {
            has_placeholder = true;
            break;
        }
    if (!has_placeholder) return {detokenize(seq)};

    TokenSequence buggy = tokenize(buggy_line, profile, /*abstract=*/true);
    std::vector<std::string> strings, numbers;
    for (const auto& e : buggy.abstraction_table) {
        if (e.kind == AbstractionKind::string_literal) strings.push_back(e.literal);
        else numbers.push_back(e.literal);
    }

    std::vector<const std::vector<std::string>*> slots;
    std::vector<size_t> slot_token_index;
    for (size_t k = 0; k < seq.tokens.size(); ++k) {
        if (seq.tokens[k] == kStringToken) {
            if (strings.empty()) return {};  // no candidate: patch discarded
            slots.push_back(&strings);
            slot_token_index.push_back(k);
        } else if (seq.tokens[k] == kNumberToken) {
            if (numbers.empty()) return {};
            slots.push_back(&numbers);
            slot_token_index.push_back(k);
        }
    }

    size_t total = 1;
    for (const auto* s : slots) {
        total *= s->size();
        if (total > max_combinations) {
            log_warn("reconstruct: combination count exceeds cap, discarding patch");
            return {};
        }
    }

    std::vector<std::string> results;
    results.reserve(total);
    std::vector<size_t> odo(slots.size(), 0);
    for (size_t combo = 0; combo < total; ++combo) {
        TokenSequence resolved;
        resolved.tokens = seq.tokens;
        for (size_t s = 0; s < slots.size(); ++s)
            resolved.tokens[slot_token_index[s]] = (*slots[s])[odo[s]];
        results.push_back(detokenize(resolved));
        // odometer: last placeholder varies fastest
        for (size_t s = slots.size(); s-- > 0;) {
            if (++odo[s] < slots[s]->size()) break;
            odo[s] = 0;
        }
    }
    return results;
}

std::optional<std::string> strip_comments(std::string_view line,
                                          const LanguageProfile& profile) {
    if (profile.language == Language::python) {
        if (line.find("\"\"\"") != std::string_view::npos ||
            line.find("'''") != std::string_view::npos)
            return std::nullopt;  // triple quotes need multi-line context
    }
    std::string out;
    out.reserve(line.size());
    size_t i = 0;
    const size_t n = line.size();
    while (i < n) {
        char c = line[i];
        if (const StringDelimiter* d = delimiter_for(profile, c)) {
            bool unterminated = false;
            size_t end = scan_literal(line, i, *d, &unterminated);
            out += line.substr(i, end - i);
            i = end;
            continue;
        }
        bool matched_line_comment = false;
        for (const auto& m : profile.line_comment_markers) {
            if (line.substr(i, m.size()) == m) {
                matched_line_comment = true;
                break;
            }
        }
        if (matched_line_comment) break;  // rest of line is comment
        if (profile.block_comments && c == '/' && i + 1 < n && line[i + 1] == '*') {
            size_t close = line.find("*/", i + 2);
            if (close == std::string_view::npos) return std::nullopt;
            out.push_back(' ');
            i = close + 2;
            continue;
        }
        if (profile.block_comments && c == '*' && i + 1 < n && line[i + 1] == '/') {
            return std::nullopt;  // stray close: block comment spans this line
        }
        out.push_back(c);
        ++i;
    }
    return out;
}

LogLevel& log_level() {
    static LogLevel level = LogLevel::warn;
    return level;
}

void log_warn(const std::string& msg) {
    if (log_level() >= LogLevel::warn) std::fprintf(stderr, "[warn] %s\n", msg.c_str());
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::info) std::fprintf(stderr, "[info] %s\n", msg.c_str());
}

}  // namespace linefix
