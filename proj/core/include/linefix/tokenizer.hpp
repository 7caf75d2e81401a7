// SPDX-License-Identifier: Apache-2.0
//
// Reversible source-line tokenization.
//
// A line is split on whitespace and punctuation; identifiers are further
// split at case and letter<->digit boundaries with a <CAMEL> marker inserted
// at each split so the original identifier can be reassembled. Underscores
// are emitted as their own tokens and need no marker. String and numeric
// literals can be abstracted to <STRING>/<NUMBER> placeholders with the
// originals kept in an abstraction table, ordered by appearance.
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace linefix {

inline constexpr const char* kCamelToken  = "<CAMEL>";
inline constexpr const char* kStringToken = "<STRING>";
inline constexpr const char* kNumberToken = "<NUMBER>";

enum class Language { java, python, cpp, javascript };

const char* to_string(Language lang);
std::optional<Language> language_from_string(std::string_view name);
/// Maps a file extension (".java", ".py", ...) to a language, if known.
std::optional<Language> language_from_extension(std::string_view path);

struct StringDelimiter {
    char open;
    char close;
    char escape;  // 0 = no escape character
};

struct LanguageProfile {
    Language language;
    std::vector<std::string> line_comment_markers;
    std::vector<StringDelimiter> string_delimiters;
    bool block_comments = false;            // /* ... */
    std::vector<std::string> string_prefixes;  // e.g. "f", "r" in python, "L" in cpp
};

/// The four shipped profiles. References are stable for the process lifetime.
const LanguageProfile& profile_for(Language lang);

enum class AbstractionKind { string_literal, number_literal };

struct AbstractionEntry {
    AbstractionKind kind;
    std::string literal;  // verbatim source text, quotes/prefix included
};

struct TokenSequence {
    std::vector<std::string> tokens;
    std::vector<AbstractionEntry> abstraction_table;  // in order of appearance
    bool unterminated_literal = false;                // warning flag
};

/// Tokenize one source line. Comments must already be stripped.
/// With abstract=true, string literals become <STRING> and numeric literals
/// other than exactly "0" and "1" become <NUMBER>; the originals are recorded
/// in the abstraction table. Digit runs inside identifiers are never
/// abstracted; they are identifier fragments, not literals.
TokenSequence tokenize(std::string_view line, const LanguageProfile& profile,
                       bool abstract = false);

/// Inverse of tokenize modulo whitespace: joins tokens with single spaces,
/// then erases the spaces around <CAMEL> markers (dropping the marker) and
/// around underscore tokens that sit between identifier fragments.
/// Throws std::invalid_argument if the sequence still contains placeholders
/// or a <CAMEL> in an illegal position (first, last, adjacent to another).
std::string detokenize(const TokenSequence& seq);

/// Resolve <STRING>/<NUMBER> placeholders in a model output against the
/// literals present in the original buggy line and detokenize every
/// combination. Returns an empty list when a placeholder has no candidate
/// of its kind, or when the combination count exceeds `max_combinations`.
std::vector<std::string> reconstruct(const TokenSequence& seq,
                                     std::string_view buggy_line,
                                     const LanguageProfile& profile,
                                     size_t max_combinations = 64);

/// Remove comments from one line, string-literal aware. Returns nullopt when
/// the line cannot be handled with single-line context (an unterminated block
/// comment, a stray block-comment close, or a triple-quoted string).
std::optional<std::string> strip_comments(std::string_view line,
                                          const LanguageProfile& profile);

}  // namespace linefix
