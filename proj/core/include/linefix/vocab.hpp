// SPDX-License-Identifier: Apache-2.0
//
// Token vocabularies: frequency-ordered index maps with fixed reserved slots.
#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "linefix/tokenizer.hpp"

namespace linefix {

// Reserved indices. Every vocabulary starts with these, in this order.
inline constexpr int kPadIndex = 0;
inline constexpr int kStartIndex = 1;
inline constexpr int kEndIndex = 2;
inline constexpr int kUnkIndex = 3;
inline constexpr int kCamelIndex = 4;
inline constexpr int kStringIndex = 5;
inline constexpr int kNumberIndex = 6;
inline constexpr int kReservedCount = 7;

extern const char* const kReservedTokens[kReservedCount];

class Vocabulary {
public:
    Vocabulary() = default;

    /// Builds from token frequency counts: reserved tokens first, then
    /// tokens with count >= min_count by descending frequency, ties broken
    /// lexicographically, truncated to max_size entries total. Deterministic
    /// for any insertion order of the counts.
    static Vocabulary build(const std::unordered_map<std::string, uint64_t>& counts,
                            uint64_t min_count, size_t max_size);

    /// Single-pass convenience over a token-sequence corpus.
    static Vocabulary build(const std::vector<std::vector<std::string>>& corpus,
                            uint64_t min_count, size_t max_size);

    int index_of(const std::string& token) const;  // kUnkIndex when absent
    const std::string& token_at(int index) const;
    size_t size() const { return tokens_.size(); }

    std::vector<int> encode(const std::vector<std::string>& tokens) const;
    std::vector<std::string> decode(const std::vector<int>& indices) const;

    /// Content hash over the ordered token list.
    std::string fingerprint() const;

    /// (#tokens mapping to <UNK>) / (#tokens). Errors on an empty corpus.
    double oov_rate(const std::vector<std::vector<std::string>>& corpus) const;

    /// One token per line, reserved tokens first; sidecar "<path>.meta"
    /// carries size/min_count plus a trailing fingerprint comment record.
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

    const std::vector<std::string>& tokens() const { return tokens_; }

private:
    void reindex();
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
    uint64_t min_count_ = 0;
};

}  // namespace linefix
