// SPDX-License-Identifier: Apache-2.0
#include "linefix/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "linefix/common.hpp"

namespace linefix {

const char* const kReservedTokens[kReservedCount] = {
    "<PAD>", "<START>", "<END>", "<UNK>", kCamelToken, kStringToken, kNumberToken};

namespace {
bool is_reserved(const std::string& t) {
    for (const char* r : kReservedTokens)
        if (t == r) return true;
    return false;
}
}  // namespace

Vocabulary Vocabulary::build(
    const std::unordered_map<std::string, uint64_t>& counts, uint64_t min_count,
    size_t max_size) {
    std::vector<std::pair<std::string, uint64_t>> ranked;
    ranked.reserve(counts.size());
    for (const auto& [tok, n] : counts) {
        if (n < min_count) continue;
        if (is_reserved(tok)) continue;  // reserved slots are fixed
        ranked.emplace_back(tok, n);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary v;
    v.min_count_ = min_count;
    for (const char* r : kReservedTokens) v.tokens_.emplace_back(r);
    for (auto& [tok, n] : ranked) {
        if (v.tokens_.size() >= max_size) break;
        v.tokens_.push_back(std::move(tok));
    }
    if (v.tokens_.size() == kReservedCount && !counts.empty())
        log_warn("vocabulary contains only reserved tokens (min_count too high?)");
    v.reindex();
    return v;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& corpus,
                             uint64_t min_count, size_t max_size) {
    std::unordered_map<std::string, uint64_t> counts;
    for (const auto& seq : corpus)
        for (const auto& tok : seq) ++counts[tok];
    return build(counts, min_count, max_size);
}

void Vocabulary::reindex() {
    index_.clear();
    for (size_t i = 0; i < tokens_.size(); ++i)
        index_[tokens_[i]] = static_cast<int>(i);
}

int Vocabulary::index_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnkIndex : it->second;
}

const std::string& Vocabulary::token_at(int index) const {
    if (index < 0 || static_cast<size_t>(index) >= tokens_.size())
        throw std::out_of_range("vocabulary index " + std::to_string(index));
    return tokens_[static_cast<size_t>(index)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(index_of(t));
    return out;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& indices) const {
    std::vector<std::string> out;
    out.reserve(indices.size());
    for (int i : indices) out.push_back(token_at(i));
    return out;
}

std::string Vocabulary::fingerprint() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& t : tokens_) {
        h = fnv1a64(t, h);
        h = fnv1a64("\n", h);
    }
    return hex64(h);
}

double Vocabulary::oov_rate(
    const std::vector<std::vector<std::string>>& corpus) const {
    uint64_t total = 0, unk = 0;
    for (const auto& seq : corpus)
        for (const auto& t : seq) {
            ++total;
            if (index_of(t) == kUnkIndex && t != kReservedTokens[kUnkIndex]) ++unk;
        }
    if (total == 0) throw std::invalid_argument("oov_rate: empty corpus");
    return static_cast<double>(unk) / static_cast<double>(total);
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    for (const auto& t : tokens_) out << t << '\n';

    std::ofstream meta(path + ".meta", std::ios::binary);
    meta << "size " << tokens_.size() << '\n';
    meta << "min_count " << min_count_ << '\n';
    meta << "# fingerprint " << fingerprint() << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    Vocabulary v;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        v.tokens_.push_back(line);
    }
    if (v.tokens_.size() < kReservedCount)
        throw std::runtime_error("vocabulary file too short: " + path);
    for (int i = 0; i < kReservedCount; ++i)
        if (v.tokens_[static_cast<size_t>(i)] != kReservedTokens[i])
            throw std::runtime_error("vocabulary reserved slots corrupt: " + path);
    v.reindex();
    return v;
}

}  // namespace linefix
