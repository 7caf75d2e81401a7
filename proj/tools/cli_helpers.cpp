// SPDX-License-Identifier: Apache-2.0
#include "cli_helpers.hpp"

#include <fstream>
#include <numeric>

#include "linefix/common.hpp"
#include "linefix/tokenizer.hpp"

namespace linefix::cli {

TokenizedCorpus tokenize_corpus(const std::vector<BugFixPair>& pairs) {
    TokenizedCorpus out;
    out.src.reserve(pairs.size());
    out.trg.reserve(pairs.size());
    for (const auto& p : pairs) {
        const auto& profile = profile_for(p.language);
        out.src.push_back(tokenize(p.buggy, profile, true).tokens);
        out.trg.push_back(tokenize(p.fixed, profile, true).tokens);
    }
    return out;
}

std::vector<EncodedPair> encode_corpus(const TokenizedCorpus& corpus,
                                       const Vocabulary& src_vocab,
                                       const Vocabulary& trg_vocab,
                                       size_t max_positions) {
    std::vector<EncodedPair> out;
    out.reserve(corpus.src.size());
    size_t dropped = 0;
    for (size_t i = 0; i < corpus.src.size(); ++i) {
        if (corpus.src[i].empty() || corpus.trg[i].empty()) {
            ++dropped;
            continue;
        }
        if (corpus.src[i].size() > max_positions - 2 ||
            corpus.trg[i].size() > max_positions - 2) {
            ++dropped;
            continue;
        }
        out.push_back({src_vocab.encode(corpus.src[i]),
                       trg_vocab.encode(corpus.trg[i])});
    }
    if (dropped > 0)
        log_warn(std::to_string(dropped) +
                 " pairs dropped (empty or longer than max positions)");
    return out;
}

size_t default_val_count(size_t n) {
    size_t tenth = n / 10;
    size_t count = std::min<size_t>(2000, tenth);
    return std::max<size_t>(1, count);
}

void split_train_val(const std::vector<EncodedPair>& all, size_t val_count,
                     uint64_t seed, std::vector<EncodedPair>* train,
                     std::vector<EncodedPair>* val) {
    if (all.size() < 2) throw std::runtime_error("need at least 2 pairs to split");
    if (val_count >= all.size())
        throw std::runtime_error("validation split would consume the train set");
    std::vector<size_t> order(all.size());
    std::iota(order.begin(), order.end(), size_t{0});
    Rng rng(derive_seed(seed, 0x53504c49ull));
    for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<size_t>(rng.uniform_int(
                                    0, static_cast<int64_t>(i) - 1))]);
    train->clear();
    val->clear();
    for (size_t i = 0; i < order.size(); ++i) {
        if (i < val_count)
            val->push_back(all[order[i]]);
        else
            train->push_back(all[order[i]]);
    }
}

namespace {
std::string csv_cell(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}
}  // namespace

void write_attention_csv(const std::string& path, const Tensor<float>& grid,
                         const std::vector<std::string>& input_tokens,
                         const std::vector<std::string>& output_tokens) {
    if (grid.rows() != input_tokens.size() || grid.cols() != output_tokens.size())
        throw std::invalid_argument("attention grid does not match token counts");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << "input\\output";
    for (const auto& t : output_tokens) out << ',' << csv_cell(t);
    out << '\n';
    for (size_t i = 0; i < grid.rows(); ++i) {
        out << csv_cell(input_tokens[i]);
        for (size_t j = 0; j < grid.cols(); ++j) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.9g", grid.at(i, j));
            out << ',' << buf;
        }
        out << '\n';
    }
}

}  // namespace linefix::cli
