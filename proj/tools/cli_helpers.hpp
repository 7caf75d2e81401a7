// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "linefix/ensemble.hpp"
#include "linefix/miner.hpp"
#include "linefix/train.hpp"
#include "linefix/vocab.hpp"

namespace linefix::cli {

struct TokenizedCorpus {
    std::vector<std::vector<std::string>> src;  // abstracted buggy-line tokens
    std::vector<std::vector<std::string>> trg;  // abstracted fixed-line tokens
};

TokenizedCorpus tokenize_corpus(const std::vector<BugFixPair>& pairs);

/// Vocab-encodes the corpus; sequences longer than max_positions-2 are
/// dropped with a warning so position embeddings always cover them.
std::vector<EncodedPair> encode_corpus(const TokenizedCorpus& corpus,
                                       const Vocabulary& src_vocab,
                                       const Vocabulary& trg_vocab,
                                       size_t max_positions);

/// Deterministic validation split: seeded shuffle, first `val_count` out.
void split_train_val(const std::vector<EncodedPair>& all, size_t val_count,
                     uint64_t seed, std::vector<EncodedPair>* train,
                     std::vector<EncodedPair>* val);

size_t default_val_count(size_t n);

/// Writes one attention grid as CSV: header row carries the output tokens,
/// header column the input tokens, cells the attention weights.
void write_attention_csv(const std::string& path, const Tensor<float>& grid,
                         const std::vector<std::string>& input_tokens,
                         const std::vector<std::string>& output_tokens);

}  // namespace linefix::cli
