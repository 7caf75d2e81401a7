// SPDX-License-Identifier: Apache-2.0
//
// Beam search over a trained network: keeps the t best hypotheses by
// accumulated log-probability, finished hypotheses competing in the same
// pool, and returns the top t sequences ordered by ascending NLL.
#pragma once

#include <vector>

#include "linefix/model.hpp"

namespace linefix {

struct Hypothesis {
    std::vector<int> tokens;  // generated tokens, <START>/<END> excluded
    double score = 0.0;       // sum of log-probabilities, <= 0
    bool finished = false;
    bool forced = false;      // finished by hitting max_len, not by <END>
};

struct BeamResult {
    std::vector<int> tokens;  // generated tokens, specials stripped
    double nll = 0.0;         // negative log-likelihood (lower is better)
    bool forced = false;
};

struct BeamOptions {
    size_t beam_width = 1000;
    size_t max_len = 100;         // generated tokens including <END>
    bool length_normalize = false;  // off: the ranking is raw likelihood
};

/// Decodes the top-t sequences for one encoded source. Deterministic: ties
/// in score break by token-index lexicographic order. The result is sorted
/// by ascending NLL and contains at most beam_width entries.
std::vector<BeamResult> beam_decode(const Network<float>& net,
                                    const std::vector<int>& src,
                                    const BeamOptions& opts);

/// Attention maps for one forced decode of `tokens` (without specials):
/// one matrix per decoder layer, shaped [source_len x output_len] — rows are
/// input positions, columns generated positions; columns sum to 1.
std::vector<Tensor<float>> attention_maps(const Network<float>& net,
                                          const std::vector<int>& src,
                                          const std::vector<int>& tokens);

}  // namespace linefix
