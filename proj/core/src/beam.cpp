// SPDX-License-Identifier: Apache-2.0
#include "linefix/beam.hpp"

#include <algorithm>
#include <stdexcept>

#include "linefix/train.hpp"

namespace linefix {

namespace {

std::vector<double> log_softmax_vec(const std::vector<float>& logits) {
    double mx = logits[0];
    for (float v : logits) mx = std::max(mx, static_cast<double>(v));
    double z = 0.0;
    for (float v : logits) z += std::exp(static_cast<double>(v) - mx);
    double lse = mx + std::log(z);
    std::vector<double> out(logits.size());
    for (size_t i = 0; i < logits.size(); ++i)
        out[i] = static_cast<double>(logits[i]) - lse;
    return out;
}

struct LiveHyp {
    std::vector<int> tokens;
    double score = 0.0;
    bool finished = false;
    bool forced = false;
    // decoder state after consuming <START> + tokens, and the resulting
    // next-token log-probabilities; absent for finished hypotheses
    std::shared_ptr<Network<float>::DecoderStream> stream;
    std::vector<double> logp;
};

struct Candidate {
    size_t parent;
    int token;  // -1: carry a finished hypothesis forward unchanged
    double score;
    bool finishes;
};

// score desc, then token-sequence lexicographic asc, then finished-first.
bool candidate_better(const std::vector<LiveHyp>& pool, const Candidate& a,
                      const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    const auto& ta = pool[a.parent].tokens;
    const auto& tb = pool[b.parent].tokens;
    size_t la = ta.size() + (a.token >= 0 && !a.finishes ? 1 : 0);
    size_t lb = tb.size() + (b.token >= 0 && !b.finishes ? 1 : 0);
    auto at = [&](size_t i) {
        return i < ta.size() ? ta[i] : a.token;
    };
    auto bt = [&](size_t i) {
        return i < tb.size() ? tb[i] : b.token;
    };
    for (size_t i = 0; i < std::min(la, lb); ++i) {
        if (at(i) != bt(i)) return at(i) < bt(i);
    }
    if (la != lb) return la < lb;
    bool fa = a.finishes || a.token < 0;
    bool fb = b.finishes || b.token < 0;
    return fa && !fb;
}

}  // namespace

std::vector<BeamResult> beam_decode(const Network<float>& net,
                                    const std::vector<int>& src,
                                    const BeamOptions& opts) {
    if (opts.beam_width < 1) throw std::invalid_argument("beam_width must be >= 1");
    if (opts.max_len < 2) throw std::invalid_argument("max_len must be >= 2");

    Tape<float> enc_tape(/*recording=*/false);
    auto enc = net.encode(enc_tape, src);
    const size_t v = net.trg_vocab();

    std::vector<LiveHyp> pool(1);
    pool[0].stream =
        std::make_shared<Network<float>::DecoderStream>(net.stream(enc));
    pool[0].logp = log_softmax_vec(pool[0].stream->step(kStartIndex));

    for (size_t step = 0; step < opts.max_len; ++step) {
        bool any_unfinished = false;
        std::vector<Candidate> candidates;
        candidates.reserve(pool.size() * v);
        for (size_t h = 0; h < pool.size(); ++h) {
            if (pool[h].finished) {
                candidates.push_back({h, -1, pool[h].score, true});
                continue;
            }
            any_unfinished = true;
            for (size_t tok = 0; tok < v; ++tok)
                candidates.push_back({h, static_cast<int>(tok),
                                      pool[h].score + pool[h].logp[tok],
                                      static_cast<int>(tok) == kEndIndex});
        }
        if (!any_unfinished) break;

        size_t keep = std::min(opts.beam_width, candidates.size());
        std::partial_sort(candidates.begin(),
                          candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                          candidates.end(),
                          [&pool](const Candidate& a, const Candidate& b) {
                              return candidate_better(pool, a, b);
                          });
        candidates.resize(keep);

        std::vector<LiveHyp> next;
        next.reserve(keep);
        for (const auto& c : candidates) {
            const LiveHyp& parent = pool[c.parent];
            LiveHyp hyp;
            hyp.tokens = parent.tokens;
            hyp.score = c.score;
            if (c.token < 0) {  // carried finished hypothesis
                hyp.finished = true;
                hyp.forced = parent.forced;
            } else if (c.finishes) {
                hyp.finished = true;
            } else {
                hyp.tokens.push_back(c.token);
                hyp.stream = std::make_shared<Network<float>::DecoderStream>(
                    *parent.stream);
                hyp.logp = log_softmax_vec(hyp.stream->step(c.token));
            }
            next.push_back(std::move(hyp));
        }
        pool = std::move(next);
    }

    for (auto& hyp : pool) {
        if (!hyp.finished) {
            hyp.finished = true;
            hyp.forced = true;
        }
        hyp.stream.reset();
        hyp.logp.clear();
    }
    std::sort(pool.begin(), pool.end(), [](const LiveHyp& a, const LiveHyp& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.tokens != b.tokens) return a.tokens < b.tokens;
        return a.forced < b.forced;
    });

    std::vector<BeamResult> out;
    out.reserve(pool.size());
    for (auto& hyp : pool)
        out.push_back({std::move(hyp.tokens), -hyp.score, hyp.forced});
    if (opts.length_normalize) {
        std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
            double la = a.nll / std::max<size_t>(1, a.tokens.size() + 1);
            double lb = b.nll / std::max<size_t>(1, b.tokens.size() + 1);
            return la < lb;
        });
    }
    return out;
}

std::vector<Tensor<float>> attention_maps(const Network<float>& net,
                                          const std::vector<int>& src,
                                          const std::vector<int>& tokens) {
    Tape<float> tape(/*recording=*/false);
    auto enc = net.encode(tape, src);
    std::vector<int> prefix;
    prefix.reserve(tokens.size() + 1);
    prefix.push_back(kStartIndex);
    prefix.insert(prefix.end(), tokens.begin(), tokens.end());
    auto dec = net.decode(tape, enc, prefix);

    // internal rows are generated positions; exported maps are input-major.
    std::vector<Tensor<float>> maps;
    const size_t m = enc.length;
    const size_t n = tokens.size();
    for (const auto& probs : dec.attention) {
        Tensor<float> grid({m, n});
        for (size_t col = 0; col < n; ++col)         // column = generated token
            for (size_t row = 0; row < m; ++row)     // row = input position
                grid.at(row, col) = probs->val.at(col, row);
        maps.push_back(std::move(grid));
    }
    return maps;
}

}  // namespace linefix
