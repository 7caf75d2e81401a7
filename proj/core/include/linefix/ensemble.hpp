// SPDX-License-Identifier: Apache-2.0
//
// Random hyper-parameter search, top-k training, and merged ranking of
// multi-model beam outputs (duplicates keep their best score).
#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "linefix/beam.hpp"
#include "linefix/checkpoint.hpp"
#include "linefix/train.hpp"

namespace linefix {

/// Sampling bounds for the random search. Embedding sizes 50-500,
/// convolution channels 128*(1..5), kernel widths 1-10, layer counts 1-10,
/// rates over the unit interval.
struct HyperRanges {
    size_t embed_min = 50, embed_max = 500;
    std::vector<size_t> channel_choices = {128, 256, 384, 512, 640};
    size_t kernel_min = 1, kernel_max = 10;
    size_t layers_min = 1, layers_max = 10;
    double dropout_min = 0.0, dropout_max = 1.0;    // [min, max)
    double clip_min = 0.0, clip_max = 1.0;          // (min, max]
    double lr_min = 0.0, lr_max = 1.0;              // (min, max]
    double momentum_min = 0.0, momentum_max = 1.0;  // [min, max)

    static HyperRanges paper_defaults() { return {}; }
    /// Shrunk bounds that keep one-epoch trials cheap on a laptop core.
    static HyperRanges desk();
};

/// One uniform draw per field. The input-embedding dimension is drawn once
/// and shared by encoder and decoder; one (channels, kernel, depth) triple
/// shapes both stacks. Encoder kernels are rounded down to the nearest odd
/// width to satisfy the symmetric-padding requirement.
HyperParams sample_hyperparams(const HyperRanges& ranges, Rng& rng);

struct TuningTrial {
    size_t index = 0;
    HyperParams hyper;
    double val_perplexity = std::numeric_limits<double>::infinity();
    double wall_seconds = 0.0;  // console diagnostics only; not in reports
    bool ok = false;            // false: diverged or failed
};

struct TuneOptions {
    size_t budget = 10;
    int workers = 1;
    uint64_t master_seed = 1;
    HyperRanges ranges;
    size_t batch_size = 32;
    size_t max_positions = 128;
    std::string keep_weights_dir;  // empty: do not save per-trial weights
    std::string src_fingerprint;
    std::string trg_fingerprint;
    size_t src_vocab_size = 0;
    size_t trg_vocab_size = 0;
};

/// Runs `budget` one-epoch trials with per-trial seeds derived from the
/// master seed and returns them ranked by ascending validation perplexity
/// (ties by trial index). Diverged trials rank last with infinite
/// perplexity. The ranking is identical for any worker count.
std::vector<TuningTrial> tune(const std::vector<EncodedPair>& train_set,
                              const std::vector<EncodedPair>& val_set,
                              const TuneOptions& opts);

std::string trial_to_json_line(const TuningTrial& trial);

struct ConvergenceOptions {
    size_t batch_size = 32;
    size_t max_epochs = 200;
    size_t patience = 3;  // epochs without validation improvement
    size_t max_positions = 128;
};

struct TrainedModel {
    Checkpoint checkpoint;  // best-validation weights
    size_t epochs = 0;
    double best_val_perplexity = std::numeric_limits<double>::infinity();
};

/// Trains one configuration until the validation perplexity stops improving
/// for `patience` epochs. Starts from fresh initialization unless `resume`
/// is given. Returns nullopt when training diverges.
std::optional<TrainedModel> train_until_convergence(
    const HyperParams& hyper, const std::vector<EncodedPair>& train_set,
    const std::vector<EncodedPair>& val_set, const ConvergenceOptions& opts,
    const std::string& src_fingerprint, const std::string& trg_fingerprint,
    size_t src_vocab_size, size_t trg_vocab_size,
    const Checkpoint* resume = nullptr);

/// Fresh-start training of the k best ranked trials. Models that diverge
/// are excluded with a warning, so the result may be shorter than k.
std::vector<TrainedModel> train_topk(const std::vector<TuningTrial>& ranked,
                                     size_t k,
                                     const std::vector<EncodedPair>& train_set,
                                     const std::vector<EncodedPair>& val_set,
                                     const ConvergenceOptions& opts,
                                     const std::string& src_fingerprint,
                                     const std::string& trg_fingerprint,
                                     size_t src_vocab_size,
                                     size_t trg_vocab_size);

struct RankedPatch {
    std::vector<int> tokens;
    double nll = 0.0;               // best (lowest) across contributors
    size_t best_model = 0;          // model owning the best score
    std::vector<size_t> model_ids;  // every contributor, ascending
};

/// Union of per-model beam outputs. Duplicate sequences keep the lowest
/// NLL; the list is sorted ascending by NLL with ties broken by
/// (best model id, lexicographic tokens). Idempotent.
std::vector<RankedPatch> merge_rank(
    const std::vector<std::vector<BeamResult>>& per_model);

}  // namespace linefix
