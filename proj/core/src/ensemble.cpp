// SPDX-License-Identifier: Apache-2.0
#include "linefix/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <thread>

#include <nlohmann/json.hpp>

namespace linefix {

HyperRanges HyperRanges::desk() {
    HyperRanges r;
    r.embed_min = 16;
    r.embed_max = 48;
    r.channel_choices = {16, 32, 48};
    r.kernel_min = 1;
    r.kernel_max = 5;
    r.layers_min = 1;
    r.layers_max = 2;
    r.dropout_min = 0.0;
    r.dropout_max = 0.3;
    r.clip_min = 0.2;
    r.clip_max = 1.0;
    r.lr_min = 0.05;
    r.lr_max = 0.6;
    r.momentum_min = 0.0;
    r.momentum_max = 0.95;
    return r;
}

HyperParams sample_hyperparams(const HyperRanges& ranges, Rng& rng) {
    HyperParams hp;
    size_t embed = static_cast<size_t>(rng.uniform_int(
        static_cast<int64_t>(ranges.embed_min), static_cast<int64_t>(ranges.embed_max)));
    hp.src_embed_dim = embed;
    hp.trg_embed_dim = embed;
    hp.out_embed_dim = static_cast<size_t>(rng.uniform_int(
        static_cast<int64_t>(ranges.embed_min), static_cast<int64_t>(ranges.embed_max)));

    size_t channels = ranges.channel_choices[static_cast<size_t>(rng.uniform_int(
        0, static_cast<int64_t>(ranges.channel_choices.size()) - 1))];
    size_t kernel = static_cast<size_t>(rng.uniform_int(
        static_cast<int64_t>(ranges.kernel_min), static_cast<int64_t>(ranges.kernel_max)));
    size_t depth = static_cast<size_t>(rng.uniform_int(
        static_cast<int64_t>(ranges.layers_min), static_cast<int64_t>(ranges.layers_max)));
    size_t enc_kernel = kernel % 2 == 0 ? kernel - 1 : kernel;
    if (enc_kernel == 0) enc_kernel = 1;
    hp.encoder_layers.assign(depth, {channels, enc_kernel});
    hp.decoder_layers.assign(depth, {channels, kernel});

    hp.dropout = rng.uniform(ranges.dropout_min, ranges.dropout_max);
    hp.clip_norm = ranges.clip_max - rng.uniform() * (ranges.clip_max - ranges.clip_min);
    hp.learning_rate = ranges.lr_max - rng.uniform() * (ranges.lr_max - ranges.lr_min);
    hp.momentum = rng.uniform(ranges.momentum_min, ranges.momentum_max);
    hp.optimizer = rng.coin() ? Optimizer::nag : Optimizer::sgd;
    hp.criterion = rng.coin() ? Criterion::smoothed : Criterion::default_ce;
    hp.seed = rng.next();
    hp.validate();
    return hp;
}

namespace {

TuningTrial run_trial(size_t index, const TuneOptions& opts,
                      const std::vector<EncodedPair>& train_set,
                      const std::vector<EncodedPair>& val_set) {
    TuningTrial trial;
    trial.index = index;
    Rng sample_rng(derive_seed(opts.master_seed, index));
    trial.hyper = sample_hyperparams(opts.ranges, sample_rng);

    auto t0 = std::chrono::steady_clock::now();
    try {
        Network<float> net(trial.hyper, opts.src_vocab_size, opts.trg_vocab_size,
                           opts.max_positions);
        OptimizerState<float> state;
        Rng train_rng(derive_seed(trial.hyper.seed, 0x45504f43ull));
        train_epoch(net, train_set, opts.batch_size, train_rng, state);
        double ppl = perplexity(net, val_set);
        if (std::isfinite(ppl)) {
            trial.val_perplexity = ppl;
            trial.ok = true;
            if (!opts.keep_weights_dir.empty()) {
                auto ckpt = checkpoint_from_network(net, opts.src_fingerprint,
                                                    opts.trg_fingerprint, 1, ppl);
                std::filesystem::create_directories(opts.keep_weights_dir);
                char name[32];
                std::snprintf(name, sizeof(name), "trial_%04zu.ckpt", index);
                save_checkpoint(
                    (std::filesystem::path(opts.keep_weights_dir) / name).string(),
                    ckpt);
            }
        }
    } catch (const TrainDivergence& e) {
        log_warn("trial " + std::to_string(index) + " diverged: " + e.what());
    } catch (const std::exception& e) {
        log_warn("trial " + std::to_string(index) + " failed: " + e.what());
    }
    trial.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return trial;
}

}  // namespace

std::vector<TuningTrial> tune(const std::vector<EncodedPair>& train_set,
                              const std::vector<EncodedPair>& val_set,
                              const TuneOptions& opts) {
    std::vector<TuningTrial> trials(opts.budget);
    if (opts.budget == 0) return trials;
    if (opts.src_vocab_size == 0 || opts.trg_vocab_size == 0)
        throw std::invalid_argument("tune: vocabulary sizes required");

    if (opts.workers <= 1) {
        for (size_t i = 0; i < opts.budget; ++i)
            trials[i] = run_trial(i, opts, train_set, val_set);
    } else {
        std::atomic<size_t> next{0};
        auto work = [&]() {
            for (;;) {
                size_t i = next.fetch_add(1);
                if (i >= opts.budget) return;
                trials[i] = run_trial(i, opts, train_set, val_set);
            }
        };
        std::vector<std::thread> pool;
        int n = std::min<int>(opts.workers, static_cast<int>(opts.budget));
        for (int w = 0; w < n; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    std::sort(trials.begin(), trials.end(), [](const auto& a, const auto& b) {
        if (a.val_perplexity != b.val_perplexity)
            return a.val_perplexity < b.val_perplexity;
        return a.index < b.index;
    });
    return trials;
}

std::string trial_to_json_line(const TuningTrial& trial) {
    // wall_seconds deliberately excluded: reports must be byte-identical
    // across reruns with the same seed.
    nlohmann::json j;
    j["trial"] = trial.index;
    j["hyper"] = trial.hyper.to_json();
    j["status"] = trial.ok ? "ok" : "diverged";
    if (trial.ok)
        j["val_perplexity"] = trial.val_perplexity;
    else
        j["val_perplexity"] = "inf";
    return j.dump();
}

std::optional<TrainedModel> train_until_convergence(
    const HyperParams& hyper, const std::vector<EncodedPair>& train_set,
    const std::vector<EncodedPair>& val_set, const ConvergenceOptions& opts,
    const std::string& src_fingerprint, const std::string& trg_fingerprint,
    size_t src_vocab_size, size_t trg_vocab_size, const Checkpoint* resume) {
    try {
        Network<float> net =
            resume ? network_from_checkpoint(*resume)
                   : Network<float>(hyper, src_vocab_size, trg_vocab_size,
                                    opts.max_positions);
        OptimizerState<float> state;
        Rng rng(derive_seed(hyper.seed, 0x434f4e56ull));

        TrainedModel best;
        size_t since_improvement = 0;
        for (size_t epoch = 1; epoch <= opts.max_epochs; ++epoch) {
            train_epoch(net, train_set, opts.batch_size, rng, state);
            double ppl = perplexity(net, val_set);
            if (!std::isfinite(ppl)) throw TrainDivergence(epoch);
            if (ppl < best.best_val_perplexity) {
                best.best_val_perplexity = ppl;
                best.epochs = epoch;
                best.checkpoint = checkpoint_from_network(
                    net, src_fingerprint, trg_fingerprint, epoch, ppl);
                since_improvement = 0;
            } else if (++since_improvement >= opts.patience) {
                break;
            }
        }
        if (best.epochs == 0) return std::nullopt;
        return best;
    } catch (const std::exception& e) {
        log_warn(std::string("training failed: ") + e.what());
        return std::nullopt;
    }
}

std::vector<TrainedModel> train_topk(const std::vector<TuningTrial>& ranked,
                                     size_t k,
                                     const std::vector<EncodedPair>& train_set,
                                     const std::vector<EncodedPair>& val_set,
                                     const ConvergenceOptions& opts,
                                     const std::string& src_fingerprint,
                                     const std::string& trg_fingerprint,
                                     size_t src_vocab_size,
                                     size_t trg_vocab_size) {
    std::vector<TrainedModel> models;
    size_t taken = 0;
    for (const auto& trial : ranked) {
        if (taken >= k) break;
        if (!trial.ok) continue;
        ++taken;
        auto trained = train_until_convergence(
            trial.hyper, train_set, val_set, opts, src_fingerprint,
            trg_fingerprint, src_vocab_size, trg_vocab_size);
        if (!trained) {
            log_warn("top-k member (trial " + std::to_string(trial.index) +
                     ") failed to converge; ensemble will be smaller");
            continue;
        }
        models.push_back(std::move(*trained));
    }
    return models;
}

std::vector<RankedPatch> merge_rank(
    const std::vector<std::vector<BeamResult>>& per_model) {
    std::map<std::vector<int>, RankedPatch> merged;
    for (size_t model = 0; model < per_model.size(); ++model) {
        for (const auto& result : per_model[model]) {
            auto it = merged.find(result.tokens);
            if (it == merged.end()) {
                RankedPatch p;
                p.tokens = result.tokens;
                p.nll = result.nll;
                p.best_model = model;
                p.model_ids = {model};
                merged.emplace(result.tokens, std::move(p));
            } else {
                RankedPatch& p = it->second;
                if (p.model_ids.empty() || p.model_ids.back() != model)
                    p.model_ids.push_back(model);
                if (result.nll < p.nll) {
                    p.nll = result.nll;
                    p.best_model = model;
                }
            }
        }
    }
    std::vector<RankedPatch> out;
    out.reserve(merged.size());
    for (auto& [tokens, patch] : merged) out.push_back(std::move(patch));
    std::sort(out.begin(), out.end(), [](const RankedPatch& a, const RankedPatch& b) {
        if (a.nll != b.nll) return a.nll < b.nll;
        if (a.best_model != b.best_model) return a.best_model < b.best_model;
        return a.tokens < b.tokens;
    });
    return out;
}

}  // namespace linefix
