// SPDX-License-Identifier: Apache-2.0
//
// Training: cross-entropy criteria, SGD/NAG with global-norm clipping,
// epoch loop, perplexity evaluation, and the finite-difference harness.
#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "linefix/model.hpp"

namespace linefix {

inline constexpr double kLabelSmoothingEps = 0.1;

/// One vocabulary-encoded training pair, without framing tokens.
struct EncodedPair {
    std::vector<int> src;
    std::vector<int> trg;
};

inline std::vector<int> decoder_input_for(const std::vector<int>& trg) {
    std::vector<int> in;
    in.reserve(trg.size() + 1);
    in.push_back(kStartIndex);
    in.insert(in.end(), trg.begin(), trg.end());
    return in;
}

inline std::vector<int> decoder_target_for(const std::vector<int>& trg) {
    std::vector<int> out(trg);
    out.push_back(kEndIndex);
    return out;
}

/// Token-level cross entropy over a logits matrix [n, V].
/// reduction: per-token mean when `mean` is true, else sum.
/// criterion `smoothed` spreads eps=0.1 of the target mass uniformly over
/// the non-target tokens. <PAD> rows are excluded via `pad_mask` (true =
/// keep). `nll_sum_out`, when given, receives the plain (default-criterion)
/// NLL sum in double precision regardless of the training criterion.
template <class T>
NodePtr<T> cross_entropy(Tape<T>& tape, const NodePtr<T>& logits,
                         const std::vector<int>& targets, Criterion criterion,
                         bool mean = true,
                         const std::vector<bool>* pad_mask = nullptr,
                         double* nll_sum_out = nullptr) {
    const size_t n = logits->val.rows();
    const size_t v = logits->val.cols();
    if (targets.size() != n)
        throw std::invalid_argument("cross_entropy: length mismatch (" +
                                    std::to_string(n) + " logit rows, " +
                                    std::to_string(targets.size()) + " targets)");
    if (pad_mask && pad_mask->size() != n)
        throw std::invalid_argument("cross_entropy: mask length mismatch");

    size_t counted = 0;
    double loss_sum = 0.0, nll_sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        if (pad_mask && !(*pad_mask)[i]) continue;
        int t = targets[i];
        if (t < 0 || static_cast<size_t>(t) >= v)
            throw std::out_of_range("cross_entropy: target out of range");
        const T* zi = logits->val.row(i);
        double mx = static_cast<double>(zi[0]);
        for (size_t j = 1; j < v; ++j)
            mx = std::max(mx, static_cast<double>(zi[j]));
        double sum_exp = 0.0, sum_z = 0.0;
        for (size_t j = 0; j < v; ++j) {
            sum_exp += std::exp(static_cast<double>(zi[j]) - mx);
            sum_z += static_cast<double>(zi[j]);
        }
        double lse = mx + std::log(sum_exp);
        double nll = lse - static_cast<double>(zi[static_cast<size_t>(t)]);
        nll_sum += nll;
        if (criterion == Criterion::default_ce) {
            loss_sum += nll;
        } else {
            // sum over non-target tokens of (lse - z_j), spread uniformly
            double total_gap = static_cast<double>(v) * lse - sum_z;
            double other = total_gap - nll;
            loss_sum += (1.0 - kLabelSmoothingEps) * nll +
                        kLabelSmoothingEps / static_cast<double>(v - 1) * other;
        }
        ++counted;
    }
    if (counted == 0)
        throw std::invalid_argument("cross_entropy: no unmasked positions");
    if (nll_sum_out) *nll_sum_out = nll_sum;

    auto out = std::make_shared<Node<T>>();
    out->val = Tensor<T>({1});
    out->val.v[0] =
        static_cast<T>(mean ? loss_sum / static_cast<double>(counted) : loss_sum);

    if (tape.recording() && logits->requires_grad) {
        out->requires_grad = true;
        out->ensure_grad();
        std::vector<int> tcopy = targets;
        std::vector<bool> mcopy =
            pad_mask ? *pad_mask : std::vector<bool>(n, true);
        tape.record([logits, out, tcopy = std::move(tcopy),
                     mcopy = std::move(mcopy), criterion, mean, counted, n, v]() {
            logits->ensure_grad();
            const T upstream = out->grad.v[0];
            const T norm =
                mean ? upstream / static_cast<T>(counted) : upstream;
            for (size_t i = 0; i < n; ++i) {
                if (!mcopy[i]) continue;
                const T* zi = logits->val.row(i);
                T* gi = logits->grad.row(i);
                T mx = zi[0];
                for (size_t j = 1; j < v; ++j) mx = std::max(mx, zi[j]);
                T sum_exp = T(0);
                for (size_t j = 0; j < v; ++j) sum_exp += std::exp(zi[j] - mx);
                const int t = tcopy[i];
                for (size_t j = 0; j < v; ++j) {
                    T p = std::exp(zi[j] - mx) / sum_exp;
                    T q;
                    if (criterion == Criterion::default_ce) {
                        q = (static_cast<int>(j) == t) ? T(1) : T(0);
                    } else {
                        q = (static_cast<int>(j) == t)
                                ? T(1.0 - kLabelSmoothingEps)
                                : T(kLabelSmoothingEps / static_cast<double>(v - 1));
                    }
                    gi[j] += norm * (p - q);
                }
            }
        });
    }
    return out;
}

// --------------------------------------------------------------- optimizer

template <class T>
struct OptimizerState {
    std::vector<Tensor<T>> velocity;  // parallel to net.params()

    void ensure(const Network<T>& net) {
        if (!velocity.empty()) return;
        for (const auto& [name, p] : net.params())
            velocity.push_back(Tensor<T>(p->val.shape));
    }
};

/// Global L2 norm over all parameter gradients.
template <class T>
double grad_global_norm(const Network<T>& net) {
    double sq = 0.0;
    for (const auto& [name, p] : net.params())
        for (const T& g : p->grad.v) sq += static_cast<double>(g) * g;
    return std::sqrt(sq);
}

/// Scales all gradients so the global norm is at most clip_norm.
/// Returns the pre-clip norm.
template <class T>
double clip_gradients(Network<T>& net, double clip_norm) {
    double norm = grad_global_norm(net);
    if (norm > clip_norm && norm > 0.0) {
        T s = static_cast<T>(clip_norm / norm);
        for (auto& [name, p] : net.params())
            for (T& g : p->grad.v) g *= s;
    }
    return norm;
}

/// In-place momentum update of one tensor.
/// sgd: v = mu*v + g; w -= lr*v.  nag: v = mu*v + g; w -= lr*(g + mu*v).
template <class T>
void momentum_update(Tensor<T>& weights, const Tensor<T>& grads,
                     Tensor<T>& velocity, T lr, T mu, Optimizer kind) {
    for (size_t i = 0; i < weights.size(); ++i) {
        const T g = grads.v[i];
        velocity.v[i] = mu * velocity.v[i] + g;
        if (kind == Optimizer::sgd)
            weights.v[i] -= lr * velocity.v[i];
        else
            weights.v[i] -= lr * (g + mu * velocity.v[i]);
    }
}

/// One optimizer step from the accumulated gradients.
template <class T>
void optimizer_step(Network<T>& net, OptimizerState<T>& state) {
    state.ensure(net);
    const auto& hp = net.hyper();
    auto& params = net.params();
    for (size_t k = 0; k < params.size(); ++k)
        momentum_update(params[k].second->val, params[k].second->grad,
                        state.velocity[k], static_cast<T>(hp.learning_rate),
                        static_cast<T>(hp.momentum), hp.optimizer);
}

// ------------------------------------------------------------- epoch loop

struct EpochStats {
    double mean_loss = 0.0;   // token-weighted criterion loss
    double perplexity = 0.0;  // exp(mean_loss)
    size_t batches = 0;
    size_t tokens = 0;
    double grad_norm_last = 0.0;
};

struct TrainDivergence : std::runtime_error {
    size_t batch_index;
    explicit TrainDivergence(size_t batch)
        : std::runtime_error("non-finite loss in batch " + std::to_string(batch)),
          batch_index(batch) {}
};

/// One teacher-forced pass over `data` in seeded-shuffle order. Gradients
/// are token-mean per batch, clipped at hp.clip_norm. Deterministic given
/// the RNG state. Throws TrainDivergence when a batch loss is non-finite.
template <class T>
EpochStats train_epoch(Network<T>& net, const std::vector<EncodedPair>& data,
                       size_t batch_size, Rng& rng, OptimizerState<T>& opt) {
    if (data.empty()) throw std::invalid_argument("train_epoch: no data");
    if (batch_size == 0) throw std::invalid_argument("train_epoch: batch_size 0");

    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), size_t{0});
    for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1],
                  order[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i) - 1))]);

    EpochStats stats;
    double loss_weighted = 0.0;
    for (size_t start = 0; start < order.size(); start += batch_size) {
        size_t end = std::min(order.size(), start + batch_size);
        net.zero_grads();
        double batch_loss_sum = 0.0;
        size_t batch_tokens = 0;
        for (size_t k = start; k < end; ++k) {
            const EncodedPair& ex = data[order[k]];
            Tape<T> tape;
            auto enc = net.encode(tape, ex.src, /*train=*/true, &rng);
            auto dec_in = decoder_input_for(ex.trg);
            auto dec = net.decode(tape, enc, dec_in, /*train=*/true, &rng);
            auto loss = cross_entropy(tape, dec.logits, decoder_target_for(ex.trg),
                                      net.hyper().criterion, /*mean=*/false);
            batch_loss_sum += static_cast<double>(loss->val.v[0]);
            batch_tokens += dec_in.size();
            tape.backward(loss);
        }
        if (!std::isfinite(batch_loss_sum))
            throw TrainDivergence(stats.batches);
        // token-mean gradient
        T inv = static_cast<T>(1.0 / static_cast<double>(batch_tokens));
        for (auto& [name, p] : net.params())
            for (T& g : p->grad.v) g *= inv;
        stats.grad_norm_last = clip_gradients(net, net.hyper().clip_norm);
        optimizer_step(net, opt);

        loss_weighted += batch_loss_sum;
        stats.tokens += batch_tokens;
        ++stats.batches;
    }
    stats.mean_loss = loss_weighted / static_cast<double>(stats.tokens);
    stats.perplexity = std::exp(stats.mean_loss);
    return stats;
}

// ------------------------------------------------------------- evaluation

/// exp(mean per-token NLL, default criterion), dropout off.
/// Accumulation is double precision throughout. Errors on empty data.
template <class T>
double perplexity(const Network<T>& net, const std::vector<EncodedPair>& data) {
    if (data.empty()) throw std::invalid_argument("perplexity: empty data");
    double nll_sum = 0.0;
    size_t tokens = 0;
    for (const auto& ex : data) {
        Tape<T> tape(/*recording=*/false);
        auto enc = net.encode(tape, ex.src);
        auto dec = net.decode(tape, enc, decoder_input_for(ex.trg));
        double seq_nll = 0.0;
        cross_entropy(tape, dec.logits, decoder_target_for(ex.trg),
                      Criterion::default_ce, /*mean=*/false, nullptr, &seq_nll);
        nll_sum += seq_nll;
        tokens += ex.trg.size() + 1;
    }
    return std::exp(nll_sum / static_cast<double>(tokens));
}

/// Per-token log-probabilities of `continuation` given `prefix_state`
/// evaluated in double precision; used by beam scoring and its tests.
template <class T>
std::vector<double> log_softmax_row(const Tensor<T>& logits, size_t row) {
    const size_t v = logits.cols();
    const T* zi = logits.row(row);
    double mx = static_cast<double>(zi[0]);
    for (size_t j = 1; j < v; ++j) mx = std::max(mx, static_cast<double>(zi[j]));
    double sum_exp = 0.0;
    for (size_t j = 0; j < v; ++j)
        sum_exp += std::exp(static_cast<double>(zi[j]) - mx);
    double lse = mx + std::log(sum_exp);
    std::vector<double> out(v);
    for (size_t j = 0; j < v; ++j) out[j] = static_cast<double>(zi[j]) - lse;
    return out;
}

// -------------------------------------------------- finite-difference check

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_param;
    size_t checked = 0;
};

/// Central finite differences on every parameter scalar of a (small)
/// double-precision network against the tape gradients. `h` defaults to
/// the verification harness step of 1e-3.
inline GradCheckResult finite_difference_check(Network<double>& net,
                                               const EncodedPair& example,
                                               Criterion criterion,
                                               double h = 1e-3) {
    auto eval = [&]() {
        Tape<double> tape(/*recording=*/false);
        auto enc = net.encode(tape, example.src);
        auto dec = net.decode(tape, enc, decoder_input_for(example.trg));
        auto loss = cross_entropy(tape, dec.logits,
                                  decoder_target_for(example.trg), criterion);
        return static_cast<double>(loss->val.v[0]);
    };

    net.zero_grads();
    {
        Tape<double> tape;
        auto enc = net.encode(tape, example.src);
        auto dec = net.decode(tape, enc, decoder_input_for(example.trg));
        auto loss = cross_entropy(tape, dec.logits,
                                  decoder_target_for(example.trg), criterion);
        tape.backward(loss);
    }

    GradCheckResult res;
    for (auto& [name, p] : net.params()) {
        for (size_t i = 0; i < p->val.size(); ++i) {
            double saved = p->val.v[i];
            p->val.v[i] = saved + h;
            double fp = eval();
            p->val.v[i] = saved - h;
            double fm = eval();
            p->val.v[i] = saved;
            double numeric = (fp - fm) / (2.0 * h);
            double analytic = p->grad.v[i];
            double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
            double rel = std::abs(numeric - analytic) / denom;
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst_param = name;
            }
            ++res.checked;
        }
    }
    return res;
}

}  // namespace linefix
