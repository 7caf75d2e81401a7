// SPDX-License-Identifier: Apache-2.0
//
// The convolutional sequence-to-sequence network.
//
// Encoder: token + learned position embeddings, a stack of symmetric-padding
// convolution layers with GLU activations and sqrt(0.5)-scaled residuals.
// Decoder: the same with causal (left-padded) convolutions, plus one
// dot-product attention per layer against the encoder outputs whose context
// is projected back into the decoder stream. Token generation combines the
// last attention context, the per-layer encoder summaries and the per-layer
// decoder states through the output projection.
#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "linefix/autograd.hpp"
#include "linefix/common.hpp"
#include "linefix/vocab.hpp"

namespace linefix {

enum class Optimizer { sgd, nag };
enum class Criterion { default_ce, smoothed };

const char* to_string(Optimizer o);
const char* to_string(Criterion c);
std::optional<Optimizer> optimizer_from_string(std::string_view s);
std::optional<Criterion> criterion_from_string(std::string_view s);

struct LayerSpec {
    size_t channels = 0;
    size_t kernel = 0;
    bool operator==(const LayerSpec&) const = default;
};

struct HyperParams {
    size_t src_embed_dim = 0;
    size_t trg_embed_dim = 0;
    size_t out_embed_dim = 0;
    std::vector<LayerSpec> encoder_layers;
    std::vector<LayerSpec> decoder_layers;
    double dropout = 0.0;
    double clip_norm = 1.0;
    Optimizer optimizer = Optimizer::sgd;
    Criterion criterion = Criterion::default_ce;
    double learning_rate = 0.25;
    double momentum = 0.0;
    uint64_t seed = 1;

    bool operator==(const HyperParams&) const = default;

    /// Throws std::invalid_argument on any violated invariant (empty layer
    /// lists, even encoder kernels, rates out of range).
    void validate() const;

    nlohmann::json to_json() const;
    static HyperParams from_json(const nlohmann::json& j);
    /// Sorted-key single-line dump; the checkpoint header representation.
    std::string canonical_json() const;

    /// A small-but-trainable configuration used by selftest and fixtures.
    static HyperParams tiny(uint64_t seed);
};

inline double residual_scale() { return 0.70710678118654752440; }  // sqrt(0.5)

template <class T>
class Network {
public:
    static constexpr size_t kDefaultMaxPositions = 1024;

    Network(HyperParams hp, size_t src_vocab, size_t trg_vocab,
            size_t max_positions = kDefaultMaxPositions)
        : hp_(std::move(hp)),
          src_vocab_(src_vocab),
          trg_vocab_(trg_vocab),
          max_positions_(max_positions) {
        hp_.validate();
        if (src_vocab_ == 0 || trg_vocab_ == 0)
            throw std::invalid_argument("network: empty vocabulary");
        build_params();
        init_weights();
    }

    const HyperParams& hyper() const { return hp_; }
    size_t src_vocab() const { return src_vocab_; }
    size_t trg_vocab() const { return trg_vocab_; }
    size_t max_positions() const { return max_positions_; }

    std::vector<std::pair<std::string, NodePtr<T>>>& params() { return params_; }
    const std::vector<std::pair<std::string, NodePtr<T>>>& params() const {
        return params_;
    }

    NodePtr<T> param(const std::string& name) const {
        for (const auto& [n, p] : params_)
            if (n == name) return p;
        throw std::out_of_range("no parameter named " + name);
    }

    size_t parameter_count() const {
        size_t n = 0;
        for (const auto& [name, p] : params_) n += p->val.size();
        return n;
    }

    void zero_grads() {
        for (auto& [name, p] : params_) {
            p->ensure_grad();
            p->grad.zero();
        }
    }

    /// Uniform fan-in initialization, fully determined by hp.seed.
    void init_weights() {
        size_t idx = 0;
        for (auto& [name, p] : params_) {
            Rng rng(derive_seed(hp_.seed, idx++));
            bool is_bias = name.size() >= 2 && name.rfind(".b") == name.size() - 2;
            if (is_bias) {
                p->val.zero();
                continue;
            }
            size_t fan_in;
            if (p->val.shape.size() == 3)
                fan_in = p->val.shape[0] * p->val.shape[1];  // conv: k * Cin
            else if (p->val.shape.size() == 2 && name.find("embed") != std::string::npos)
                fan_in = p->val.shape[1];  // embeddings scale with their width
            else if (p->val.shape.size() == 2)
                fan_in = p->val.shape[0];
            else
                fan_in = p->val.size();
            double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (auto& w : p->val.v) w = static_cast<T>(rng.uniform(-s, s));
        }
    }

    struct Encoded {
        NodePtr<T> keys;     // [m, src_embed_dim]
        NodePtr<T> values;   // [m, src_embed_dim]
        NodePtr<T> summary;  // [1, out_embed_dim], per-layer final states summed
        size_t length = 0;
    };

    struct Decoded {
        NodePtr<T> logits;                   // [prefix_len, trg_vocab]
        std::vector<NodePtr<T>> attention;   // per layer, [prefix_len, m] rows sum to 1
    };

    /// Embeds and encodes a source index sequence. Length is preserved.
    Encoded encode(Tape<T>& tape, const std::vector<int>& src, bool train = false,
                   Rng* rng = nullptr) const {
        if (src.empty()) throw std::invalid_argument("encode: empty input");
        if (src.size() > max_positions_)
            throw std::invalid_argument("encode: input longer than max positions");
        for (int ix : src)
            if (ix < 0 || static_cast<size_t>(ix) >= src_vocab_)
                throw std::out_of_range("encode: token index out of range");

        const size_t m = src.size();
        auto x = tape.add(tape.lookup(param("src_embed"), src),
                          tape.lookup(param("src_pos"), iota(m)));
        x = drop(tape, x, train, rng);

        auto h = tape.linear(x, param("enc_in.w"), param("enc_in.b"));
        std::vector<NodePtr<T>> layer_outs;
        for (size_t l = 0; l < hp_.encoder_layers.size(); ++l) {
            const auto& spec = hp_.encoder_layers[l];
            auto u = drop(tape, h, train, rng);
            size_t pad = (spec.kernel - 1) / 2;
            auto y = tape.conv1d(u, param(enc_name(l, "conv.w")),
                                 param(enc_name(l, "conv.b")), pad, pad);
            auto g = tape.glu(y);
            auto r = has_param(enc_name(l, "res.w"))
                         ? tape.linear(h, param(enc_name(l, "res.w")))
                         : h;
            h = tape.scale(tape.add(g, r), T(residual_scale()));
            layer_outs.push_back(h);
        }

        Encoded enc;
        enc.length = m;
        enc.keys = tape.linear(h, param("enc_out.w"), param("enc_out.b"));
        enc.values = tape.scale(tape.add(enc.keys, x), T(residual_scale()));
        NodePtr<T> summary;
        for (size_t l = 0; l < layer_outs.size(); ++l) {
            auto s = tape.linear(tape.take_row(layer_outs[l], m - 1),
                                 param(enc_name(l, "sum.w")));
            summary = summary ? tape.add(summary, s) : s;
        }
        enc.summary = summary;
        return enc;
    }

    /// Teacher-forced decode of a full prefix (must begin with <START>).
    /// logits row i is the next-token distribution after prefix[0..i].
    Decoded decode(Tape<T>& tape, const Encoded& enc,
                   const std::vector<int>& prefix, bool train = false,
                   Rng* rng = nullptr) const {
        if (prefix.empty()) throw std::invalid_argument("decode: empty prefix");
        if (prefix.size() > max_positions_)
            throw std::invalid_argument("decode: prefix longer than max positions");
        for (int ix : prefix)
            if (ix < 0 || static_cast<size_t>(ix) >= trg_vocab_)
                throw std::out_of_range("decode: token index out of range");

        const size_t n = prefix.size();
        const T ctx_scale = static_cast<T>(
            std::sqrt(static_cast<double>(enc.length)));

        auto g_embed = tape.add(tape.lookup(param("trg_embed"), prefix),
                                tape.lookup(param("trg_pos"), iota(n)));
        g_embed = drop(tape, g_embed, train, rng);

        auto h = tape.linear(g_embed, param("dec_in.w"), param("dec_in.b"));
        Decoded dec;
        NodePtr<T> head;  // running sum of per-layer contributions, [n, out_embed]
        NodePtr<T> last_ctx;
        for (size_t l = 0; l < hp_.decoder_layers.size(); ++l) {
            const auto& spec = hp_.decoder_layers[l];
            auto u = drop(tape, h, train, rng);
            auto y = tape.conv1d(u, param(dec_name(l, "conv.w")),
                                 param(dec_name(l, "conv.b")), spec.kernel - 1, 0);
            auto a = tape.glu(y);

            // multi-step attention against the encoder outputs
            auto q = tape.scale(
                tape.add(tape.linear(a, param(dec_name(l, "attn_q.w")),
                                     param(dec_name(l, "attn_q.b"))),
                         tape.linear(g_embed, param(dec_name(l, "attn_g.w")))),
                T(residual_scale()));
            auto probs = tape.softmax_rows(tape.matmul_nt(q, enc.keys));
            dec.attention.push_back(probs);
            auto ctx = tape.scale(tape.matmul_nn(probs, enc.values), ctx_scale);
            last_ctx = ctx;
            auto a2 = tape.scale(
                tape.add(a, tape.linear(ctx, param(dec_name(l, "attn_out.w")),
                                        param(dec_name(l, "attn_out.b")))),
                T(residual_scale()));

            auto r = has_param(dec_name(l, "res.w"))
                         ? tape.linear(h, param(dec_name(l, "res.w")))
                         : h;
            h = tape.scale(tape.add(a2, r), T(residual_scale()));

            auto contrib = tape.linear(h, param(dec_name(l, "sum.w")));
            head = head ? tape.add(head, contrib) : contrib;
        }

        head = tape.add(head, tape.linear(last_ctx, param("head.ctx.w")));
        head = tape.add_broadcast_row(head, enc.summary);
        head = tape.add_broadcast_row(head, param("head.b"));
        head = drop(tape, head, train, rng);
        dec.logits = tape.linear(head, param("out.w"), param("out.b"));
        return dec;
    }

    /// Incremental single-position decoding state for inference: per-layer
    /// ring buffers hold the last kernel_width-1 layer inputs, so each step
    /// costs one position instead of the whole prefix. Copyable, so beam
    /// hypotheses can fork it. Logits match the teacher-forced decode.
    class DecoderStream {
    public:
        DecoderStream(const Network<T>& net, const Encoded& enc)
            : net_(&net), enc_(&enc) {
            windows_.resize(net.hp_.decoder_layers.size());
            for (size_t l = 0; l < windows_.size(); ++l)
                windows_[l].assign(net.hp_.decoder_layers[l].kernel - 1,
                                   std::vector<T>());
        }

        size_t position() const { return pos_; }

        /// Feeds one token and returns the next-token logits row.
        std::vector<T> step(int token) {
            const Network<T>& net = *net_;
            const auto& hp = net.hp_;
            if (pos_ >= net.max_positions_)
                throw std::invalid_argument("decode: prefix longer than max positions");
            if (token < 0 || static_cast<size_t>(token) >= net.trg_vocab_)
                throw std::out_of_range("decode: token index out of range");

            const size_t m = enc_->length;
            const T rs = T(residual_scale());
            const T ctx_scale =
                static_cast<T>(std::sqrt(static_cast<double>(m)));
            const auto& keys = enc_->keys->val;
            const auto& values = enc_->values->val;

            // g = token embedding + position embedding
            const auto& temb = net.param("trg_embed")->val;
            const auto& tpos = net.param("trg_pos")->val;
            const size_t et = temb.cols();
            std::vector<T> g(et);
            for (size_t d = 0; d < et; ++d)
                g[d] = temb.at(static_cast<size_t>(token), d) + tpos.at(pos_, d);

            std::vector<T> h =
                affine(g, net.param("dec_in.w")->val, &net.param("dec_in.b")->val);

            std::vector<T> head(hp.out_embed_dim, T(0));
            std::vector<T> ctx;
            for (size_t l = 0; l < hp.decoder_layers.size(); ++l) {
                const auto& spec = hp.decoder_layers[l];
                const std::string base = "dec." + std::to_string(l) + ".";
                const auto& kern = net.param(base + "conv.w")->val;
                const auto& kbias = net.param(base + "conv.b")->val;
                const size_t k = spec.kernel, cin = h.size(),
                             c2 = 2 * spec.channels, c = spec.channels;

                std::vector<T> y(kbias.v);
                auto& win = windows_[l];
                for (size_t d = 0; d < k; ++d) {
                    const std::vector<T>* src =
                        d + 1 == k ? &h : (win[d].empty() ? nullptr : &win[d]);
                    if (!src) continue;  // before sequence start: zero padding
                    const T* kd = kern.v.data() + d * cin * c2;
                    for (size_t ci = 0; ci < cin; ++ci) {
                        const T xv = (*src)[ci];
                        const T* kc = kd + ci * c2;
                        for (size_t co = 0; co < c2; ++co) y[co] += xv * kc[co];
                    }
                }
                std::vector<T> a(c);
                for (size_t co = 0; co < c; ++co)
                    a[co] = y[co] * (T(1) / (T(1) + std::exp(-y[c + co])));

                // attention
                auto q = affine(a, net.param(base + "attn_q.w")->val,
                                &net.param(base + "attn_q.b")->val);
                auto gq = affine(g, net.param(base + "attn_g.w")->val, nullptr);
                for (size_t d = 0; d < q.size(); ++d) q[d] = (q[d] + gq[d]) * rs;

                T mx = std::numeric_limits<T>::lowest();
                std::vector<T> scores(m);
                for (size_t j = 0; j < m; ++j) {
                    T s = T(0);
                    const T* kj = keys.row(j);
                    for (size_t d = 0; d < q.size(); ++d) s += q[d] * kj[d];
                    scores[j] = s;
                    mx = std::max(mx, s);
                }
                T z = T(0);
                for (size_t j = 0; j < m; ++j) {
                    scores[j] = std::exp(scores[j] - mx);
                    z += scores[j];
                }
                ctx.assign(q.size(), T(0));
                for (size_t j = 0; j < m; ++j) {
                    const T p = scores[j] / z;
                    const T* vj = values.row(j);
                    for (size_t d = 0; d < ctx.size(); ++d) ctx[d] += p * vj[d];
                }
                for (auto& v : ctx) v *= ctx_scale;

                auto co_proj = affine(ctx, net.param(base + "attn_out.w")->val,
                                      &net.param(base + "attn_out.b")->val);
                std::vector<T> a2(c);
                for (size_t d = 0; d < c; ++d) a2[d] = (a[d] + co_proj[d]) * rs;

                std::vector<T> res = h;
                if (net.has_param(base + "res.w"))
                    res = affine(h, net.param(base + "res.w")->val, nullptr);
                std::vector<T> out(c);
                for (size_t d = 0; d < c; ++d) out[d] = (a2[d] + res[d]) * rs;

                auto contrib =
                    affine(out, net.param(base + "sum.w")->val, nullptr);
                for (size_t d = 0; d < head.size(); ++d) head[d] += contrib[d];

                // slide the window: h becomes part of this layer's history
                if (k > 1) {
                    win.erase(win.begin());
                    win.push_back(h);
                }
                h = std::move(out);
            }

            auto cterm = affine(ctx, net.param("head.ctx.w")->val, nullptr);
            const auto& summary = enc_->summary->val;
            const auto& head_b = net.param("head.b")->val;
            for (size_t d = 0; d < head.size(); ++d)
                head[d] += cterm[d] + summary.v[d] + head_b.v[d];
            auto logits =
                affine(head, net.param("out.w")->val, &net.param("out.b")->val);
            ++pos_;
            return logits;
        }

    private:
        static std::vector<T> affine(const std::vector<T>& x,
                                     const Tensor<T>& w, const Tensor<T>* b) {
            std::vector<T> out(w.cols(), T(0));
            if (b)
                for (size_t j = 0; j < out.size(); ++j) out[j] = b->v[j];
            for (size_t k = 0; k < x.size(); ++k) {
                const T xv = x[k];
                const T* wk = w.row(k);
                for (size_t j = 0; j < out.size(); ++j) out[j] += xv * wk[j];
            }
            return out;
        }

        const Network<T>* net_;
        const Encoded* enc_;
        // per layer, the previous kernel-1 layer inputs (oldest first;
        // empty vector = zero padding before the sequence start)
        std::vector<std::vector<std::vector<T>>> windows_;
        size_t pos_ = 0;
    };

    DecoderStream stream(const Encoded& enc) const {
        return DecoderStream(*this, enc);
    }

private:
    static std::vector<int> iota(size_t n) {
        std::vector<int> v(n);
        for (size_t i = 0; i < n; ++i) v[i] = static_cast<int>(i);
        return v;
    }

    static std::string enc_name(size_t l, const char* leaf) {
        return "enc." + std::to_string(l) + "." + leaf;
    }
    static std::string dec_name(size_t l, const char* leaf) {
        return "dec." + std::to_string(l) + "." + leaf;
    }

    bool has_param(const std::string& name) const {
        for (const auto& [n, p] : params_)
            if (n == name) return true;
        return false;
    }

    NodePtr<T> drop(Tape<T>& tape, const NodePtr<T>& x, bool train,
                    Rng* rng) const {
        if (!train || hp_.dropout <= 0.0) return x;
        if (rng == nullptr)
            throw std::invalid_argument("training forward requires an RNG");
        return tape.dropout(x, hp_.dropout, *rng, true);
    }

    void add_param(const std::string& name, std::vector<size_t> shape) {
        params_.emplace_back(name, make_leaf(Tensor<T>(std::move(shape)), true));
    }

    void build_params() {
        const size_t es = hp_.src_embed_dim, et = hp_.trg_embed_dim,
                     eo = hp_.out_embed_dim;
        add_param("src_embed", {src_vocab_, es});
        add_param("src_pos", {max_positions_, es});
        add_param("trg_embed", {trg_vocab_, et});
        add_param("trg_pos", {max_positions_, et});

        size_t cin = es;
        add_param("enc_in.w", {es, hp_.encoder_layers[0].channels});
        add_param("enc_in.b", {hp_.encoder_layers[0].channels});
        cin = hp_.encoder_layers[0].channels;
        for (size_t l = 0; l < hp_.encoder_layers.size(); ++l) {
            const auto& spec = hp_.encoder_layers[l];
            add_param(enc_name(l, "conv.w"), {spec.kernel, cin, 2 * spec.channels});
            add_param(enc_name(l, "conv.b"), {2 * spec.channels});
            if (cin != spec.channels)
                add_param(enc_name(l, "res.w"), {cin, spec.channels});
            add_param(enc_name(l, "sum.w"), {spec.channels, eo});
            cin = spec.channels;
        }
        add_param("enc_out.w", {cin, es});
        add_param("enc_out.b", {es});

        add_param("dec_in.w", {et, hp_.decoder_layers[0].channels});
        add_param("dec_in.b", {hp_.decoder_layers[0].channels});
        cin = hp_.decoder_layers[0].channels;
        for (size_t l = 0; l < hp_.decoder_layers.size(); ++l) {
            const auto& spec = hp_.decoder_layers[l];
            add_param(dec_name(l, "conv.w"), {spec.kernel, cin, 2 * spec.channels});
            add_param(dec_name(l, "conv.b"), {2 * spec.channels});
            if (cin != spec.channels)
                add_param(dec_name(l, "res.w"), {cin, spec.channels});
            add_param(dec_name(l, "attn_q.w"), {spec.channels, es});
            add_param(dec_name(l, "attn_q.b"), {es});
            add_param(dec_name(l, "attn_g.w"), {et, es});
            add_param(dec_name(l, "attn_out.w"), {es, spec.channels});
            add_param(dec_name(l, "attn_out.b"), {spec.channels});
            add_param(dec_name(l, "sum.w"), {spec.channels, eo});
            cin = spec.channels;
        }
        add_param("head.ctx.w", {es, eo});
        add_param("head.b", {eo});
        add_param("out.w", {eo, trg_vocab_});
        add_param("out.b", {trg_vocab_});
    }

    HyperParams hp_;
    size_t src_vocab_;
    size_t trg_vocab_;
    size_t max_positions_;
    std::vector<std::pair<std::string, NodePtr<T>>> params_;
};

}  // namespace linefix
