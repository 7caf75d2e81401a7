// SPDX-License-Identifier: Apache-2.0
//
// Independent reference implementation of the sequence model forward pass:
// plain position-at-a-time double-precision loops reading the network's
// weight tensors. Shares no computation code with the tape path; the two
// routes are compared in the model tests and the beam-score recomputation.
#pragma once

#include <cmath>
#include <vector>

#include "linefix/model.hpp"

namespace testsupport {

using Mat = std::vector<std::vector<double>>;

namespace naive_detail {

inline Mat to_mat(const linefix::Tensor<float>& t) {
    Mat m(t.rows(), std::vector<double>(t.cols()));
    for (size_t i = 0; i < t.rows(); ++i)
        for (size_t j = 0; j < t.cols(); ++j) m[i][j] = t.at(i, j);
    return m;
}

inline std::vector<double> vec_of(const linefix::Tensor<float>& t) {
    std::vector<double> v(t.size());
    for (size_t i = 0; i < t.size(); ++i) v[i] = t.v[i];
    return v;
}

inline std::vector<double> matvec_row(const std::vector<double>& x, const Mat& w,
                                      const std::vector<double>* b) {
    std::vector<double> out(w[0].size(), 0.0);
    if (b)
        for (size_t j = 0; j < out.size(); ++j) out[j] = (*b)[j];
    for (size_t k = 0; k < x.size(); ++k)
        for (size_t j = 0; j < out.size(); ++j) out[j] += x[k] * w[k][j];
    return out;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace naive_detail

/// Logits for every prefix position, computed independently of the tape.
inline Mat naive_decode_logits(const linefix::Network<float>& net,
                               const std::vector<int>& src,
                               const std::vector<int>& prefix) {
    using namespace naive_detail;
    using linefix::residual_scale;
    const auto& hp = net.hyper();
    auto W = [&](const std::string& name) { return to_mat(net.param(name)->val); };
    auto B = [&](const std::string& name) { return vec_of(net.param(name)->val); };
    const double rs = residual_scale();
    const size_t m = src.size();

    // ---- encoder
    Mat src_embed = W("src_embed"), src_pos = W("src_pos");
    Mat x(m);
    for (size_t j = 0; j < m; ++j) {
        x[j] = src_embed[static_cast<size_t>(src[j])];
        for (size_t d = 0; d < x[j].size(); ++d) x[j][d] += src_pos[j][d];
    }
    Mat enc_in_w = W("enc_in.w");
    auto enc_in_b = B("enc_in.b");
    Mat h(m);
    for (size_t j = 0; j < m; ++j) h[j] = matvec_row(x[j], enc_in_w, &enc_in_b);

    std::vector<Mat> enc_layer_out;
    for (size_t l = 0; l < hp.encoder_layers.size(); ++l) {
        const auto& spec = hp.encoder_layers[l];
        std::string base = "enc." + std::to_string(l) + ".";
        const auto& kern = net.param(base + "conv.w")->val;  // [k, cin, 2c]
        auto bias = B(base + "conv.b");
        const size_t k = kern.shape[0], cin = kern.shape[1], c2 = kern.shape[2];
        const size_t c = c2 / 2, pad = (k - 1) / 2;
        Mat out(m);
        for (size_t j = 0; j < m; ++j) {
            std::vector<double> y = bias;
            for (size_t d = 0; d < k; ++d) {
                long long srcpos = static_cast<long long>(j + d) -
                                   static_cast<long long>(pad);
                if (srcpos < 0 || srcpos >= static_cast<long long>(m)) continue;
                const auto& hin = h[static_cast<size_t>(srcpos)];
                for (size_t ci = 0; ci < cin; ++ci)
                    for (size_t co = 0; co < c2; ++co)
                        y[co] += hin[ci] *
                                 static_cast<double>(
                                     kern.v[(d * cin + ci) * c2 + co]);
            }
            std::vector<double> g(c);
            for (size_t co = 0; co < c; ++co)
                g[co] = y[co] * sigmoid(y[c + co]);
            std::vector<double> res = h[j];
            if (res.size() != c) {
                Mat rw = W(base + "res.w");
                res = matvec_row(h[j], rw, nullptr);
            }
            out[j].resize(c);
            for (size_t co = 0; co < c; ++co) out[j][co] = (g[co] + res[co]) * rs;
        }
        h = out;
        enc_layer_out.push_back(h);
    }

    Mat enc_out_w = W("enc_out.w");
    auto enc_out_b = B("enc_out.b");
    Mat keys(m), values(m);
    for (size_t j = 0; j < m; ++j) {
        keys[j] = matvec_row(h[j], enc_out_w, &enc_out_b);
        values[j].resize(keys[j].size());
        for (size_t d = 0; d < keys[j].size(); ++d)
            values[j][d] = (keys[j][d] + x[j][d]) * rs;
    }
    std::vector<double> summary(hp.out_embed_dim, 0.0);
    for (size_t l = 0; l < hp.encoder_layers.size(); ++l) {
        Mat sw = W("enc." + std::to_string(l) + ".sum.w");
        auto s = matvec_row(enc_layer_out[l][m - 1], sw, nullptr);
        for (size_t d = 0; d < summary.size(); ++d) summary[d] += s[d];
    }

    // ---- decoder
    const size_t n = prefix.size();
    Mat trg_embed = W("trg_embed"), trg_pos = W("trg_pos");
    Mat g_embed(n);
    for (size_t i = 0; i < n; ++i) {
        g_embed[i] = trg_embed[static_cast<size_t>(prefix[i])];
        for (size_t d = 0; d < g_embed[i].size(); ++d)
            g_embed[i][d] += trg_pos[i][d];
    }
    Mat dec_in_w = W("dec_in.w");
    auto dec_in_b = B("dec_in.b");
    Mat dh(n);
    for (size_t i = 0; i < n; ++i)
        dh[i] = matvec_row(g_embed[i], dec_in_w, &dec_in_b);

    Mat head(n, std::vector<double>(hp.out_embed_dim, 0.0));
    Mat last_ctx(n);
    const double ctx_scale = std::sqrt(static_cast<double>(m));
    for (size_t l = 0; l < hp.decoder_layers.size(); ++l) {
        std::string base = "dec." + std::to_string(l) + ".";
        const auto& kern = net.param(base + "conv.w")->val;
        auto bias = B(base + "conv.b");
        const size_t k = kern.shape[0], cin = kern.shape[1], c2 = kern.shape[2];
        const size_t c = c2 / 2;
        Mat attn_q_w = W(base + "attn_q.w");
        auto attn_q_b = B(base + "attn_q.b");
        Mat attn_g_w = W(base + "attn_g.w");
        Mat attn_out_w = W(base + "attn_out.w");
        auto attn_out_b = B(base + "attn_out.b");
        Mat sum_w = W(base + "sum.w");

        Mat out(n);
        for (size_t i = 0; i < n; ++i) {
            std::vector<double> y = bias;
            for (size_t d = 0; d < k; ++d) {
                long long srcpos = static_cast<long long>(i + d) -
                                   static_cast<long long>(k - 1);
                if (srcpos < 0) continue;
                const auto& hin = dh[static_cast<size_t>(srcpos)];
                for (size_t ci = 0; ci < cin; ++ci)
                    for (size_t co = 0; co < c2; ++co)
                        y[co] += hin[ci] *
                                 static_cast<double>(
                                     kern.v[(d * cin + ci) * c2 + co]);
            }
            std::vector<double> a(c);
            for (size_t co = 0; co < c; ++co)
                a[co] = y[co] * sigmoid(y[c + co]);

            auto q = matvec_row(a, attn_q_w, &attn_q_b);
            auto gq = matvec_row(g_embed[i], attn_g_w, nullptr);
            for (size_t d = 0; d < q.size(); ++d) q[d] = (q[d] + gq[d]) * rs;

            std::vector<double> scores(m);
            double mx = -1e300;
            for (size_t j = 0; j < m; ++j) {
                double s = 0;
                for (size_t d = 0; d < q.size(); ++d) s += q[d] * keys[j][d];
                scores[j] = s;
                mx = std::max(mx, s);
            }
            double z = 0;
            for (size_t j = 0; j < m; ++j) z += std::exp(scores[j] - mx);
            std::vector<double> ctx(q.size(), 0.0);
            for (size_t j = 0; j < m; ++j) {
                double p = std::exp(scores[j] - mx) / z;
                for (size_t d = 0; d < ctx.size(); ++d)
                    ctx[d] += p * values[j][d];
            }
            for (auto& v : ctx) v *= ctx_scale;
            last_ctx[i] = ctx;

            auto co = matvec_row(ctx, attn_out_w, &attn_out_b);
            std::vector<double> a2(c);
            for (size_t d = 0; d < c; ++d) a2[d] = (a[d] + co[d]) * rs;

            std::vector<double> res = dh[i];
            if (res.size() != c) {
                Mat rw = W(base + "res.w");
                res = matvec_row(dh[i], rw, nullptr);
            }
            out[i].resize(c);
            for (size_t d = 0; d < c; ++d) out[i][d] = (a2[d] + res[d]) * rs;

            auto contrib = matvec_row(out[i], sum_w, nullptr);
            for (size_t d = 0; d < contrib.size(); ++d) head[i][d] += contrib[d];
        }
        dh = out;
    }

    Mat head_ctx_w = W("head.ctx.w");
    auto head_b = B("head.b");
    Mat out_w = W("out.w");
    auto out_b = B("out.b");
    Mat logits(n);
    for (size_t i = 0; i < n; ++i) {
        auto cterm = matvec_row(last_ctx[i], head_ctx_w, nullptr);
        std::vector<double> pre(hp.out_embed_dim);
        for (size_t d = 0; d < pre.size(); ++d)
            pre[d] = head[i][d] + cterm[d] + summary[d] + head_b[d];
        logits[i] = matvec_row(pre, out_w, &out_b);
    }
    return logits;
}

/// NLL of `tokens` + <END> given src, via the naive route.
inline double naive_sequence_nll(const linefix::Network<float>& net,
                                 const std::vector<int>& src,
                                 const std::vector<int>& tokens) {
    std::vector<int> prefix{linefix::kStartIndex};
    prefix.insert(prefix.end(), tokens.begin(), tokens.end());
    auto logits = naive_decode_logits(net, src, prefix);
    std::vector<int> targets(tokens);
    targets.push_back(linefix::kEndIndex);
    double nll = 0.0;
    for (size_t i = 0; i < targets.size(); ++i) {
        double mx = logits[i][0];
        for (double v : logits[i]) mx = std::max(mx, v);
        double z = 0.0;
        for (double v : logits[i]) z += std::exp(v - mx);
        nll += (mx + std::log(z)) - logits[i][static_cast<size_t>(targets[i])];
    }
    return nll;
}

}  // namespace testsupport
