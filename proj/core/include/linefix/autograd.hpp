// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode autodiff over a dynamic tape. Each op computes its output
// eagerly and pushes a closure that scatters gradients back to its inputs.
// The scalar type is a template parameter: float for training/inference,
// double for the finite-difference verification harness.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "linefix/common.hpp"
#include "linefix/tensor.hpp"

namespace linefix {

template <class T>
struct Node {
    Tensor<T> val;
    Tensor<T> grad;
    bool requires_grad = false;

    void ensure_grad() {
        if (grad.v.size() != val.v.size()) {
            grad.shape = val.shape;
            grad.v.assign(val.v.size(), T(0));
        }
    }
};

template <class T>
using NodePtr = std::shared_ptr<Node<T>>;

template <class T>
NodePtr<T> make_leaf(Tensor<T> value, bool requires_grad) {
    auto n = std::make_shared<Node<T>>();
    n->val = std::move(value);
    n->requires_grad = requires_grad;
    if (requires_grad) n->ensure_grad();
    return n;
}

template <class T>
class Tape {
public:
    /// A non-recording tape computes values only: no closures are kept and
    /// outputs never require gradients. Used for inference (beam search),
    /// where the graph would otherwise grow without bound.
    explicit Tape(bool recording = true) : recording_(recording) {}

    bool recording() const { return recording_; }
    void clear() { backs_.clear(); }

    /// Appends a custom backward closure (dropped on a non-recording tape).
    void record(std::function<void()> back) {
        if (recording_) backs_.push_back(std::move(back));
    }

    /// Runs the recorded closures in reverse. `loss` must be a scalar node.
    void backward(const NodePtr<T>& loss) {
        if (loss->val.size() != 1)
            throw std::invalid_argument("backward: loss must be scalar");
        loss->ensure_grad();
        loss->grad.v[0] = T(1);
        for (auto it = backs_.rbegin(); it != backs_.rend(); ++it) (*it)();
        backs_.clear();
    }

    // ---------------------------------------------------------------- ops

    /// Embedding lookup: rows of table indexed by idx -> [n, E].
    NodePtr<T> lookup(const NodePtr<T>& table, std::vector<int> idx) {
        const size_t e = table->val.cols();
        const size_t v_rows = table->val.rows();
        auto out = std::make_shared<Node<T>>();
        out->val = Tensor<T>({idx.size(), e});
        for (size_t i = 0; i < idx.size(); ++i) {
            int r = idx[i];
            if (r < 0 || static_cast<size_t>(r) >= v_rows)
                throw std::out_of_range("lookup: index " + std::to_string(r) +
                                        " out of range for " +
                                        shape_str(table->val.shape));
            for (size_t j = 0; j < e; ++j)
                out->val.at(i, j) = table->val.at(static_cast<size_t>(r), j);
        }
        if (recording_ && table->requires_grad) {
            out->requires_grad = true;
            out->ensure_grad();
            backs_.push_back([table, out, idx = std::move(idx), e]() {
                table->ensure_grad();
                for (size_t i = 0; i < idx.size(); ++i)
                    for (size_t j = 0; j < e; ++j)
                        table->grad.at(static_cast<size_t>(idx[i]), j) +=
                            out->grad.at(i, j);
            });
        }
        return out;
    }

    NodePtr<T> add(const NodePtr<T>& a, const NodePtr<T>& b) {
        if (!a->val.same_shape(b->val))
            throw std::invalid_argument("add: shape mismatch " +
                                        shape_str(a->val.shape) + " vs " +
                                        shape_str(b->val.shape));
        auto out = std::make_shared<Node<T>>();
        out->val = a->val;
        for (size_t i = 0; i < out->val.size(); ++i) out->val.v[i] += b->val.v[i];
        if (recording_ && (a->requires_grad || b->requires_grad)) {
            out->requires_grad = true;
            out->ensure_grad();
            backs_.push_back([a, b, out]() {
                if (a->requires_grad) {
                    a->ensure_grad();
                    for (size_t i = 0; i < out->grad.size(); ++i)
                        a->grad.v[i] += out->grad.v[i];
                }
                if (b->requires_grad) {
                    b->ensure_grad();
                    for (size_t i = 0; i < out->grad.size(); ++i)
                        b->grad.v[i] += out->grad.v[i];
                }
            });
        }
        return out;
    }

    NodePtr<T> scale(const NodePtr<T>& a, T s) {
        auto out = std::make_shared<Node<T>>();
        out->val = a->val;
        for (auto& x : out->val.v) x *= s;
        if (recording_ && a->requires_grad) {
            out->requires_grad = true;
            out->ensure_grad();
            backs_.push_back([a, out, s]() {
                a->ensure_grad();
                for (size_t i = 0; i < out->grad.size(); ++i)
                    a->grad.v[i] += s * out->grad.v[i];
            });
        }
        return out;
    }

    /// y = x W (+ b): x [n,A], W [A,B], b [B] or null -> [n,B].
    NodePtr<T> linear(const NodePtr<T>& x, const NodePtr<T>& w,
                      const NodePtr<T>& b = nullptr) {
        const size_t n = x->val.rows(), a = x->val.cols();
        if (w->val.rows() != a)
            throw std::invalid_argument("linear: inner dim mismatch " +
                                        shape_str(x->val.shape) + " x " +
                                        shape_str(w->val.shape));
        const size_t m = w->val.cols();
        auto out = std::make_shared<Node<T>>();
        out->val = Tensor<T>({n, m});
        for (size_t i = 0; i < n; ++i) {
            T* oi = out->val.row(i);
            if (b) {
                for (size_t j = 0; j < m; ++j) oi[j] = b->val.v[j];
            }
            const T* xi = x->val.row(i);
            for (size_t k = 0; k < a; ++k) {
                const T xv = xi[k];
                const T* wk = w->val.row(k);
                for (size_t j = 0; j < m; ++j) oi[j] += xv * wk[j];
            }
        }
        bool any = recording_ && (x->requires_grad || w->requires_grad || (b && b->requires_grad));
        if (any) {
            out->requires_grad = true;
            out->ensure_grad();
            backs_.push_back([x, w, b, out, n, a, m]() {
                if (x->requires_grad) {
                    x->ensure_grad();
                    for (size_t i = 0; i < n; ++i) {
                        const T* gi = out->grad.row(i);
                        T* xg = x->grad.row(i);
                        for (size_t k = 0; k < a; ++k) {
                            const T* wk = w->val.row(k);
                            T acc = T(0);
                            for (size_t j = 0; j < m; ++j) acc += gi[j] * wk[j];
                            xg[k] += acc;
                        }
                    }
                }
                if (w->requires_grad) {
                    w->ensure_grad();
                    for (size_t i = 0; i < n; ++i) {
                        const T* gi = out->grad.row(i);
                        const T* xi = x->val.row(i);
                        for (size_t k = 0; k < a; ++k) {
                            const T xv = xi[k];
                            T* wg = w->grad.row(k);
                            for (size_t j = 0; j < m; ++j) wg[j] += xv * gi[j];
                        }
                    }
                }
                if (b && b->requires_grad) {
                    b->ensure_grad();
                    for (size_t i = 0; i < n; ++i) {
                        const T* gi = out->grad.row(i);
                        for (size_t j = 0; j < m; ++j) b->grad.v[j] += gi[j];
                    }
                }
            });
        }
        return out;
    }

    /// 1-D convolution over the row (time) axis.
    /// x [n, Cin], kernel [k, Cin, Cout], bias [Cout]; zero padding of
    /// pad_left/pad_right rows. Output has n + pad_left + pad_right - k + 1
    /// rows. Encoder layers use symmetric padding (k odd), decoder layers
    /// causal padding (pad_left = k-1, pad_right = 0); both keep length n.
    NodePtr<T> conv1d(const NodePtr<T>& x, const NodePtr<T>& kernel,
                      const NodePtr<T>& bias, size_t pad_left, size_t pad_right) {
        const size_t n = x->val.rows(), cin = x->val.cols();
        const size_t k = kernel->val.shape[0];
        if (kernel->val.shape[1] != cin)
            throw std::invalid_argument("conv1d: channel mismatch");
        const size_t cout = kernel->val.shape[2];
        const size_t padded = n + pad_left + pad_right;
        if (padded < k)
            throw std::invalid_argument("conv1d: input shorter than kernel");
        const size_t n_out = padded - k + 1;

        auto out = std::make_shared<Node<T>>();
        out->val = Tensor<T>({n_out, cout});
        for (size_t i = 0; i < n_out; ++i) {
            T* oi = out->val.row(i);
            for (size_t j = 0; j < cout; ++j) oi[j] = bias->val.v[j];
            for (size_t d = 0; d < k; ++d) {
                // padded position i+d corresponds to input row i+d-pad_left
                if (i + d < pad_left) continue;
                size_t src = i + d - pad_left;
                if (src >= n) continue;
                const T* xs = x->val.row(src);
                const T* kd = kernel->val.v.data() + d * cin * cout;
                for (size_t c = 0; c < cin; ++c) {
                    const T xv = xs[c];
                    const T* kc = kd + c * cout;
                    for (size_t j = 0; j < cout; ++j) oi[j] += xv * kc[j];
                }
            }
        }
        bool any = recording_ && (x->requires_grad || kernel->requires_grad || bias->requires_grad);
        if (any) {
            out->requires_grad = true;
            out->ensure_grad();
            backs_.push_back([x, kernel, bias, out, n, cin, k, cout, pad_left,
                              n_out]() {
                if (bias->requires_grad) {
                    bias->ensure_grad();
                    for (size_t i = 0; i < n_out; ++i) {
                        const T* gi = out->grad.row(i);
                        for (size_t j = 0; j < cout; ++j) bias->grad.v[j] += gi[j];
                    }
                }
                for (size_t i = 0; i < n_out; ++i) {
                    const T* gi = out->grad.row(i);
                    for (size_t d = 0; d < k; ++d) {
                        if (i + d < pad_left) continue;
                        size_t src = i + d - pad_left;
                        if (src >= n) continue;
                        if (kernel->requires_grad) {
                            kernel->ensure_grad();
                            const T* xs = x->val.row(src);
                            T* kd = kernel->grad.v.data() + d * cin * cout;
                            for (size_t c = 0; c < cin; ++c) {
                                const T xv = xs[c];
                                T* kc = kd + c * cout;
                                for (size_t j = 0; j < cout; ++j)
                                    kc[j] += xv * gi[j];
                            }
                        }
                        if (x->requires_grad) {
                            x->ensure_grad();
                            T* xg = x->grad.row(src);
                            const T* kd = kernel->val.v.data() + d * cin * cout;
                            for (size_t c = 0; c < cin; ++c) {
                                const T* kc = kd + c * cout;
                                T acc = T(0);
                                for (size_t j = 0; j < cout; ++j)
                                    acc += kc[j] * gi[j];
                                xg[c] += acc;
                            }
                        }
                    }
                }
            });
        }
        return out;
    }

    /// Gated linear unit over the channel axis: [n, 2C] -> [n, C],
    /// out = a * sigmoid(g) with x = [a | g].
    NodePtr<T> glu(const NodePtr<T>& x) {
        const size_t n = x->val.rows(), c2 = x->val.cols();
        if (c2 % 2 != 0) throw std::invalid_argument("glu: odd channel count");
        const size_t c = c2 / 2;
        auto out = std::make_shared<Node<T>>();
        out->val = Tensor<T>({n, c});
        for (size_t i = 0; i < n; ++i) {
            const T* xi = x->val.row(i);
            T* oi = out->val.row(i);
            for (size_t j = 0; j < c; ++j) {
                T s = T(1) / (T(1) + std::exp(-xi[c + j]));
                oi[j] = xi[j] * s;
            }
        }
        if (recording_ && x->requires_grad) {
            out->requires_grad = true;
            out->ensure_grad();
            backs_.push_back([x, out, n, c]() {
                x->ensure_grad();
                for (size_t i = 0; i < n; ++i) {
                    const T* xi = x->val.row(i);
                    const T* gi = out->grad.row(i);
                    T* xg = x->grad.row(i);
                    for (size_t j = 0; j < c; ++j) {
                        T s = T(1) / (T(1) + std::exp(-xi[c + j]));
                        xg[j] += gi[j] * s;
                        xg[c + j] += gi[j] * xi[j] * s * (T(1) - s);
                    }
                }
            });
        }
        return out;
    }

    /// A * B^T: [n,m] x [p,m] -> [n,p]. Attention scores.
    NodePtr<T> matmul_nt(const NodePtr<T>& a, const NodePtr<T>& b) {
        const size_t n = a->val.rows(), m = a->val.cols(), p = b->val.rows();
        if (b->val.cols() != m)
            throw std::invalid_argument("matmul_nt: inner dim mismatch");
        auto out = std::make_shared<Node<T>>();
        out->val = Tensor<T>({n, p});
        for (size_t i = 0; i < n; ++i) {
            const T* ai = a->val.row(i);
            T* oi = out->val.row(i);
            for (size_t j = 0; j < p; ++j) {
                const T* bj = b->val.row(j);
                T acc = T(0);
                for (size_t k = 0; k < m; ++k) acc += ai[k] * bj[k];
                oi[j] = acc;
            }
        }
        if (recording_ && (a->requires_grad || b->requires_grad)) {
            out->requires_grad = true;
            out->ensure_grad();
            backs_.push_back([a, b, out, n, m, p]() {
                if (a->requires_grad) {
                    a->ensure_grad();
                    for (size_t i = 0; i < n; ++i) {
                        const T* gi = out->grad.row(i);
                        T* ag = a->grad.row(i);
                        for (size_t j = 0; j < p; ++j) {
                            const T* bj = b->val.row(j);
                            const T g = gi[j];
                            for (size_t k = 0; k < m; ++k) ag[k] += g * bj[k];
                        }
                    }
                }
                if (b->requires_grad) {
                    b->ensure_grad();
                    for (size_t i = 0; i < n; ++i) {
                        const T* gi = out->grad.row(i);
                        const T* ai = a->val.row(i);
                        for (size_t j = 0; j < p; ++j) {
                            T* bg = b->grad.row(j);
                            const T g = gi[j];
                            for (size_t k = 0; k < m; ++k) bg[k] += g * ai[k];
                        }
                    }
                }
            });
        }
        return out;
    }

    /// A * B: [n,m] x [m,p] -> [n,p]. Attention context from probabilities.
    NodePtr<T> matmul_nn(const NodePtr<T>& a, const NodePtr<T>& b) {
        const size_t n = a->val.rows(), m = a->val.cols(), p = b->val.cols();
        if (b->val.rows() != m)
            throw std::invalid_argument("matmul_nn: inner dim mismatch");
        auto out = std::make_shared<Node<T>>();
        out->val = Tensor<T>({n, p});
        for (size_t i = 0; i < n; ++i) {
            const T* ai = a->val.row(i);
            T* oi = out->val.row(i);
            for (size_t k = 0; k < m; ++k) {
                const T av = ai[k];
                const T* bk = b->val.row(k);
                for (size_t j = 0; j < p; ++j) oi[j] += av * bk[j];
            }
        }
        if (recording_ && (a->requires_grad || b->requires_grad)) {
            out->requires_grad = true;
            out->ensure_grad();
            backs_.push_back([a, b, out, n, m, p]() {
                if (a->requires_grad) {
                    a->ensure_grad();
                    for (size_t i = 0; i < n; ++i) {
                        const T* gi = out->grad.row(i);
                        T* ag = a->grad.row(i);
                        for (size_t k = 0; k < m; ++k) {
                            const T* bk = b->val.row(k);
                            T acc = T(0);
                            for (size_t j = 0; j < p; ++j) acc += gi[j] * bk[j];
                            ag[k] += acc;
                        }
                    }
                }
                if (b->requires_grad) {
                    b->ensure_grad();
                    for (size_t i = 0; i < n; ++i) {
                        const T* gi = out->grad.row(i);
                        const T* ai = a->val.row(i);
                        for (size_t k = 0; k < m; ++k) {
                            const T av = ai[k];
                            T* bg = b->grad.row(k);
                            for (size_t j = 0; j < p; ++j) bg[j] += av * gi[j];
                        }
                    }
                }
            });
        }
        return out;
    }

    /// Row-wise softmax, numerically stabilized.
    NodePtr<T> softmax_rows(const NodePtr<T>& x) {
        const size_t n = x->val.rows(), m = x->val.cols();
        auto out = std::make_shared<Node<T>>();
        out->val = Tensor<T>({n, m});
        for (size_t i = 0; i < n; ++i) {
            const T* xi = x->val.row(i);
            T* oi = out->val.row(i);
            T mx = xi[0];
            for (size_t j = 1; j < m; ++j) mx = std::max(mx, xi[j]);
            T sum = T(0);
            for (size_t j = 0; j < m; ++j) {
                oi[j] = std::exp(xi[j] - mx);
                sum += oi[j];
            }
            for (size_t j = 0; j < m; ++j) oi[j] /= sum;
        }
        if (recording_ && x->requires_grad) {
            out->requires_grad = true;
            out->ensure_grad();
            backs_.push_back([x, out, n, m]() {
                x->ensure_grad();
                for (size_t i = 0; i < n; ++i) {
                    const T* yi = out->val.row(i);
                    const T* gi = out->grad.row(i);
                    T* xg = x->grad.row(i);
                    T dot = T(0);
                    for (size_t j = 0; j < m; ++j) dot += gi[j] * yi[j];
                    for (size_t j = 0; j < m; ++j)
                        xg[j] += yi[j] * (gi[j] - dot);
                }
            });
        }
        return out;
    }

    /// Inverted dropout; identity when train=false or p=0.
    NodePtr<T> dropout(const NodePtr<T>& x, double p, Rng& rng, bool train) {
        if (!train || p <= 0.0) return x;
        if (p >= 1.0) throw std::invalid_argument("dropout: p must be < 1");
        auto out = std::make_shared<Node<T>>();
        out->val = x->val;
        auto mask = std::make_shared<std::vector<T>>(x->val.size());
        const T keep_scale = T(1.0 / (1.0 - p));
        for (size_t i = 0; i < x->val.size(); ++i) {
            (*mask)[i] = rng.uniform() < p ? T(0) : keep_scale;
            out->val.v[i] *= (*mask)[i];
        }
        if (recording_ && x->requires_grad) {
            out->requires_grad = true;
            out->ensure_grad();
            backs_.push_back([x, out, mask]() {
                x->ensure_grad();
                for (size_t i = 0; i < out->grad.size(); ++i)
                    x->grad.v[i] += out->grad.v[i] * (*mask)[i];
            });
        }
        return out;
    }

    /// Selects one row: [n,C] -> [1,C].
    NodePtr<T> take_row(const NodePtr<T>& x, size_t i) {
        const size_t m = x->val.cols();
        if (i >= x->val.rows()) throw std::out_of_range("take_row");
        auto out = std::make_shared<Node<T>>();
        out->val = Tensor<T>({1, m});
        for (size_t j = 0; j < m; ++j) out->val.v[j] = x->val.at(i, j);
        if (recording_ && x->requires_grad) {
            out->requires_grad = true;
            out->ensure_grad();
            backs_.push_back([x, out, i, m]() {
                x->ensure_grad();
                for (size_t j = 0; j < m; ++j) x->grad.at(i, j) += out->grad.v[j];
            });
        }
        return out;
    }

    /// Adds a [1,C] row to every row of x [n,C].
    NodePtr<T> add_broadcast_row(const NodePtr<T>& x, const NodePtr<T>& r) {
        const size_t n = x->val.rows(), m = x->val.cols();
        if (r->val.size() != m)
            throw std::invalid_argument("add_broadcast_row: width mismatch");
        auto out = std::make_shared<Node<T>>();
        out->val = x->val;
        for (size_t i = 0; i < n; ++i) {
            T* oi = out->val.row(i);
            for (size_t j = 0; j < m; ++j) oi[j] += r->val.v[j];
        }
        if (recording_ && (x->requires_grad || r->requires_grad)) {
            out->requires_grad = true;
            out->ensure_grad();
            backs_.push_back([x, r, out, n, m]() {
                if (x->requires_grad) {
                    x->ensure_grad();
                    for (size_t i = 0; i < out->grad.size(); ++i)
                        x->grad.v[i] += out->grad.v[i];
                }
                if (r->requires_grad) {
                    r->ensure_grad();
                    for (size_t i = 0; i < n; ++i) {
                        const T* gi = out->grad.row(i);
                        for (size_t j = 0; j < m; ++j) r->grad.v[j] += gi[j];
                    }
                }
            });
        }
        return out;
    }

    /// Scalar contraction against fixed weights: sum_i w_i * x_i -> [1].
    NodePtr<T> weighted_sum(const NodePtr<T>& x, Tensor<T> w) {
        if (w.v.size() != x->val.size())
            throw std::invalid_argument("weighted_sum: size mismatch");
        auto out = std::make_shared<Node<T>>();
        out->val = Tensor<T>({1});
        T acc = T(0);
        for (size_t i = 0; i < w.v.size(); ++i) acc += w.v[i] * x->val.v[i];
        out->val.v[0] = acc;
        if (recording_ && x->requires_grad) {
            out->requires_grad = true;
            out->ensure_grad();
            auto wp = std::make_shared<Tensor<T>>(std::move(w));
            backs_.push_back([x, out, wp]() {
                x->ensure_grad();
                const T g = out->grad.v[0];
                for (size_t i = 0; i < wp->v.size(); ++i)
                    x->grad.v[i] += g * wp->v[i];
            });
        }
        return out;
    }

private:
    bool recording_ = true;
    std::vector<std::function<void()>> backs_;
};

}  // namespace linefix
