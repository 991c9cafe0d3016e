// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fsaf/tensor.hpp"

namespace fsaf {

/// Reverse-mode tape over the operation set the detector needs: 3x3 and 1x1
/// convolutions (stride 1 or 2, zero padding for 3x3), relu, sigmoid,
/// elementwise add, and nearest-neighbor 2x upsampling.
///
/// Values are computed eagerly as nodes are recorded. Gradients are seeded
/// externally (grad(id) is writable) and propagated by backward() in reverse
/// recording order, single-threaded, so results are bit-reproducible.
template <typename T>
class TapeT {
public:
    int input(TensorT<T> value) { return emplace(std::move(value), nullptr); }

    const TensorT<T>& value(int id) const { return nodes_[id].value; }
    TensorT<T>& grad(int id) { return nodes_[id].grad; }

    /// weight shape (c_out, c_in, k, k) with k in {1, 3}; bias (1, c_out, 1, 1).
    int conv2d(int x, int weight, int bias, int stride) {
        const TensorT<T>& in = nodes_[x].value;
        const TensorT<T>& w = nodes_[weight].value;
        const int k = w.shape[3];
        if ((k != 1 && k != 3) || w.shape[2] != k) {
            throw std::invalid_argument("conv2d: kernel must be 1x1 or 3x3");
        }
        if (w.shape[1] != in.c()) throw std::invalid_argument("conv2d: channel mismatch");
        if (stride != 1 && stride != 2) throw std::invalid_argument("conv2d: stride must be 1 or 2");

        const int pad = k / 2;
        const int oh = (in.h() + 2 * pad - k) / stride + 1;
        const int ow = (in.w() + 2 * pad - k) / stride + 1;
        TensorT<T> out(in.n(), w.shape[0], oh, ow);
        conv_forward(in, w, nodes_[bias].value, out, stride, pad);

        const int id = emplace(std::move(out), [x, weight, bias, stride, pad](TapeT& t, int self) {
            t.conv_backward(self, x, weight, bias, stride, pad);
        });
        return id;
    }

    int relu(int x) {
        TensorT<T> out = nodes_[x].value;
        for (auto& v : out.data) v = v > T{0} ? v : T{0};
        return emplace(std::move(out), [x](TapeT& t, int self) {
            const auto& in = t.nodes_[x].value;
            auto& gin = t.nodes_[x].grad;
            const auto& gout = t.nodes_[self].grad;
            for (std::size_t i = 0; i < gin.data.size(); ++i) {
                if (in.data[i] > T{0}) gin.data[i] += gout.data[i];
            }
        });
    }

    int sigmoid(int x) {
        TensorT<T> out = nodes_[x].value;
        for (auto& v : out.data) v = T{1} / (T{1} + std::exp(-v));
        return emplace(std::move(out), [x](TapeT& t, int self) {
            const auto& s = t.nodes_[self].value;
            auto& gin = t.nodes_[x].grad;
            const auto& gout = t.nodes_[self].grad;
            for (std::size_t i = 0; i < gin.data.size(); ++i) {
                gin.data[i] += gout.data[i] * s.data[i] * (T{1} - s.data[i]);
            }
        });
    }

    int add(int a, int b) {
        check_same_shape(nodes_[a].value.shape, nodes_[b].value.shape, "add");
        TensorT<T> out = nodes_[a].value;
        const auto& vb = nodes_[b].value;
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += vb.data[i];
        return emplace(std::move(out), [a, b](TapeT& t, int self) {
            const auto& gout = t.nodes_[self].grad;
            auto& ga = t.nodes_[a].grad;
            auto& gb = t.nodes_[b].grad;
            for (std::size_t i = 0; i < gout.data.size(); ++i) {
                ga.data[i] += gout.data[i];
                gb.data[i] += gout.data[i];
            }
        });
    }

    /// Doubles both spatial dims; out(i, j) = in(i/2, j/2).
    int upsample2x(int x) {
        const TensorT<T>& in = nodes_[x].value;
        TensorT<T> out(in.n(), in.c(), in.h() * 2, in.w() * 2);
        for (int n = 0; n < in.n(); ++n) {
            for (int c = 0; c < in.c(); ++c) {
                const T* src = in.plane(n, c);
                T* dst = out.plane(n, c);
                for (int i = 0; i < out.h(); ++i) {
                    const T* row = src + (i / 2) * in.w();
                    for (int j = 0; j < out.w(); ++j) dst[i * out.w() + j] = row[j / 2];
                }
            }
        }
        return emplace(std::move(out), [x](TapeT& t, int self) {
            const auto& gout = t.nodes_[self].grad;
            auto& gin = t.nodes_[x].grad;
            const int iw = gin.w();
            for (int n = 0; n < gout.n(); ++n) {
                for (int c = 0; c < gout.c(); ++c) {
                    const T* g = gout.plane(n, c);
                    T* gi = gin.plane(n, c);
                    for (int i = 0; i < gout.h(); ++i) {
                        T* row = gi + (i / 2) * iw;
                        for (int j = 0; j < gout.w(); ++j) row[j / 2] += g[i * gout.w() + j];
                    }
                }
            }
        });
    }

    void backward() {
        for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
            if (nodes_[id].back) nodes_[id].back(*this, id);
        }
    }

private:
    using BackFn = std::function<void(TapeT&, int)>;

    struct Node {
        TensorT<T> value;
        TensorT<T> grad;
        BackFn back;
    };

    int emplace(TensorT<T> v, BackFn back) {
        Node node;
        node.grad = TensorT<T>(v.shape[0], v.shape[1], v.shape[2], v.shape[3]);
        node.value = std::move(v);
        node.back = std::move(back);
        nodes_.push_back(std::move(node));
        return static_cast<int>(nodes_.size()) - 1;
    }

    static void conv_forward(const TensorT<T>& in, const TensorT<T>& w, const TensorT<T>& bias,
                             TensorT<T>& out, int stride, int pad) {
        const int k = w.shape[3];
        const int oh = out.h(), ow = out.w(), ih = in.h(), iw = in.w();
        for (int n = 0; n < in.n(); ++n) {
            for (int co = 0; co < out.c(); ++co) {
                T* o = out.plane(n, co);
                const T b = bias.data[co];
                for (int i = 0; i < oh * ow; ++i) o[i] = b;
                for (int ci = 0; ci < in.c(); ++ci) {
                    const T* x = in.plane(n, ci);
                    const T* wk = &w.data[(static_cast<std::size_t>(co) * in.c() + ci) * k * k];
                    for (int ki = 0; ki < k; ++ki) {
                        for (int kj = 0; kj < k; ++kj) {
                            const T wv = wk[ki * k + kj];
                            for (int oi = 0; oi < oh; ++oi) {
                                const int ii = oi * stride + ki - pad;
                                if (ii < 0 || ii >= ih) continue;
                                const T* xr = x + ii * iw;
                                T* orow = o + oi * ow;
                                for (int oj = 0; oj < ow; ++oj) {
                                    const int jj = oj * stride + kj - pad;
                                    if (jj < 0 || jj >= iw) continue;
                                    orow[oj] += wv * xr[jj];
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    void conv_backward(int self, int x, int weight, int bias, int stride, int pad) {
        const TensorT<T>& in = nodes_[x].value;
        const TensorT<T>& w = nodes_[weight].value;
        const TensorT<T>& gout = nodes_[self].grad;
        TensorT<T>& gin = nodes_[x].grad;
        TensorT<T>& gw = nodes_[weight].grad;
        TensorT<T>& gb = nodes_[bias].grad;

        const int k = w.shape[3];
        const int oh = gout.h(), ow = gout.w(), ih = in.h(), iw = in.w();
        for (int n = 0; n < in.n(); ++n) {
            for (int co = 0; co < gout.c(); ++co) {
                const T* g = gout.plane(n, co);
                T gbias{};
                for (int i = 0; i < oh * ow; ++i) gbias += g[i];
                gb.data[co] += gbias;
                for (int ci = 0; ci < in.c(); ++ci) {
                    const T* xp = in.plane(n, ci);
                    T* gxp = gin.plane(n, ci);
                    const std::size_t wbase = (static_cast<std::size_t>(co) * in.c() + ci) * k * k;
                    for (int ki = 0; ki < k; ++ki) {
                        for (int kj = 0; kj < k; ++kj) {
                            const T wv = w.data[wbase + ki * k + kj];
                            T gwv{};
                            for (int oi = 0; oi < oh; ++oi) {
                                const int ii = oi * stride + ki - pad;
                                if (ii < 0 || ii >= ih) continue;
                                const T* xr = xp + ii * iw;
                                T* gxr = gxp + ii * iw;
                                const T* grow = g + oi * ow;
                                for (int oj = 0; oj < ow; ++oj) {
                                    const int jj = oj * stride + kj - pad;
                                    if (jj < 0 || jj >= iw) continue;
                                    gwv += grow[oj] * xr[jj];
                                    gxr[jj] += grow[oj] * wv;
                                }
                            }
                            gw.data[wbase + ki * k + kj] += gwv;
                        }
                    }
                }
            }
        }
    }

    std::vector<Node> nodes_;
};

using Tape = TapeT<float>;

}  // namespace fsaf
