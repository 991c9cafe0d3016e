// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fsaf {

/// Dense NCHW tensor. Lower-rank values use leading singleton dims.
template <typename T>
struct TensorT {
    std::array<int, 4> shape{0, 0, 0, 0};  ///< n, c, h, w
    std::vector<T> data;

    TensorT() = default;
    TensorT(int n, int c, int h, int w)
        : shape{n, c, h, w}, data(static_cast<std::size_t>(n) * c * h * w, T{}) {}

    int n() const { return shape[0]; }
    int c() const { return shape[1]; }
    int h() const { return shape[2]; }
    int w() const { return shape[3]; }
    std::size_t size() const { return data.size(); }

    T& at(int n_, int c_, int h_, int w_) {
        return data[((static_cast<std::size_t>(n_) * shape[1] + c_) * shape[2] + h_) * shape[3] +
                    w_];
    }
    T at(int n_, int c_, int h_, int w_) const {
        return data[((static_cast<std::size_t>(n_) * shape[1] + c_) * shape[2] + h_) * shape[3] +
                    w_];
    }

    T* plane(int n_, int c_) {
        return data.data() + (static_cast<std::size_t>(n_) * shape[1] + c_) * shape[2] * shape[3];
    }
    const T* plane(int n_, int c_) const {
        return data.data() + (static_cast<std::size_t>(n_) * shape[1] + c_) * shape[2] * shape[3];
    }

    void fill(T v) { data.assign(data.size(), v); }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out(shape[0], shape[1], shape[2], shape[3]);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }

    static TensorT bias(int c) { return TensorT(1, c, 1, 1); }
};

using Tensor = TensorT<float>;

inline void check_same_shape(const std::array<int, 4>& a, const std::array<int, 4>& b,
                             const char* what) {
    if (a != b) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

}  // namespace fsaf
