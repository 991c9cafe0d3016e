// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fsaf/anchors.hpp"
#include "fsaf/net.hpp"
#include "fsaf/rng.hpp"
#include "fsaf/tensor.hpp"

namespace fsaf {

/// Fully-convolutional detector: a small strided backbone, a top-down
/// feature pyramid, and per-level heads shared across levels. The anchor-free
/// heads emit K sigmoid class maps and 4 relu offset maps per level; the
/// optional anchor-based heads emit A*K class maps and A*4 linear deltas.
struct ModelConfig {
    int num_classes = 3;
    int level_min = 3;
    int level_max = 5;
    std::vector<int> widths = {8, 16, 16, 24, 32};  ///< backbone stage channels, stride 2 each
    int fpn_channels = 16;
    bool anchor_branch = true;
    AnchorSpec anchors;
    double pi = 0.01;        ///< initial objectness level of classification outputs
    double reg_bias = 0.1;   ///< initial bias of offset outputs
    double init_sigma = 0.01;
    double offset_normalizer = 4.0;
    std::uint64_t seed = 1;

    int top_backbone_level() const { return std::min(5, level_max); }
    int num_levels() const { return level_max - level_min + 1; }
    void validate() const;

    /// Small configuration for double-precision gradient checking.
    static ModelConfig tiny();
};

template <typename T>
struct NamedTensor {
    std::string name;
    TensorT<T> tensor;
};

template <typename T>
struct ModelT {
    ModelConfig config;
    std::vector<NamedTensor<T>> params;

    int find(const std::string& name) const {
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (params[i].name == name) return static_cast<int>(i);
        }
        return -1;
    }
    std::size_t num_scalars() const {
        std::size_t n = 0;
        for (const auto& p : params) n += p.tensor.size();
        return n;
    }
};

using Model = ModelT<float>;

/// One recorded forward pass. Keeps the tape alive so gradients can be
/// seeded into head outputs and pulled from parameters.
template <typename T>
struct ForwardPassT {
    TapeT<T> tape;
    PyramidSpec pyramid;
    int batch = 0;
    std::vector<int> param_ids;  ///< parallel to model.params

    // Node ids per pyramid level (index 0 == level_min).
    std::vector<int> af_cls_logit, af_cls_prob, af_reg;
    std::vector<int> ab_cls_logit, ab_cls_prob, ab_reg;

    /// Copies one image's per-level plane block into a double buffer,
    /// channel-major, for the loss routines.
    std::vector<double> extract(int node, int image) const {
        const TensorT<T>& v = tape.value(node);
        const std::size_t plane = static_cast<std::size_t>(v.h()) * v.w();
        std::vector<double> out(static_cast<std::size_t>(v.c()) * plane);
        const T* src = v.plane(image, 0);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(src[i]);
        return out;
    }

    /// Adds `g` into the gradient of `node` for one image, scaled.
    void seed_grad(int node, int image, const std::vector<double>& g, double scale) {
        TensorT<T>& grad = tape.grad(node);
        T* dst = grad.plane(image, 0);
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += static_cast<T>(g[i] * scale);
    }
};

using ForwardPass = ForwardPassT<float>;

namespace detail {

inline std::string level_name(const char* base, int level) {
    return std::string(base) + std::to_string(level);
}

}  // namespace detail

inline void ModelConfig::validate() const {
    if (num_classes < 1) throw std::invalid_argument("model: num_classes must be >= 1");
    if (level_min < 3 || level_max > 7 || level_min > level_max) {
        throw std::invalid_argument("model: levels must satisfy 3 <= min <= max <= 7");
    }
    if (static_cast<int>(widths.size()) != top_backbone_level()) {
        throw std::invalid_argument("model: need one backbone width per stage up to level " +
                                    std::to_string(top_backbone_level()));
    }
    if (fpn_channels < 1) throw std::invalid_argument("model: fpn_channels must be >= 1");
    if (!(pi > 0.0 && pi < 1.0)) throw std::invalid_argument("model: pi must lie in (0, 1)");
}

inline ModelConfig ModelConfig::tiny() {
    ModelConfig c;
    c.num_classes = 2;
    c.level_min = 3;
    c.level_max = 4;
    c.widths = {4, 5, 6, 7};
    c.fpn_channels = 6;
    return c;
}

template <typename T>
ModelT<T> build_model(const ModelConfig& config) {
    config.validate();
    ModelT<T> model;
    model.config = config;
    Rng rng(config.seed);

    const double cls_bias = -std::log((1.0 - config.pi) / config.pi);
    const int f = config.fpn_channels;
    const int top = config.top_backbone_level();

    // Feature-extraction convs get a fan-in-scaled Gaussian so activations
    // survive the depth of an untrained backbone; the prediction heads get
    // the small fixed sigma and their special biases.
    auto push = [&](const std::string& name, int co, int ci, int k, double sigma,
                    double bias_value) {
        TensorT<T> w(co, ci, k, k);
        for (auto& v : w.data) v = static_cast<T>(rng.normal(0.0, sigma));
        TensorT<T> b = TensorT<T>::bias(co);
        b.fill(static_cast<T>(bias_value));
        model.params.push_back({name + ".w", std::move(w)});
        model.params.push_back({name + ".b", std::move(b)});
    };
    // Small positive bias keeps relu inputs off exact zero even over dead
    // patches, where a zero bias would pin them to the kink.
    auto push_feature = [&](const std::string& name, int co, int ci, int k) {
        push(name, co, ci, k, std::sqrt(2.0 / (ci * k * k)), 0.01);
    };

    int ci = 3;
    for (int stage = 1; stage <= top; ++stage) {
        push_feature(detail::level_name("bb", stage), config.widths[stage - 1], ci, 3);
        ci = config.widths[stage - 1];
    }
    for (int l = config.level_min; l <= top; ++l) {
        push_feature(detail::level_name("lat", l), f, config.widths[l - 1], 1);
        push_feature(detail::level_name("smooth", l), f, f, 3);
    }
    if (config.level_max >= 6) push_feature("p6", f, f, 3);
    if (config.level_max >= 7) push_feature("p7", f, f, 3);

    push_feature("cls_tower", f, f, 3);
    push_feature("reg_tower", f, f, 3);
    push("af_cls", config.num_classes, f, 3, config.init_sigma, cls_bias);
    push("af_reg", 4, f, 3, config.init_sigma, config.reg_bias);
    if (config.anchor_branch) {
        const int a = config.anchors.per_location();
        push("ab_cls", a * config.num_classes, f, 3, config.init_sigma, cls_bias);
        push("ab_reg", a * 4, f, 3, config.init_sigma, 0.0);
    }
    return model;
}

/// Records a forward pass over a batch of images (N, 3, H, W). H and W must
/// be divisible by 2^level_max.
template <typename T>
ForwardPassT<T> forward(const ModelT<T>& model, const TensorT<T>& images) {
    const ModelConfig& cfg = model.config;
    if (images.c() != 3) throw std::invalid_argument("forward: expected 3 input channels");
    const int mask = (1 << cfg.level_max) - 1;
    if ((images.h() & mask) != 0 || (images.w() & mask) != 0) {
        throw std::invalid_argument("forward: image dims must be divisible by 2^" +
                                    std::to_string(cfg.level_max));
    }

    ForwardPassT<T> fp;
    fp.pyramid = {cfg.level_min, cfg.level_max, images.h(), images.w()};
    fp.batch = images.n();

    TapeT<T>& tape = fp.tape;
    fp.param_ids.reserve(model.params.size());
    for (const auto& p : model.params) fp.param_ids.push_back(tape.input(p.tensor));
    auto pid = [&](const std::string& name) { return fp.param_ids[model.find(name)]; };
    auto conv = [&](int x, const std::string& name, int stride) {
        return tape.conv2d(x, pid(name + ".w"), pid(name + ".b"), stride);
    };

    const int top = cfg.top_backbone_level();
    int x = tape.input(images);
    std::vector<int> backbone(top + 1, -1);  // backbone[s] = C_s
    for (int stage = 1; stage <= top; ++stage) {
        x = tape.relu(conv(x, detail::level_name("bb", stage), 2));
        backbone[stage] = x;
    }

    std::vector<int> pyramid_nodes(cfg.level_max + 1, -1);
    int merged = -1;
    for (int l = top; l >= cfg.level_min; --l) {
        int lateral = conv(backbone[l], detail::level_name("lat", l), 1);
        merged = (l == top) ? lateral : tape.add(lateral, tape.upsample2x(merged));
        pyramid_nodes[l] = conv(merged, detail::level_name("smooth", l), 1);
    }
    if (cfg.level_max >= 6) pyramid_nodes[6] = conv(pyramid_nodes[5], "p6", 2);
    if (cfg.level_max >= 7) pyramid_nodes[7] = conv(tape.relu(pyramid_nodes[6]), "p7", 2);

    for (int l = cfg.level_min; l <= cfg.level_max; ++l) {
        const int p = pyramid_nodes[l];
        const int tc = tape.relu(conv(p, "cls_tower", 1));
        const int tr = tape.relu(conv(p, "reg_tower", 1));

        const int cls_logit = conv(tc, "af_cls", 1);
        fp.af_cls_logit.push_back(cls_logit);
        fp.af_cls_prob.push_back(tape.sigmoid(cls_logit));
        fp.af_reg.push_back(tape.relu(conv(tr, "af_reg", 1)));

        if (cfg.anchor_branch) {
            const int ab_logit = conv(tc, "ab_cls", 1);
            fp.ab_cls_logit.push_back(ab_logit);
            fp.ab_cls_prob.push_back(tape.sigmoid(ab_logit));
            fp.ab_reg.push_back(conv(tr, "ab_reg", 1));
        }
    }
    return fp;
}

/// Detector weights file: magic "FSAF", format version, JSON manifest of
/// named tensor shapes and the model configuration, then raw little-endian
/// float payloads in manifest order.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace fsaf
