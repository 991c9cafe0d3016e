// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fsaf/model.hpp"
#include "fsaf/net.hpp"
#include "fsaf/rng.hpp"

using namespace fsaf;

namespace {

TensorT<double> random_tensor(int n, int c, int h, int w, Rng& rng, double lo = -1, double hi = 1) {
    TensorT<double> t(n, c, h, w);
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

/// Weighted sum of a node's values: a scalar objective with known seed grads.
double objective(const TensorT<double>& value, const TensorT<double>& weights) {
    double sum = 0;
    for (std::size_t i = 0; i < value.data.size(); ++i) sum += value.data[i] * weights.data[i];
    return sum;
}

}  // namespace

TEST_CASE("conv2d forward matches a naive reference") {
    Rng rng(1);
    const auto x = random_tensor(2, 3, 7, 6, rng);
    const auto w = random_tensor(4, 3, 3, 3, rng);
    auto b = TensorT<double>::bias(4);
    for (auto& v : b.data) v = rng.uniform(-1, 1);

    for (const int stride : {1, 2}) {
        TapeT<double> tape;
        const int out = tape.conv2d(tape.input(x), tape.input(w), tape.input(b), stride);
        const auto& v = tape.value(out);
        const int oh = (7 - 1) / stride + 1;
        const int ow = (6 - 1) / stride + 1;
        REQUIRE(v.h() == oh);
        REQUIRE(v.w() == ow);
        for (int n = 0; n < 2; ++n) {
            for (int co = 0; co < 4; ++co) {
                for (int i = 0; i < oh; ++i) {
                    for (int j = 0; j < ow; ++j) {
                        double acc = b.data[co];
                        for (int ci = 0; ci < 3; ++ci) {
                            for (int ki = 0; ki < 3; ++ki) {
                                for (int kj = 0; kj < 3; ++kj) {
                                    const int ii = i * stride + ki - 1;
                                    const int jj = j * stride + kj - 1;
                                    if (ii < 0 || ii >= 7 || jj < 0 || jj >= 6) continue;
                                    acc += w.at(co, ci, ki, kj) * x.at(n, ci, ii, jj);
                                }
                            }
                        }
                        REQUIRE(v.at(n, co, i, j) == doctest::Approx(acc).epsilon(1e-12));
                    }
                }
            }
        }
    }
}

TEST_CASE("tape gradients match finite differences through a small network") {
    Rng rng(2);
    auto x = random_tensor(1, 2, 8, 8, rng);
    auto w1 = random_tensor(3, 2, 3, 3, rng, -0.5, 0.5);
    auto b1 = random_tensor(1, 3, 1, 1, rng, -0.2, 0.2);
    auto w2 = random_tensor(2, 3, 1, 1, rng, -0.5, 0.5);
    auto b2 = random_tensor(1, 2, 1, 1, rng, -0.2, 0.2);

    // conv(s2) -> relu -> conv1x1 -> sigmoid -> upsample -> add(skip of itself)
    auto run = [&](TensorT<double>* grad_w1, TensorT<double>* grad_x,
                   const TensorT<double>& weights) {
        TapeT<double> tape;
        const int xi = tape.input(x);
        const int w1i = tape.input(w1);
        const int b1i = tape.input(b1);
        const int c1 = tape.conv2d(xi, w1i, b1i, 2);
        const int r1 = tape.relu(c1);
        const int w2i = tape.input(w2);
        const int b2i = tape.input(b2);
        const int c2 = tape.conv2d(r1, w2i, b2i, 1);
        const int s2 = tape.sigmoid(c2);
        const int up = tape.upsample2x(s2);
        const int out = tape.add(up, up);
        const double val = objective(tape.value(out), weights);
        if (grad_w1) {
            tape.grad(out) = weights;
            tape.backward();
            *grad_w1 = tape.grad(w1i);
            *grad_x = tape.grad(xi);
        }
        return val;
    };

    const auto weights = random_tensor(1, 2, 8, 8, rng);

    TensorT<double> gw1, gx;
    run(&gw1, &gx, weights);

    const double h = 1e-6;
    Rng pick(3);
    for (int trial = 0; trial < 25; ++trial) {
        const auto i = (std::size_t)pick.uniform_int(0, (int)w1.data.size() - 1);
        const double saved = w1.data[i];
        w1.data[i] = saved + h;
        const double up_v = run(nullptr, nullptr, weights);
        w1.data[i] = saved - h;
        const double down_v = run(nullptr, nullptr, weights);
        w1.data[i] = saved;
        const double fd = (up_v - down_v) / (2 * h);
        CHECK(std::abs(gw1.data[i] - fd) / std::max({std::abs(fd), std::abs(gw1.data[i]), 1e-6}) <
              1e-5);
    }
    for (int trial = 0; trial < 25; ++trial) {
        const auto i = (std::size_t)pick.uniform_int(0, (int)x.data.size() - 1);
        const double saved = x.data[i];
        x.data[i] = saved + h;
        const double up_v = run(nullptr, nullptr, weights);
        x.data[i] = saved - h;
        const double down_v = run(nullptr, nullptr, weights);
        x.data[i] = saved;
        const double fd = (up_v - down_v) / (2 * h);
        CHECK(std::abs(gx.data[i] - fd) / std::max({std::abs(fd), std::abs(gx.data[i]), 1e-6}) <
              1e-5);
    }
}

TEST_CASE("upsample doubles dimensions by nearest neighbor") {
    TensorT<double> x(1, 1, 2, 2);
    x.data = {1, 2, 3, 4};
    TapeT<double> tape;
    const int up = tape.upsample2x(tape.input(x));
    const auto& v = tape.value(up);
    REQUIRE(v.h() == 4);
    REQUIRE(v.w() == 4);
    CHECK(v.at(0, 0, 0, 0) == 1);
    CHECK(v.at(0, 0, 0, 1) == 1);
    CHECK(v.at(0, 0, 1, 1) == 1);
    CHECK(v.at(0, 0, 0, 2) == 2);
    CHECK(v.at(0, 0, 3, 3) == 4);
}

TEST_CASE("classification bias realizes the initial objectness level") {
    ModelConfig config = ModelConfig::tiny();
    config.pi = 0.01;
    const auto model = build_model<double>(config);
    const int idx = model.find("af_cls.b");
    REQUIRE(idx >= 0);
    const double bias = model.params[idx].tensor.data[0];
    CHECK(bias == doctest::Approx(-std::log(99.0)).epsilon(1e-9));
    CHECK(bias == doctest::Approx(-4.59512).epsilon(1e-5));
    CHECK(1.0 / (1.0 + std::exp(-bias)) == doctest::Approx(0.01).epsilon(1e-9));

    config.pi = 0.5;
    const auto balanced = build_model<double>(config);
    CHECK(balanced.params[balanced.find("af_cls.b")].tensor.data[0] == doctest::Approx(0.0));

    const int reg = model.find("af_reg.b");
    CHECK(model.params[reg].tensor.data[0] == doctest::Approx(0.1));
}

TEST_CASE("model building is deterministic for a fixed seed") {
    ModelConfig config = ModelConfig::tiny();
    config.seed = 1234;
    const auto a = build_model<float>(config);
    const auto b = build_model<float>(config);
    REQUIRE(a.params.size() == b.params.size());
    for (std::size_t p = 0; p < a.params.size(); ++p) {
        REQUIRE(a.params[p].name == b.params[p].name);
        REQUIRE(a.params[p].tensor.data == b.params[p].tensor.data);
    }
    config.seed = 1235;
    const auto c = build_model<float>(config);
    CHECK(a.params[0].tensor.data != c.params[0].tensor.data);
}

TEST_CASE("forward produces the pyramid map shapes") {
    ModelConfig config;
    config.num_classes = 3;
    config.level_min = 3;
    config.level_max = 5;
    config.widths = {4, 6, 8, 8, 8};
    config.fpn_channels = 8;
    const auto model = build_model<float>(config);

    Tensor images(1, 3, 128, 128);
    const ForwardPass fp = forward(model, images);
    REQUIRE(fp.af_cls_prob.size() == 3);
    CHECK(fp.tape.value(fp.af_cls_prob[0]).h() == 16);
    CHECK(fp.tape.value(fp.af_cls_prob[1]).h() == 8);
    CHECK(fp.tape.value(fp.af_cls_prob[2]).h() == 4);
    CHECK(fp.tape.value(fp.af_cls_prob[0]).c() == 3);
    CHECK(fp.tape.value(fp.af_reg[0]).c() == 4);
    CHECK(fp.tape.value(fp.ab_cls_prob[0]).c() == 9 * 3);
    CHECK(fp.tape.value(fp.ab_reg[0]).c() == 9 * 4);

    // Offsets are non-negative, probabilities in (0, 1).
    for (int li = 0; li < 3; ++li) {
        for (const float v : fp.tape.value(fp.af_reg[li]).data) CHECK(v >= 0.0f);
        for (const float v : fp.tape.value(fp.af_cls_prob[li]).data) {
            CHECK(v > 0.0f);
            CHECK(v < 1.0f);
        }
    }

    CHECK_THROWS_AS(forward(model, Tensor(1, 3, 100, 128)), std::invalid_argument);
    CHECK_THROWS_AS(forward(model, Tensor(1, 1, 128, 128)), std::invalid_argument);
}

TEST_CASE("fresh model emits probabilities near the configured objectness") {
    ModelConfig config;
    config.num_classes = 3;
    config.level_min = 3;
    config.level_max = 5;
    config.widths = {8, 16, 16, 24, 32};
    config.fpn_channels = 16;
    config.seed = 7;
    const auto model = build_model<float>(config);
    const ForwardPass fp = forward(model, Tensor(2, 3, 128, 128));

    std::vector<float> probs;
    for (int li = 0; li < 3; ++li) {
        const auto& v = fp.tape.value(fp.af_cls_prob[li]);
        probs.insert(probs.end(), v.data.begin(), v.data.end());
    }
    std::sort(probs.begin(), probs.end());
    const float median = probs[probs.size() / 2];
    CHECK(median > 0.005f);
    CHECK(median < 0.02f);
}

TEST_CASE("doubling the batch duplicates per-sample outputs") {
    ModelConfig config = ModelConfig::tiny();
    const auto model = build_model<float>(config);
    Rng rng(9);
    Tensor one(1, 3, 32, 32);
    for (auto& v : one.data) v = (float)rng.uniform(0, 1);
    Tensor two(2, 3, 32, 32);
    std::copy(one.data.begin(), one.data.end(), two.data.begin());
    std::copy(one.data.begin(), one.data.end(), two.data.begin() + one.data.size());

    const ForwardPass fa = forward(model, one);
    const ForwardPass fb = forward(model, two);
    for (std::size_t li = 0; li < fa.af_cls_prob.size(); ++li) {
        const auto a = fa.extract(fa.af_cls_prob[li], 0);
        const auto b0 = fb.extract(fb.af_cls_prob[li], 0);
        const auto b1 = fb.extract(fb.af_cls_prob[li], 1);
        REQUIRE(a == b0);
        REQUIRE(a == b1);
    }
}

TEST_CASE("model files round trip bit-exactly") {
    ModelConfig config = ModelConfig::tiny();
    config.seed = 31;
    const auto model = build_model<float>(config);
    const auto path = std::filesystem::temp_directory_path() / "fsaf_test_model.bin";
    save_model(model, path.string());
    const Model loaded = load_model(path.string());

    REQUIRE(loaded.params.size() == model.params.size());
    for (std::size_t p = 0; p < model.params.size(); ++p) {
        REQUIRE(loaded.params[p].name == model.params[p].name);
        REQUIRE(loaded.params[p].tensor.shape == model.params[p].tensor.shape);
        REQUIRE(loaded.params[p].tensor.data == model.params[p].tensor.data);
    }
    CHECK(loaded.config.num_classes == config.num_classes);
    CHECK(loaded.config.offset_normalizer == config.offset_normalizer);
    std::filesystem::remove(path);
}
