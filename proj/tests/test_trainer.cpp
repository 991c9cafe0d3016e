// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fsaf/rng.hpp"
#include "fsaf/trainer.hpp"

using namespace fsaf;

namespace {

/// In-memory scene: solid rectangles on a gray background.
template <typename T>
SampleT<T> synthetic_sample(int size, const std::vector<Box>& instances, std::uint64_t seed) {
    SampleT<T> s;
    s.image = TensorT<T>(1, 3, size, size);
    Rng rng(seed);
    for (auto& v : s.image.data) v = static_cast<T>(0.8 + rng.uniform(-0.02, 0.02));
    for (const Box& b : instances) {
        const double colors[3][3] = {{0.8, 0.15, 0.15}, {0.15, 0.65, 0.15}, {0.15, 0.25, 0.8}};
        const int top = (int)std::lround(b.top());
        const int left = (int)std::lround(b.left());
        for (int c = 0; c < 3; ++c) {
            T* plane = s.image.plane(0, c);
            for (int i = top; i < top + (int)b.h && i < size; ++i) {
                for (int j = left; j < left + (int)b.w && j < size; ++j) {
                    if (i >= 0 && j >= 0) plane[i * size + j] = (T)colors[b.class_id % 3][c];
                }
            }
        }
    }
    s.instances = instances;
    return s;
}

TrainConfig tiny_train_config() {
    TrainConfig cfg;
    cfg.iterations = 4;
    cfg.batch_size = 2;
    cfg.reference_batch = 2;
    cfg.base_lr = 1e-4;
    cfg.weight_decay = 0.0;
    cfg.flip_augmentation = false;
    cfg.warmup_iterations = 0;
    return cfg;
}

}  // namespace

TEST_CASE("full-model gradients match finite differences (both branches)") {
    ModelConfig mc = ModelConfig::tiny();
    mc.seed = 42;
    auto model = build_model<double>(mc);
    REQUIRE(model.num_scalars() < 10000);

    std::vector<SampleT<double>> batch;
    batch.push_back(synthetic_sample<double>(32, {{0, 16, 14, 14, 10}}, 1));
    batch.push_back(synthetic_sample<double>(32, {{1, 8, 20, 8, 8}, {0, 24, 10, 12, 16}}, 2));

    TrainConfig cfg = tiny_train_config();
    cfg.selection = SelectionMethod::kOnline;
    cfg.branches = BranchMode::kBoth;

    const GradCheckReport report = gradient_check(model, batch, cfg);
    INFO("worst: ", report.worst_param, " err: ", report.max_rel_err);
    CHECK(report.checked >= 200);
    CHECK(report.pass(1e-4));
}

TEST_CASE("a corrupted layer gradient is detected and named") {
    ModelConfig mc = ModelConfig::tiny();
    auto model = build_model<double>(mc);
    std::vector<SampleT<double>> batch;
    batch.push_back(synthetic_sample<double>(32, {{0, 16, 16, 12, 12}}, 3));

    TrainConfig cfg = tiny_train_config();
    const GradCheckReport report =
        gradient_check(model, batch, cfg, 240, 1e-5, 99, "smooth3.w", 0.05);
    CHECK_FALSE(report.pass(1e-4));
    CHECK(report.worst_param == "smooth3.w");
}

TEST_CASE("zero-instance batches pass the gradient check") {
    ModelConfig mc = ModelConfig::tiny();
    auto model = build_model<double>(mc);
    std::vector<SampleT<double>> batch;
    batch.push_back(synthetic_sample<double>(32, {}, 4));

    TrainConfig cfg = tiny_train_config();
    const GradCheckReport report = gradient_check(model, batch, cfg);
    INFO("worst: ", report.worst_param, " err: ", report.max_rel_err);
    CHECK(report.pass(1e-4));
}

TEST_CASE("a small step on a fixed batch reduces that batch's loss") {
    ModelConfig mc = ModelConfig::tiny();
    mc.seed = 5;
    auto model = build_model<float>(mc);

    const auto sample = synthetic_sample<float>(32, {{0, 16, 16, 12, 10}}, 5);
    std::vector<const Sample*> batch = {&sample};

    TrainConfig cfg = tiny_train_config();
    cfg.batch_size = 1;
    cfg.reference_batch = 1;
    cfg.iterations = 100;  // keeps the schedule away from its drop points

    Trainer trainer(model, cfg);
    const StepReport first = trainer.step(batch, 0);
    const StepReport second = trainer.step(batch, 1);
    CHECK(second.total < first.total);
}

TEST_CASE("zero branch weight leaves parameters untouched") {
    ModelConfig mc = ModelConfig::tiny();
    auto model = build_model<float>(mc);
    const auto before = model;

    const auto sample = synthetic_sample<float>(32, {{0, 16, 16, 12, 10}}, 6);
    std::vector<const Sample*> batch = {&sample};

    TrainConfig cfg = tiny_train_config();
    cfg.batch_size = 1;
    cfg.reference_batch = 1;
    cfg.lambda = 0.0;
    cfg.branches = BranchMode::kAnchorFreeOnly;
    cfg.weight_decay = 0.0;

    Trainer trainer(model, cfg);
    trainer.step(batch, 0);
    for (std::size_t p = 0; p < model.params.size(); ++p) {
        REQUIRE(model.params[p].tensor.data == before.params[p].tensor.data);
    }
}

TEST_CASE("identical seeds give identical loss curves and parameters") {
    std::vector<Sample> data;
    data.push_back(synthetic_sample<float>(32, {{0, 16, 16, 12, 10}}, 7));
    data.push_back(synthetic_sample<float>(32, {{1, 10, 22, 10, 8}}, 8));

    auto run = [&]() {
        ModelConfig mc = ModelConfig::tiny();
        mc.seed = 11;
        auto model = build_model<float>(mc);
        TrainConfig cfg = tiny_train_config();
        cfg.iterations = 6;
        cfg.seed = 21;
        cfg.flip_augmentation = true;
        std::vector<double> losses;
        train(model, data, cfg, [&](int, const StepReport& r) { losses.push_back(r.total); });
        return std::make_pair(std::move(model), std::move(losses));
    };

    const auto [model_a, losses_a] = run();
    const auto [model_b, losses_b] = run();
    REQUIRE(losses_a == losses_b);
    for (std::size_t p = 0; p < model_a.params.size(); ++p) {
        REQUIRE(model_a.params[p].tensor.data == model_b.params[p].tensor.data);
    }
}

TEST_CASE("learning rate schedule steps down at the documented fractions") {
    TrainConfig cfg;
    cfg.iterations = 900;
    cfg.batch_size = 4;
    cfg.reference_batch = 16;
    cfg.base_lr = 0.01;
    cfg.warmup_iterations = 100;
    CHECK(cfg.lr_at(0) == doctest::Approx(0.0025 * (1.0 / 3 + 2.0 / 3 * 0.01)));
    CHECK(cfg.lr_at(99) == doctest::Approx(0.0025));
    CHECK(cfg.lr_at(100) == doctest::Approx(0.0025));
    CHECK(cfg.lr_at(599) == doctest::Approx(0.0025));
    CHECK(cfg.lr_at(600) == doctest::Approx(0.00025));
    CHECK(cfg.lr_at(799) == doctest::Approx(0.00025));
    CHECK(cfg.lr_at(800) == doctest::Approx(0.000025));
}

TEST_CASE("heuristic-selection training also descends") {
    ModelConfig mc = ModelConfig::tiny();
    auto model = build_model<float>(mc);
    const auto sample = synthetic_sample<float>(32, {{0, 16, 16, 14, 14}}, 9);
    std::vector<const Sample*> batch = {&sample};

    TrainConfig cfg = tiny_train_config();
    cfg.batch_size = 1;
    cfg.reference_batch = 1;
    cfg.selection = SelectionMethod::kHeuristic;
    cfg.iterations = 100;

    Trainer trainer(model, cfg);
    const StepReport first = trainer.step(batch, 0);
    const StepReport second = trainer.step(batch, 1);
    CHECK(second.total < first.total);
}

TEST_CASE("non-finite losses abort with a diagnostic") {
    ModelConfig mc = ModelConfig::tiny();
    auto model = build_model<float>(mc);
    // Poison a head bias; a poisoned backbone weight would be laundered to
    // zero by relu before reaching any loss.
    model.params[model.find("af_cls.b")].tensor.data[0] =
        std::numeric_limits<float>::quiet_NaN();

    const auto sample = synthetic_sample<float>(32, {{0, 16, 16, 12, 10}}, 12);
    std::vector<const Sample*> batch = {&sample};
    TrainConfig cfg = tiny_train_config();
    cfg.batch_size = 1;
    cfg.reference_batch = 1;

    Trainer trainer(model, cfg);
    CHECK_THROWS_AS(trainer.step(batch, 3), NumericError);
    try {
        trainer.step(batch, 3);
    } catch (const NumericError& e) {
        const std::string what = e.what();
        CHECK(what.find("iteration 3") != std::string::npos);
        CHECK(what.find("instance") != std::string::npos);
        CHECK(what.find("level") != std::string::npos);
    }
}

TEST_CASE("horizontal flip mirrors images and annotations") {
    const auto sample = synthetic_sample<float>(32, {{0, 10, 16, 8, 6}}, 10);
    const auto flipped = flip_horizontal(sample);
    CHECK(flipped.instances[0].x == doctest::Approx(22.0));
    CHECK(flipped.instances[0].y == doctest::Approx(16.0));
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < 32; ++i) {
            for (int j = 0; j < 32; ++j) {
                REQUIRE(flipped.image.at(0, c, i, j) == sample.image.at(0, c, i, 31 - j));
            }
        }
    }
}
