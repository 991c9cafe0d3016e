// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "fsaf/dataset.hpp"
#include "fsaf/eval.hpp"
#include "fsaf/rng.hpp"
#include "fsaf/selection.hpp"
#include "oracles.hpp"

using namespace fsaf;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

Detection det(int cls, double score, const Box& b) {
    Detection d;
    d.class_id = cls;
    d.score = score;
    d.box = {b.top(), b.left(), b.bottom(), b.right()};
    return d;
}

}  // namespace

TEST_CASE("synthetic generation is deterministic and annotation-exact") {
    SynthOptions opts;
    opts.num_images = 8;
    opts.image_size = 64;
    opts.num_classes = 3;
    opts.seed = 99;

    opts.out_dir = temp_dir("fsaf_synth_a").string();
    const Dataset a = make_synthetic(opts);
    opts.out_dir = temp_dir("fsaf_synth_b").string();
    const Dataset b = make_synthetic(opts);

    CHECK(slurp(fs::path(a.root) / "annotations.json") ==
          slurp(fs::path(b.root) / "annotations.json"));
    for (const auto& im : a.images) {
        CHECK(slurp(a.image_path(im)) == slurp(fs::path(b.root) / im.file));
    }

    // Boxes stay inside the image; classes stay in range.
    for (const auto& inst : a.instances) {
        CHECK(inst.box.left() >= 0.0);
        CHECK(inst.box.top() >= 0.0);
        CHECK(inst.box.right() <= opts.image_size);
        CHECK(inst.box.bottom() <= opts.image_size);
        CHECK(inst.box.class_id >= 0);
        CHECK(inst.box.class_id < 3);
    }
    fs::remove_all(a.root);
    fs::remove_all(b.root);
}

TEST_CASE("instance count range is honored") {
    SynthOptions opts;
    opts.num_images = 6;
    opts.image_size = 64;
    opts.min_instances = 1;
    opts.max_instances = 1;
    opts.out_dir = temp_dir("fsaf_synth_c").string();
    const Dataset d = make_synthetic(opts);
    for (const auto& im : d.images) CHECK(d.boxes_of(im.id).size() == 1);
    fs::remove_all(d.root);
}

TEST_CASE("annotations round trip identically") {
    SynthOptions opts;
    opts.num_images = 5;
    opts.image_size = 64;
    opts.out_dir = temp_dir("fsaf_synth_d").string();
    const Dataset d = make_synthetic(opts);
    const Dataset loaded = load_annotations((fs::path(d.root) / "annotations.json").string());
    REQUIRE(loaded.images.size() == d.images.size());
    REQUIRE(loaded.instances.size() == d.instances.size());
    for (std::size_t i = 0; i < d.instances.size(); ++i) {
        CHECK(loaded.instances[i].image_id == d.instances[i].image_id);
        CHECK(loaded.instances[i].box.class_id == d.instances[i].box.class_id);
        CHECK(loaded.instances[i].box.x == d.instances[i].box.x);
        CHECK(loaded.instances[i].box.w == d.instances[i].box.w);
    }
    // A second save is byte-identical.
    const auto again = (fs::path(d.root) / "again.json").string();
    save_annotations(again, loaded);
    CHECK(slurp(again) == slurp(fs::path(d.root) / "annotations.json"));
    fs::remove_all(d.root);
}

TEST_CASE("image pixels round trip through ppm and tensors") {
    SynthOptions opts;
    opts.num_images = 2;
    opts.image_size = 64;
    opts.out_dir = temp_dir("fsaf_synth_e").string();
    const Dataset d = make_synthetic(opts);
    const Sample s = load_sample(d, 0);
    CHECK(s.image.h() == 64);
    CHECK(s.image.w() == 64);
    for (const float v : s.image.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    CHECK(s.instances.size() == d.boxes_of(0).size());
    fs::remove_all(d.root);
}

TEST_CASE("size distribution of a large-image dataset spans the pyramid") {
    SynthOptions opts;
    opts.num_images = 60;
    opts.image_size = 512;
    opts.min_instances = 2;
    opts.max_instances = 4;
    opts.seed = 3;
    opts.out_dir = temp_dir("fsaf_synth_f").string();
    const Dataset d = make_synthetic(opts);
    const PyramidSpec pyramid{3, 5, 512, 512};
    std::set<int> levels;
    for (const auto& inst : d.instances) {
        levels.insert(heuristic_select(inst.box.w, inst.box.h, 5, pyramid).level);
    }
    CHECK(levels == std::set<int>{3, 4, 5});
    fs::remove_all(d.root);
}

TEST_CASE("perfect detections score full AP") {
    const std::vector<std::vector<Box>> gt = {{{0, 20, 20, 16, 12}, {1, 40, 40, 20, 20}},
                                              {{0, 30, 30, 10, 10}}};
    std::vector<std::vector<Detection>> dets(2);
    for (std::size_t im = 0; im < gt.size(); ++im) {
        for (const Box& b : gt[im]) dets[im].push_back(det(b.class_id, 1.0, b));
    }
    const EvalReport r = evaluate(dets, gt, 2);
    CHECK(r.ap == doctest::Approx(1.0));
    CHECK(r.ap50 == doctest::Approx(1.0));
    CHECK(r.ap75 == doctest::Approx(1.0));
}

TEST_CASE("no detections scores zero") {
    const std::vector<std::vector<Box>> gt = {{{0, 20, 20, 16, 12}}};
    const EvalReport r = evaluate({{}}, gt, 1);
    CHECK(r.ap == 0.0);
    CHECK(r.ap50 == 0.0);
}

TEST_CASE("one of two truths found gives the 101-point half AP") {
    const std::vector<std::vector<Box>> gt = {{{0, 20, 20, 16, 12}, {0, 60, 60, 16, 12}}};
    const std::vector<std::vector<Detection>> dets = {{det(0, 1.0, gt[0][0])}};
    const EvalReport r = evaluate(dets, gt, 1);
    CHECK(r.ap50 == doctest::Approx(51.0 / 101.0));
    CHECK(r.ap == doctest::Approx(51.0 / 101.0));
}

TEST_CASE("evaluate equals the naive oracle on small random scenes") {
    Rng rng(59);
    for (int trial = 0; trial < 300; ++trial) {
        const int num_classes = 2;
        std::vector<std::vector<Box>> gt(2);
        std::vector<std::vector<Detection>> dets(2);
        for (int im = 0; im < 2; ++im) {
            const int n_gt = (int)rng.uniform_int(0, 3);
            for (int g = 0; g < n_gt; ++g) {
                gt[im].push_back({(int)rng.uniform_int(0, num_classes - 1), rng.uniform(20, 80),
                                  rng.uniform(20, 80), rng.uniform(8, 30), rng.uniform(8, 30)});
            }
            const int n_det = (int)rng.uniform_int(0, 4);
            for (int k = 0; k < n_det; ++k) {
                // Half the detections perturb a truth box, half are random.
                if (!gt[im].empty() && rng.coin()) {
                    Box b = gt[im][(std::size_t)rng.uniform_int(0, (int)gt[im].size() - 1)];
                    b.x += rng.uniform(-4, 4);
                    b.y += rng.uniform(-4, 4);
                    b.w *= rng.uniform(0.8, 1.25);
                    b.h *= rng.uniform(0.8, 1.25);
                    dets[im].push_back(det(b.class_id, rng.uniform(0.1, 1.0), b));
                } else {
                    dets[im].push_back(det((int)rng.uniform_int(0, num_classes - 1),
                                           rng.uniform(0.1, 1.0),
                                           {0, rng.uniform(20, 80), rng.uniform(20, 80),
                                            rng.uniform(8, 30), rng.uniform(8, 30)}));
                }
            }
        }
        const EvalReport got = evaluate(dets, gt, num_classes);
        const testing::OracleAp want = testing::oracle_ap(dets, gt, num_classes);
        REQUIRE(got.ap == doctest::Approx(want.ap).epsilon(1e-12));
        REQUIRE(got.ap50 == doctest::Approx(want.ap50).epsilon(1e-12));
    }
}

TEST_CASE("area partitions split the metric") {
    // One small (16x16 = 256 < 1024) and one large (128x128) instance.
    const std::vector<std::vector<Box>> gt = {{{0, 30, 30, 16, 16}, {0, 200, 200, 128, 128}}};
    const std::vector<std::vector<Detection>> dets = {
        {det(0, 0.9, gt[0][0]), det(0, 0.8, gt[0][1])}};
    const EvalReport r = evaluate(dets, gt, 1);
    CHECK(r.ap_s == doctest::Approx(1.0));
    CHECK(r.ap_l == doctest::Approx(1.0));
    CHECK(r.ap_m == 0.0);  // no medium truth: undefined, reported as zero
    CHECK(r.ap == doctest::Approx(1.0));
}
