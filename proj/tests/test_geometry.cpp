// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "fsaf/geometry.hpp"
#include "fsaf/rng.hpp"

using namespace fsaf;

namespace {
const PyramidSpec kPyramid{0, 7, 1024, 1024};  // wide range for pure box algebra
}

TEST_CASE("project_box divides all coordinates by the level stride") {
    const ProjectedBox pb = project_box({1, 128, 64, 48, 32}, 4, kPyramid);
    CHECK(pb.x == doctest::Approx(8.0));
    CHECK(pb.y == doctest::Approx(4.0));
    CHECK(pb.w == doctest::Approx(3.0));
    CHECK(pb.h == doctest::Approx(2.0));
    CHECK(pb.class_id == 1);
    CHECK(pb.level == 4);

    const ProjectedBox identity = project_box({0, 0, 0, 16, 16}, 0, kPyramid);
    CHECK(identity.x == 0.0);
    CHECK(identity.w == 16.0);

    const ProjectedBox p5 = project_box({0, 100, 100, 224, 224}, 5, kPyramid);
    CHECK(p5.x == doctest::Approx(3.125));
    CHECK(p5.y == doctest::Approx(3.125));
    CHECK(p5.w == doctest::Approx(7.0));
    CHECK(p5.h == doctest::Approx(7.0));
}

TEST_CASE("project_box rejects out-of-range levels") {
    const PyramidSpec pyramid{3, 7, 512, 512};
    CHECK_THROWS_AS(project_box({0, 10, 10, 4, 4}, 2, pyramid), std::out_of_range);
    CHECK_THROWS_AS(project_box({0, 10, 10, 4, 4}, 8, pyramid), std::out_of_range);
}

TEST_CASE("scaled_region keeps the center and scales the extent") {
    const ProjectedBox pb{4, 0, 8, 4, 3, 2};
    const RegionBox eff = scaled_region(pb, 0.2);
    CHECK(eff.x == doctest::Approx(8.0));
    CHECK(eff.y == doctest::Approx(4.0));
    CHECK(eff.w == doctest::Approx(0.6));
    CHECK(eff.h == doctest::Approx(0.4));

    const RegionBox same = scaled_region(pb, 1.0);
    CHECK(same.w == doctest::Approx(3.0));
    CHECK(same.h == doctest::Approx(2.0));

    const RegionBox half = scaled_region({3, 0, 10, 10, 8, 6}, 0.5);
    CHECK(half.w == doctest::Approx(4.0));
    CHECK(half.h == doctest::Approx(3.0));

    CHECK_THROWS_AS(scaled_region(pb, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(scaled_region(pb, -0.2), std::invalid_argument);
}

TEST_CASE("scaled_region scales area by epsilon squared") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const ProjectedBox pb{3, 0, rng.uniform(0, 40), rng.uniform(0, 40), rng.uniform(0.1, 30),
                              rng.uniform(0.1, 30)};
        const double eps = rng.uniform(0.05, 1.5);
        const RegionBox r = scaled_region(pb, eps);
        CHECK(r.x == pb.x);
        CHECK(r.y == pb.y);
        CHECK(r.w * r.h == doctest::Approx(eps * eps * pb.w * pb.h).epsilon(1e-12));
    }
}

TEST_CASE("encode_offsets measures distances to the projected boundaries") {
    const ProjectedBox pb{3, 0, 10, 10, 8, 6};
    const OffsetVector d = encode_offsets(pb, 10, 10, 4.0);
    CHECK(d.top == doctest::Approx(0.75));
    CHECK(d.left == doctest::Approx(1.0));
    CHECK(d.bottom == doctest::Approx(0.75));
    CHECK(d.right == doctest::Approx(1.0));

    const OffsetVector d2 = encode_offsets(pb, 9, 12, 4.0);
    CHECK(d2.top == doctest::Approx(0.5));
    CHECK(d2.left == doctest::Approx(1.5));
    CHECK(d2.bottom == doctest::Approx(1.0));
    CHECK(d2.right == doctest::Approx(0.5));
}

TEST_CASE("encode_offsets is symmetric at the box center") {
    const double s = 4.0;
    const ProjectedBox pb{3, 0, 12, 9, 2 * s, 2 * s};  // centered exactly on (9, 12)
    const OffsetVector d = encode_offsets(pb, 9, 12, s);
    CHECK(d.top == doctest::Approx(1.0));
    CHECK(d.left == doctest::Approx(1.0));
    CHECK(d.bottom == doctest::Approx(1.0));
    CHECK(d.right == doctest::Approx(1.0));
}

TEST_CASE("decode_box produces image-plane corners") {
    const DecodedBox d = decode_box(10, 10, {0.75, 1.0, 0.75, 1.0}, 4.0, 3);
    CHECK(d.valid);
    CHECK(d.box.top == doctest::Approx(56.0));
    CHECK(d.box.left == doctest::Approx(48.0));
    CHECK(d.box.bottom == doctest::Approx(104.0));
    CHECK(d.box.right == doctest::Approx(112.0));
}

TEST_CASE("decode_box flags zero-extent boxes invalid") {
    const DecodedBox d = decode_box(5, 7, {0, 0, 0, 0}, 4.0, 3);
    CHECK_FALSE(d.valid);
    CHECK(d.box.top == doctest::Approx(40.0));
    CHECK(d.box.left == doctest::Approx(56.0));
}

TEST_CASE("encode/decode round trip recovers the projected corners") {
    Rng rng(21);
    const PyramidSpec pyramid{3, 7, 1024, 1024};
    int tested = 0;
    while (tested < 1000) {
        Box box{0, rng.uniform(20, 1000), rng.uniform(20, 1000), rng.uniform(8, 500),
                rng.uniform(8, 500)};
        const int level = (int)rng.uniform_int(pyramid.level_min, pyramid.level_max);
        const ProjectedBox pb = project_box(box, level, pyramid);
        const PixelRect eff = rasterize_effective(scaled_region(pb, 0.2), pyramid.map_h(level),
                                                  pyramid.map_w(level));
        const int i = (int)rng.uniform_int(eff.i0, eff.i1);
        const int j = (int)rng.uniform_int(eff.j0, eff.j1);
        const OffsetVector d = encode_offsets(pb, i, j, 4.0);
        const DecodedBox decoded = decode_box(i, j, d, 4.0, level);

        const CornerBox truth = pb.corners();
        const double stride = PyramidSpec::stride(level);
        CHECK(decoded.box.top / stride == doctest::Approx(truth.top).epsilon(1e-9));
        CHECK(decoded.box.left / stride == doctest::Approx(truth.left).epsilon(1e-9));
        CHECK(decoded.box.bottom / stride == doctest::Approx(truth.bottom).epsilon(1e-9));
        CHECK(decoded.box.right / stride == doctest::Approx(truth.right).epsilon(1e-9));

        CHECK(decoded.box.top == doctest::Approx(box.y - box.h / 2).epsilon(1e-6));
        CHECK(decoded.box.left == doctest::Approx(box.x - box.w / 2).epsilon(1e-6));
        CHECK(decoded.box.bottom == doctest::Approx(box.y + box.h / 2).epsilon(1e-6));
        CHECK(decoded.box.right == doctest::Approx(box.x + box.w / 2).epsilon(1e-6));
        ++tested;
    }
}

TEST_CASE("offsets are non-negative inside the effective region") {
    Rng rng(5);
    for (int trial = 0; trial < 500; ++trial) {
        const ProjectedBox pb{3, 0, rng.uniform(2, 60), rng.uniform(2, 60), rng.uniform(0.5, 40),
                              rng.uniform(0.5, 40)};
        const PixelRect eff = rasterize(scaled_region(pb, 0.2), 64, 64);
        if (eff.empty()) continue;
        const int i = (int)rng.uniform_int(eff.i0, eff.i1);
        const int j = (int)rng.uniform_int(eff.j0, eff.j1);
        const OffsetVector d = encode_offsets(pb, i, j, 4.0);
        CHECK(d.top >= 0.0);
        CHECK(d.left >= 0.0);
        CHECK(d.bottom >= 0.0);
        CHECK(d.right >= 0.0);
    }
}

TEST_CASE("region containment follows the scale factors") {
    Rng rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const ProjectedBox pb{4, 0, rng.uniform(0, 32), rng.uniform(0, 32), rng.uniform(0.2, 20),
                              rng.uniform(0.2, 20)};
        const PixelRect eff = rasterize(scaled_region(pb, 0.2), 64, 64);
        const PixelRect ign = rasterize(scaled_region(pb, 0.5), 64, 64);
        const PixelRect full = rasterize(scaled_region(pb, 1.0), 64, 64);
        if (!eff.empty()) {
            CHECK(ign.contains(eff.i0, eff.j0));
            CHECK(ign.contains(eff.i1, eff.j1));
        }
        if (!ign.empty()) {
            CHECK(full.contains(ign.i0, ign.j0));
            CHECK(full.contains(ign.i1, ign.j1));
        }
    }
}

TEST_CASE("rasterize_effective falls back to the pixel nearest the center") {
    const RegionBox tiny{5, 10.3, 7.8, 0.2, 0.1, 0.2};
    const PixelRect r = rasterize_effective(tiny, 16, 16);
    CHECK(r.count() == 1);
    CHECK(r.i0 == 8);
    CHECK(r.j0 == 10);

    // Off-map center clamps into the map.
    const PixelRect edge = rasterize_effective({5, 15.8, -0.4, 0.1, 0.1, 0.2}, 16, 16);
    CHECK(edge.count() == 1);
    CHECK(edge.i0 == 0);
    CHECK(edge.j0 == 15);
}

TEST_CASE("pyramid spec derives map dimensions by ceiling division") {
    const PyramidSpec p{3, 7, 800, 1333};
    CHECK(p.map_h(3) == 100);
    CHECK(p.map_w(3) == 167);
    CHECK(p.map_h(7) == 7);
    CHECK(p.map_w(7) == 11);
    CHECK(p.clamp_level(1) == 3);
    CHECK(p.clamp_level(9) == 7);
    CHECK(PyramidSpec::stride(5) == 32.0);
}
