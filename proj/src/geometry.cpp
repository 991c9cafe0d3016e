// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsaf/geometry.hpp"

#include <stdexcept>
#include <string>

namespace fsaf {

double iou(const CornerBox& a, const CornerBox& b) {
    const double it = std::max(a.top, b.top);
    const double il = std::max(a.left, b.left);
    const double ib = std::min(a.bottom, b.bottom);
    const double ir = std::min(a.right, b.right);
    const double inter = std::max(0.0, ib - it) * std::max(0.0, ir - il);
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

ProjectedBox project_box(const Box& box, int level, const PyramidSpec& pyramid) {
    if (!pyramid.contains(level)) {
        throw std::out_of_range("project_box: level " + std::to_string(level) +
                                " outside pyramid [" + std::to_string(pyramid.level_min) + ", " +
                                std::to_string(pyramid.level_max) + "]");
    }
    const double s = PyramidSpec::stride(level);
    return {level, box.class_id, box.x / s, box.y / s, box.w / s, box.h / s};
}

RegionBox scaled_region(const ProjectedBox& pb, double epsilon) {
    if (!(epsilon > 0.0)) {
        throw std::invalid_argument("scaled_region: scale factor must be positive");
    }
    return {pb.level, pb.x, pb.y, epsilon * pb.w, epsilon * pb.h, epsilon};
}

OffsetVector encode_offsets(const ProjectedBox& pb, int i, int j, double normalizer) {
    const CornerBox c = pb.corners();
    return {(i - c.top) / normalizer, (j - c.left) / normalizer, (c.bottom - i) / normalizer,
            (c.right - j) / normalizer};
}

DecodedBox decode_box(int i, int j, const OffsetVector& offsets, double normalizer, int level) {
    const double s = PyramidSpec::stride(level);
    CornerBox box{(i - normalizer * offsets.top) * s, (j - normalizer * offsets.left) * s,
                  (i + normalizer * offsets.bottom) * s, (j + normalizer * offsets.right) * s};
    return {box, box.valid()};
}

PixelRect rasterize(const RegionBox& region, int map_h, int map_w) {
    PixelRect r;
    r.i0 = std::max(0, static_cast<int>(std::ceil(region.y - region.h / 2.0)));
    r.i1 = std::min(map_h - 1, static_cast<int>(std::floor(region.y + region.h / 2.0)));
    r.j0 = std::max(0, static_cast<int>(std::ceil(region.x - region.w / 2.0)));
    r.j1 = std::min(map_w - 1, static_cast<int>(std::floor(region.x + region.w / 2.0)));
    return r;
}

PixelRect rasterize_effective(const RegionBox& region, int map_h, int map_w) {
    PixelRect r = rasterize(region, map_h, map_w);
    if (!r.empty()) return r;
    const int ic = std::clamp(static_cast<int>(std::lround(region.y)), 0, map_h - 1);
    const int jc = std::clamp(static_cast<int>(std::lround(region.x)), 0, map_w - 1);
    return {ic, ic, jc, jc};
}

}  // namespace fsaf
