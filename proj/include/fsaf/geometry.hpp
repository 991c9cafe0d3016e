// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace fsaf {

/// Ground-truth instance box in image pixels, center format.
struct Box {
    int class_id = 0;
    double x = 0.0;  ///< center x
    double y = 0.0;  ///< center y
    double w = 0.0;
    double h = 0.0;

    double area() const { return w * h; }
    double top() const { return y - h / 2.0; }
    double left() const { return x - w / 2.0; }
    double bottom() const { return y + h / 2.0; }
    double right() const { return x + w / 2.0; }
};

/// Axis-aligned box as (top, left, bottom, right) corners.
struct CornerBox {
    double top = 0.0;
    double left = 0.0;
    double bottom = 0.0;
    double right = 0.0;

    double height() const { return bottom - top; }
    double width() const { return right - left; }
    double area() const { return height() * width(); }
    bool valid() const { return bottom > top && right > left; }
};

double iou(const CornerBox& a, const CornerBox& b);

/// Feature pyramid layout: level l has stride 2^l and map dims ceil(img / 2^l).
struct PyramidSpec {
    int level_min = 3;
    int level_max = 7;
    int image_h = 0;
    int image_w = 0;

    int num_levels() const { return level_max - level_min + 1; }
    bool contains(int level) const { return level >= level_min && level <= level_max; }
    int clamp_level(int level) const { return std::clamp(level, level_min, level_max); }
    static double stride(int level) { return std::ldexp(1.0, level); }
    int map_h(int level) const { return dim_at(image_h, level); }
    int map_w(int level) const { return dim_at(image_w, level); }

private:
    static int dim_at(int image_dim, int level) {
        const std::int64_t s = std::int64_t{1} << level;
        return static_cast<int>((image_dim + s - 1) / s);
    }
};

/// Instance box in feature-map units of one pyramid level.
struct ProjectedBox {
    int level = 0;
    int class_id = 0;
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    CornerBox corners() const { return {y - h / 2.0, x - w / 2.0, y + h / 2.0, x + w / 2.0}; }
};

/// Concentric sub-region of a projected box (same center, scaled extent).
struct RegionBox {
    int level = 0;
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
    double scale = 1.0;  ///< factor applied to the projected box extent
};

/// Per-pixel distances to the four projected-box boundaries, divided by the
/// normalizer S. Order: top, left, bottom, right.
struct OffsetVector {
    double top = 0.0;
    double left = 0.0;
    double bottom = 0.0;
    double right = 0.0;

    double operator[](int i) const { return (&top)[i]; }
    double& operator[](int i) { return (&top)[i]; }
};

/// Inclusive integer pixel range of a region on a feature map. Possibly empty.
struct PixelRect {
    int i0 = 0, i1 = -1;  ///< rows, inclusive
    int j0 = 0, j1 = -1;  ///< cols, inclusive

    bool empty() const { return i1 < i0 || j1 < j0; }
    int count() const { return empty() ? 0 : (i1 - i0 + 1) * (j1 - j0 + 1); }
    bool contains(int i, int j) const { return i >= i0 && i <= i1 && j >= j0 && j <= j1; }
};

/// Divides every coordinate of `box` by 2^level. Throws std::out_of_range if
/// `level` lies outside the pyramid.
ProjectedBox project_box(const Box& box, int level, const PyramidSpec& pyramid);

/// Same center, extent multiplied by `epsilon`. Throws std::invalid_argument
/// for epsilon <= 0.
RegionBox scaled_region(const ProjectedBox& pb, double epsilon);

/// Distances from pixel (i, j) to the projected-box boundaries, divided by
/// `normalizer`. Row index i runs along y, column index j along x.
OffsetVector encode_offsets(const ProjectedBox& pb, int i, int j, double normalizer);

struct DecodedBox {
    CornerBox box;  ///< image-plane corners
    bool valid = false;
};

/// Inverse of encode_offsets: corners (i - S*o_t, j - S*o_l), (i + S*o_b,
/// j + S*o_r) in feature units, scaled up by 2^level to the image plane.
/// A zero-extent result is flagged invalid.
DecodedBox decode_box(int i, int j, const OffsetVector& offsets, double normalizer, int level);

/// Integer pixels (i, j) with |i - y| <= h/2 and |j - x| <= w/2 (closed
/// intervals), clipped to the map. May be empty.
PixelRect rasterize(const RegionBox& region, int map_h, int map_w);

/// Rasterization for effective regions: an empty raster degenerates to the
/// single in-bounds pixel nearest the region center, so the region always
/// holds at least one pixel.
PixelRect rasterize_effective(const RegionBox& region, int map_h, int map_w);

}  // namespace fsaf
