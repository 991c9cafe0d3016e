// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "fsaf/geometry.hpp"

namespace fsaf {

inline constexpr double kEffectiveScale = 0.2;
inline constexpr double kIgnoringScale = 0.5;
inline constexpr double kOffsetNormalizer = 4.0;

enum class CellState : std::uint8_t {
    kNegative = 0,
    kIgnore = 1,
    kPositive = 2,
};

/// Per-level classification supervision: K channels of cell states.
struct ClassTargetMap {
    int level = 0;
    int num_classes = 0;
    int h = 0;
    int w = 0;
    std::vector<CellState> cells;  ///< size K*h*w, channel-major

    CellState at(int k, int i, int j) const { return cells[(k * h + i) * w + j]; }
    CellState& at(int k, int i, int j) { return cells[(k * h + i) * w + j]; }
    int count(CellState s) const;
};

/// Per-level regression supervision: 4 offset channels plus validity mask.
struct RegressionTargetMap {
    int level = 0;
    int h = 0;
    int w = 0;
    std::vector<double> offsets;     ///< size 4*h*w, channel-major (t, l, b, r)
    std::vector<std::uint8_t> mask;  ///< size h*w, 1 inside effective regions

    double offset(int c, int i, int j) const { return offsets[(c * h + i) * w + j]; }
    bool valid(int i, int j) const { return mask[i * w + j] != 0; }
    OffsetVector vector_at(int i, int j) const {
        return {offset(0, i, j), offset(1, i, j), offset(2, i, j), offset(3, i, j)};
    }
};

/// Level chosen for each instance; index parallel to the instance list.
using Assignment = std::vector<int>;

/// Builds the per-level classification maps for a scene.
///
/// Per instance assigned to level l: its effective region turns POSITIVE in
/// its class channel, the ignoring region minus the effective region turns
/// IGNORE at l, and the full ignoring region turns IGNORE at levels l-1 and
/// l+1 where those exist. Where effective regions of two instances overlap,
/// the cell belongs to the instance with smaller image-space area (ties to
/// the lower id). IGNORE never overwrites POSITIVE.
std::vector<ClassTargetMap> generate_class_targets(const std::vector<Box>& instances,
                                                   const Assignment& assignment,
                                                   const PyramidSpec& pyramid, int num_classes,
                                                   double eps_effective = kEffectiveScale,
                                                   double eps_ignoring = kIgnoringScale);

/// Builds the per-level regression maps: each cell inside an effective region
/// carries the owning instance's boundary distances divided by `normalizer`,
/// with the same overlap priority as the classification maps.
std::vector<RegressionTargetMap> generate_regression_targets(
    const std::vector<Box>& instances, const Assignment& assignment, const PyramidSpec& pyramid,
    double normalizer = kOffsetNormalizer, double eps_effective = kEffectiveScale);

/// Index of the instance owning each cell of one level, or -1. Cells are
/// owned by the smallest covering instance (area, then id). Exposed so the
/// classification and regression generators resolve overlaps identically.
std::vector<int> effective_owner_map(const std::vector<Box>& instances,
                                     const Assignment& assignment, const PyramidSpec& pyramid,
                                     int level, double eps_effective = kEffectiveScale);

/// Writes per level and class a P5 image targets_l<l>_c<k>.pgm with
/// NEGATIVE=0, IGNORE=128, POSITIVE=255, and per level a flat little-endian
/// float32 file offsets_l<l>.bin with a JSON sidecar {level, shape, S}.
void dump_targets(const std::string& dir, const std::vector<ClassTargetMap>& cls_targets,
                  const std::vector<RegressionTargetMap>& reg_targets, double normalizer);

}  // namespace fsaf
