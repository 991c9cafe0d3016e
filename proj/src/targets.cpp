// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsaf/targets.hpp"

#include <algorithm>

#include "fsaf/losses.hpp"

namespace fsaf {

int ClassTargetMap::count(CellState s) const {
    return static_cast<int>(std::count(cells.begin(), cells.end(), s));
}

namespace {

/// True if `a` takes priority over `b` on contested cells.
bool higher_priority(const Box& a, int ida, const Box& b, int idb) {
    if (a.area() != b.area()) return a.area() < b.area();
    return ida < idb;
}

}  // namespace

std::vector<int> effective_owner_map(const std::vector<Box>& instances,
                                     const Assignment& assignment, const PyramidSpec& pyramid,
                                     int level, double eps_effective) {
    const int h = pyramid.map_h(level);
    const int w = pyramid.map_w(level);
    std::vector<int> owner(static_cast<std::size_t>(h) * w, -1);
    for (std::size_t idx = 0; idx < instances.size(); ++idx) {
        if (assignment[idx] != level) continue;
        const ProjectedBox pb = project_box(instances[idx], level, pyramid);
        const PixelRect eff = rasterize_effective(scaled_region(pb, eps_effective), h, w);
        for (int i = eff.i0; i <= eff.i1; ++i) {
            for (int j = eff.j0; j <= eff.j1; ++j) {
                int& cell = owner[i * w + j];
                if (cell < 0 || higher_priority(instances[idx], static_cast<int>(idx),
                                                instances[cell], cell)) {
                    cell = static_cast<int>(idx);
                }
            }
        }
    }
    return owner;
}

std::vector<ClassTargetMap> generate_class_targets(const std::vector<Box>& instances,
                                                   const Assignment& assignment,
                                                   const PyramidSpec& pyramid, int num_classes,
                                                   double eps_effective, double eps_ignoring) {
    std::vector<ClassTargetMap> maps;
    maps.reserve(pyramid.num_levels());
    for (int level = pyramid.level_min; level <= pyramid.level_max; ++level) {
        const int h = pyramid.map_h(level);
        const int w = pyramid.map_w(level);
        ClassTargetMap map{level, num_classes, h, w,
                           std::vector<CellState>(static_cast<std::size_t>(num_classes) * h * w,
                                                  CellState::kNegative)};

        // Ignore regions first: same-level rings and adjacent-level ignoring
        // boxes, each confined to the instance's own class channel.
        for (std::size_t idx = 0; idx < instances.size(); ++idx) {
            const int assigned = assignment[idx];
            const int k = instances[idx].class_id;
            if (assigned == level) {
                const ProjectedBox pb = project_box(instances[idx], level, pyramid);
                const PixelRect eff = rasterize_effective(scaled_region(pb, eps_effective), h, w);
                const PixelRect ign = rasterize(scaled_region(pb, eps_ignoring), h, w);
                for (int i = ign.i0; i <= ign.i1; ++i) {
                    for (int j = ign.j0; j <= ign.j1; ++j) {
                        if (!eff.contains(i, j)) map.at(k, i, j) = CellState::kIgnore;
                    }
                }
            } else if (assigned == level - 1 || assigned == level + 1) {
                const ProjectedBox pb = project_box(instances[idx], level, pyramid);
                const PixelRect ign = rasterize(scaled_region(pb, eps_ignoring), h, w);
                for (int i = ign.i0; i <= ign.i1; ++i) {
                    for (int j = ign.j0; j <= ign.j1; ++j) {
                        map.at(k, i, j) = CellState::kIgnore;
                    }
                }
            }
        }

        // Positives last so they win over any ignore.
        const std::vector<int> owner =
            effective_owner_map(instances, assignment, pyramid, level, eps_effective);
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                const int own = owner[i * w + j];
                if (own >= 0) map.at(instances[own].class_id, i, j) = CellState::kPositive;
            }
        }
        maps.push_back(std::move(map));
    }
    return maps;
}

std::vector<RegressionTargetMap> generate_regression_targets(const std::vector<Box>& instances,
                                                             const Assignment& assignment,
                                                             const PyramidSpec& pyramid,
                                                             double normalizer,
                                                             double eps_effective) {
    std::vector<RegressionTargetMap> maps;
    maps.reserve(pyramid.num_levels());
    for (int level = pyramid.level_min; level <= pyramid.level_max; ++level) {
        const int h = pyramid.map_h(level);
        const int w = pyramid.map_w(level);
        RegressionTargetMap map{level, h, w,
                                std::vector<double>(static_cast<std::size_t>(4) * h * w, 0.0),
                                std::vector<std::uint8_t>(static_cast<std::size_t>(h) * w, 0)};
        const std::vector<int> owner =
            effective_owner_map(instances, assignment, pyramid, level, eps_effective);
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                const int own = owner[i * w + j];
                if (own < 0) continue;
                const ProjectedBox pb = project_box(instances[own], level, pyramid);
                const OffsetVector d = target_offsets_at(pb, i, j, normalizer);
                for (int c = 0; c < 4; ++c) map.offsets[(c * h + i) * w + j] = d[c];
                map.mask[i * w + j] = 1;
            }
        }
        maps.push_back(std::move(map));
    }
    return maps;
}

}  // namespace fsaf
