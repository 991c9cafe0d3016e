// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsaf/losses.hpp"

#include <cmath>

namespace fsaf {

ScalarLoss focal_loss(double p, bool positive, double alpha, double gamma) {
    p = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    if (positive) {
        const double q = 1.0 - p;
        const double value = -alpha * std::pow(q, gamma) * std::log(p);
        const double grad = alpha * std::pow(q, gamma) * (gamma * p * std::log(p) - q);
        return {value, grad};
    }
    const double value = -(1.0 - alpha) * std::pow(p, gamma) * std::log(1.0 - p);
    const double grad =
        (1.0 - alpha) * std::pow(p, gamma) * (p - gamma * (1.0 - p) * std::log(1.0 - p));
    return {value, grad};
}

IouLoss iou_loss(const OffsetVector& pred, const OffsetVector& target) {
    const double ih = std::min(pred.top, target.top) + std::min(pred.bottom, target.bottom);
    const double iw = std::min(pred.left, target.left) + std::min(pred.right, target.right);
    const double inter = ih * iw;
    const double area_p = (pred.top + pred.bottom) * (pred.left + pred.right);
    const double area_t = (target.top + target.bottom) * (target.left + target.right);
    const double uni = area_p + area_t - inter;

    IouLoss out;
    if (uni <= 0.0) {
        // Both boxes degenerate; flag via the epsilon-capped loss, no gradient.
        out.value = -std::log(kIouEpsilon);
        return out;
    }
    const double overlap = inter / uni;
    out.value = std::max(0.0, -std::log(overlap + kIouEpsilon));

    // d inter / d pred: active only where the predicted distance is the min.
    const std::array<double, 4> d_inter = {
        pred.top < target.top ? iw : 0.0,
        pred.left < target.left ? ih : 0.0,
        pred.bottom < target.bottom ? iw : 0.0,
        pred.right < target.right ? ih : 0.0,
    };
    const double extent_w = pred.left + pred.right;
    const double extent_h = pred.top + pred.bottom;
    const std::array<double, 4> d_area = {extent_w, extent_h, extent_w, extent_h};

    const double scale = -1.0 / (overlap + kIouEpsilon);
    for (int c = 0; c < 4; ++c) {
        const double d_uni = d_area[c] - d_inter[c];
        const double d_overlap = (d_inter[c] * uni - inter * d_uni) / (uni * uni);
        out.grad[c] = scale * d_overlap;
    }
    return out;
}

MapLoss total_classification_loss(const std::vector<ClassTargetMap>& targets,
                                  const std::vector<std::vector<double>>& probs, double alpha,
                                  double gamma) {
    MapLoss out;
    out.grad.resize(targets.size());

    long positives = 0;
    for (const auto& map : targets) positives += map.count(CellState::kPositive);

    double sum = 0.0;
    for (std::size_t li = 0; li < targets.size(); ++li) {
        const auto& map = targets[li];
        const auto& p = probs[li];
        out.grad[li].assign(p.size(), 0.0);
        if (positives == 0) continue;
        for (std::size_t c = 0; c < p.size(); ++c) {
            const CellState state = map.cells[c];
            if (state == CellState::kIgnore) continue;
            const ScalarLoss fl = focal_loss(p[c], state == CellState::kPositive, alpha, gamma);
            sum += fl.value;
            out.grad[li][c] = fl.grad / positives;
        }
    }
    out.value = positives > 0 ? sum / positives : 0.0;
    return out;
}

MapLoss total_regression_loss(const std::vector<RegressionTargetMap>& targets,
                              const std::vector<std::vector<double>>& preds) {
    MapLoss out;
    out.grad.resize(targets.size());

    long valid = 0;
    for (const auto& map : targets) {
        for (const auto m : map.mask) valid += m != 0;
    }

    double sum = 0.0;
    for (std::size_t li = 0; li < targets.size(); ++li) {
        const auto& map = targets[li];
        const auto& p = preds[li];
        out.grad[li].assign(p.size(), 0.0);
        if (valid == 0) continue;
        const int h = map.h;
        const int w = map.w;
        for (int i = 0; i < h; ++i) {
            for (int j = 0; j < w; ++j) {
                if (!map.valid(i, j)) continue;
                const std::size_t base = static_cast<std::size_t>(i) * w + j;
                const std::size_t plane = static_cast<std::size_t>(h) * w;
                const OffsetVector pred{p[base], p[plane + base], p[2 * plane + base],
                                        p[3 * plane + base]};
                const IouLoss cell = iou_loss(pred, map.vector_at(i, j));
                sum += cell.value;
                for (int c = 0; c < 4; ++c) out.grad[li][c * plane + base] = cell.grad[c] / valid;
            }
        }
    }
    out.value = valid > 0 ? sum / valid : 0.0;
    return out;
}

LevelLossTable instance_level_losses(const Box& instance, const PerLevelMaps& maps,
                                     const PyramidSpec& pyramid, double normalizer,
                                     double eps_effective) {
    LevelLossTable table;
    table.level_min = pyramid.level_min;
    table.entries.reserve(pyramid.num_levels());
    for (int level = pyramid.level_min; level <= pyramid.level_max; ++level) {
        const int li = level - pyramid.level_min;
        const int h = pyramid.map_h(level);
        const int w = pyramid.map_w(level);
        const std::size_t plane = static_cast<std::size_t>(h) * w;
        const ProjectedBox pb = project_box(instance, level, pyramid);
        const PixelRect eff = rasterize_effective(scaled_region(pb, eps_effective), h, w);

        double focal_sum = 0.0;
        double iou_sum = 0.0;
        for (int i = eff.i0; i <= eff.i1; ++i) {
            for (int j = eff.j0; j <= eff.j1; ++j) {
                const std::size_t base = static_cast<std::size_t>(i) * w + j;
                const double p = maps.cls[li][instance.class_id * plane + base];
                focal_sum += focal_loss(p, /*positive=*/true).value;
                const OffsetVector pred{maps.reg[li][base], maps.reg[li][plane + base],
                                        maps.reg[li][2 * plane + base],
                                        maps.reg[li][3 * plane + base]};
                iou_sum += iou_loss(pred, target_offsets_at(pb, i, j, normalizer)).value;
            }
        }
        const double n = eff.count();
        table.entries.push_back({focal_sum / n, iou_sum / n});
    }
    return table;
}

double combined_loss(double l_ab, double l_cls_af, double l_reg_af, double lambda) {
    return l_ab + lambda * (l_cls_af + l_reg_af);
}

OffsetVector target_offsets_at(const ProjectedBox& pb, int i, int j, double normalizer) {
    OffsetVector d = encode_offsets(pb, i, j, normalizer);
    for (int c = 0; c < 4; ++c) d[c] = std::max(0.0, d[c]);
    return d;
}

}  // namespace fsaf
