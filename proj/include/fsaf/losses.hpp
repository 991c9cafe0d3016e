// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "fsaf/geometry.hpp"
#include "fsaf/targets.hpp"

namespace fsaf {

inline constexpr double kFocalAlpha = 0.25;
inline constexpr double kFocalGamma = 2.0;
inline constexpr double kProbClamp = 1e-7;
inline constexpr double kIouEpsilon = 1e-9;

/// Scalar loss with derivative with respect to the pre-sigmoid logit.
struct ScalarLoss {
    double value = 0.0;
    double grad = 0.0;
};

/// Focal loss of one cell. `p` is the predicted probability (clamped
/// internally to [1e-7, 1 - 1e-7]); the gradient is d/d-logit.
ScalarLoss focal_loss(double p, bool positive, double alpha = kFocalAlpha,
                      double gamma = kFocalGamma);

/// -ln(IoU) between the boxes implied by predicted and target boundary
/// distances at a shared pixel, with gradient per predicted component.
struct IouLoss {
    double value = 0.0;
    std::array<double, 4> grad{};  ///< d/d-pred, order top/left/bottom/right
};

IouLoss iou_loss(const OffsetVector& pred, const OffsetVector& target);

/// Loss over a set of per-level maps, with gradients laid out like the
/// predictions that produced it.
struct MapLoss {
    double value = 0.0;
    std::vector<std::vector<double>> grad;  ///< per level, pred layout
};

/// Sum of focal losses over all non-ignored cells of all levels, divided by
/// the total positive-cell count. `probs[li]` holds K*H*W probabilities in
/// channel-major order for targets[li]. Gradients are w.r.t. logits.
/// A scene without positives yields value 0 and zero gradient.
MapLoss total_classification_loss(const std::vector<ClassTargetMap>& targets,
                                  const std::vector<std::vector<double>>& probs,
                                  double alpha = kFocalAlpha, double gamma = kFocalGamma);

/// Mean IoU loss over all mask-true cells of all levels. `preds[li]` holds
/// 4*H*W predicted offsets (same layout as the target maps).
MapLoss total_regression_loss(const std::vector<RegressionTargetMap>& targets,
                              const std::vector<std::vector<double>>& preds);

/// Per-level (focal, IoU) loss pair of one instance, averaged over its
/// effective region at every level.
struct LevelLossEntry {
    double focal = 0.0;
    double iou = 0.0;
    double sum() const { return focal + iou; }
};

struct LevelLossTable {
    int level_min = 0;
    std::vector<LevelLossEntry> entries;  ///< index 0 == level_min

    int num_levels() const { return static_cast<int>(entries.size()); }
    const LevelLossEntry& at_level(int level) const { return entries[level - level_min]; }
};

/// Predicted maps of one image, indexed by level - level_min. cls[li] is
/// K*H*W probabilities, reg[li] is 4*H*W offsets (post-activation).
struct PerLevelMaps {
    std::vector<std::vector<double>> cls;
    std::vector<std::vector<double>> reg;
};

/// Evaluates the candidate assignment cost of `instance` at every pyramid
/// level: focal loss over the effective-region cells of its class channel
/// (treated as positives) and IoU loss over the same cells, each averaged
/// over the region pixel count.
LevelLossTable instance_level_losses(const Box& instance, const PerLevelMaps& maps,
                                     const PyramidSpec& pyramid, double normalizer,
                                     double eps_effective = 0.2);

/// Joint objective: anchor-based total plus lambda-weighted anchor-free
/// classification and regression totals.
double combined_loss(double l_ab, double l_cls_af, double l_reg_af, double lambda);

/// Ground-truth offset vector stored in regression maps: boundary distances
/// clamped at zero, so cells slightly outside a sub-pixel box stay valid.
OffsetVector target_offsets_at(const ProjectedBox& pb, int i, int j, double normalizer);

}  // namespace fsaf
