// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

// Brute-force reference implementations used only by tests. Each one
// re-derives its result by direct per-element rule application, independent
// of the library code paths it cross-checks.

#pragma once

#include <vector>

#include "fsaf/anchors.hpp"
#include "fsaf/eval.hpp"
#include "fsaf/inference.hpp"
#include "fsaf/targets.hpp"

namespace fsaf::testing {

std::vector<ClassTargetMap> oracle_class_targets(const std::vector<Box>& instances,
                                                 const Assignment& assignment,
                                                 const PyramidSpec& pyramid, int num_classes);

std::vector<RegressionTargetMap> oracle_regression_targets(const std::vector<Box>& instances,
                                                           const Assignment& assignment,
                                                           const PyramidSpec& pyramid,
                                                           double normalizer);

std::vector<Detection> oracle_nms(const std::vector<Detection>& detections, double iou_thresh);

struct OracleAp {
    double ap = 0.0;
    double ap50 = 0.0;
};

/// All-area AP for small scenes, recomputed with exhaustive candidate
/// scans and a naive 101-point integration.
OracleAp oracle_ap(const std::vector<std::vector<Detection>>& detections,
                   const std::vector<std::vector<Box>>& ground_truth, int num_classes);

AnchorAssignment oracle_match_anchors(const std::vector<LevelAnchors>& anchors,
                                      const std::vector<Box>& instances, double fg_thresh,
                                      double bg_thresh);

}  // namespace fsaf::testing
