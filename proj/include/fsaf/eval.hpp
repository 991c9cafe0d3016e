// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "fsaf/geometry.hpp"
#include "fsaf/inference.hpp"

namespace fsaf {

/// Average-precision summary over IoU thresholds 0.50:0.05:0.95, with the
/// usual small/medium/large area partitions (32^2 and 96^2 pixel breaks).
struct EvalReport {
    double ap = 0.0;
    double ap50 = 0.0;
    double ap75 = 0.0;
    double ap_s = 0.0;
    double ap_m = 0.0;
    double ap_l = 0.0;
    std::vector<double> per_class;  ///< threshold-averaged AP; -1 for classes without truth
};

/// Greedy score-ordered matching per image and class, precision-recall
/// integration on the 101-point recall grid, averaged over classes that have
/// ground truth. `detections[i]` and `ground_truth[i]` describe image i.
EvalReport evaluate(const std::vector<std::vector<Detection>>& detections,
                    const std::vector<std::vector<Box>>& ground_truth, int num_classes);

}  // namespace fsaf
