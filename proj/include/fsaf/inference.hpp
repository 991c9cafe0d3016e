// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "fsaf/anchors.hpp"
#include "fsaf/geometry.hpp"
#include "fsaf/model.hpp"

namespace fsaf {

struct Detection {
    int class_id = 0;
    double score = 0.0;
    CornerBox box;  ///< image-plane corners

    // Provenance, used only for deterministic ordering of score ties.
    int level = 0;
    int row = 0;
    int col = 0;
    int anchor = -1;  ///< -1 for anchor-free detections
};

struct DetectOptions {
    double score_thresh = 0.05;
    int top_k = 1000;  ///< per pyramid level, before merging
    double nms_thresh = 0.5;
    bool anchor_free = true;
    bool anchor_based = true;  ///< ignored when the model has no anchor branch
    bool clip_to_image = false;
};

/// Decodes anchor-free maps of one level: per location the maximum class
/// score and its class, thresholded, top-k by score, then boundary-distance
/// decoding. Degenerate boxes are dropped.
std::vector<Detection> decode_level(const std::vector<double>& cls_probs,
                                    const std::vector<double>& offsets, int num_classes, int h,
                                    int w, int level, double normalizer,
                                    double score_thresh = 0.05, int top_k = 1000);

/// Same contract for the anchor-based head of one level.
std::vector<Detection> decode_anchor_level(const LevelAnchors& anchors,
                                           const std::vector<double>& cls_probs,
                                           const std::vector<double>& deltas, int num_classes,
                                           double score_thresh = 0.05, int top_k = 1000);

/// Score-descending order with a provenance tie-break, used for top-k
/// selection, NMS, and evaluation so results never depend on sort internals.
bool detection_order(const Detection& a, const Detection& b);

/// Greedy per-class suppression: sorted by score (ties by provenance), a
/// detection survives iff its IoU with every kept same-class detection is
/// below the threshold.
std::vector<Detection> nms(std::vector<Detection> detections, double iou_thresh = 0.5);

/// Full pipeline on one image (1, 3, H, W): forward, per-level decoding of
/// the enabled branches, merge, NMS.
std::vector<Detection> detect(const Model& model, const Tensor& image,
                              const DetectOptions& options = {});

}  // namespace fsaf
