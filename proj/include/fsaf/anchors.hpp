// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "fsaf/geometry.hpp"
#include "fsaf/losses.hpp"

namespace fsaf {

/// Anchor layout per pyramid level: base size base_scale * 2^l, three octave
/// scales, three aspect ratios (h/w), nine anchors per location.
struct AnchorSpec {
    double base_scale = 4.0;
    std::vector<double> scales = {1.0, 1.2599210498948732, 1.5874010519681994};
    std::vector<double> ratios = {0.5, 1.0, 2.0};

    int per_location() const { return static_cast<int>(scales.size() * ratios.size()); }
};

struct LevelAnchors {
    int level = 0;
    int h = 0;
    int w = 0;
    int per_location = 0;
    std::vector<CornerBox> boxes;  ///< size h*w*per_location, image plane

    int index(int i, int j, int a) const { return (i * w + j) * per_location + a; }
};

/// Anchors centered at (i * 2^l, j * 2^l) for every map location of every
/// pyramid level. Scale varies area, ratio varies shape at fixed area.
std::vector<LevelAnchors> generate_anchors(const PyramidSpec& pyramid, const AnchorSpec& spec);

/// Per-anchor matching state: instance index if positive, else negative or
/// ignore.
struct AnchorAssignment {
    static constexpr int kNegative = -1;
    static constexpr int kIgnore = -2;

    std::vector<std::vector<int>> match;  ///< per level, per anchor

    int num_positive() const;
};

/// IoU matching: an anchor is positive to its argmax-IoU instance when that
/// IoU >= fg_thresh, negative when < bg_thresh, ignored in between. Each
/// instance additionally claims its single highest-IoU anchor; when claims
/// collide the higher IoU (then lower instance id) wins.
AnchorAssignment match_anchors(const std::vector<LevelAnchors>& anchors,
                               const std::vector<Box>& instances, double fg_thresh = 0.5,
                               double bg_thresh = 0.4);

/// Box-to-anchor offsets: (dx/wa, dy/ha, ln(w/wa), ln(h/ha)).
std::array<double, 4> encode_anchor_delta(const CornerBox& anchor, const Box& box);
CornerBox decode_anchor_delta(const CornerBox& anchor, const std::array<double, 4>& delta);

/// Huber loss at unit transition point, with derivative.
ScalarLoss smooth_l1(double residual);

/// Anchor-branch training loss: focal classification over all non-ignored
/// anchors normalized by the positive count, plus mean smooth-L1 over the
/// positive anchors' four delta components.
///
/// cls_probs[li] holds (A*K)*h*w probabilities with channel a*K + k;
/// reg_deltas[li] holds (A*4)*h*w deltas with channel a*4 + c. Gradients
/// mirror those layouts; classification gradients are w.r.t. logits.
struct AnchorBranchLoss {
    double value = 0.0;
    std::vector<std::vector<double>> cls_grad;
    std::vector<std::vector<double>> reg_grad;
};

AnchorBranchLoss anchor_branch_loss(const std::vector<LevelAnchors>& anchors,
                                    const AnchorAssignment& assignment,
                                    const std::vector<Box>& instances,
                                    const std::vector<std::vector<double>>& cls_probs,
                                    const std::vector<std::vector<double>>& reg_deltas,
                                    int num_classes, double alpha = kFocalAlpha,
                                    double gamma = kFocalGamma);

}  // namespace fsaf
