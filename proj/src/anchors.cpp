// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsaf/anchors.hpp"

#include <cmath>

namespace fsaf {

std::vector<LevelAnchors> generate_anchors(const PyramidSpec& pyramid, const AnchorSpec& spec) {
    std::vector<LevelAnchors> out;
    out.reserve(pyramid.num_levels());
    for (int level = pyramid.level_min; level <= pyramid.level_max; ++level) {
        LevelAnchors la;
        la.level = level;
        la.h = pyramid.map_h(level);
        la.w = pyramid.map_w(level);
        la.per_location = spec.per_location();
        la.boxes.reserve(static_cast<std::size_t>(la.h) * la.w * la.per_location);

        const double stride = PyramidSpec::stride(level);
        const double base = spec.base_scale * stride;
        std::vector<std::pair<double, double>> shapes;  // (w, h) per anchor slot
        for (const double s : spec.scales) {
            for (const double r : spec.ratios) {
                const double side = base * s;
                shapes.emplace_back(side / std::sqrt(r), side * std::sqrt(r));
            }
        }
        for (int i = 0; i < la.h; ++i) {
            for (int j = 0; j < la.w; ++j) {
                const double cy = i * stride;
                const double cx = j * stride;
                for (const auto& [w, h] : shapes) {
                    la.boxes.push_back({cy - h / 2.0, cx - w / 2.0, cy + h / 2.0, cx + w / 2.0});
                }
            }
        }
        out.push_back(std::move(la));
    }
    return out;
}

int AnchorAssignment::num_positive() const {
    int n = 0;
    for (const auto& level : match) {
        for (const int m : level) n += m >= 0;
    }
    return n;
}

AnchorAssignment match_anchors(const std::vector<LevelAnchors>& anchors,
                               const std::vector<Box>& instances, double fg_thresh,
                               double bg_thresh) {
    AnchorAssignment out;
    out.match.resize(anchors.size());

    struct Claim {
        int level = -1;
        int index = -1;
        double overlap = -1.0;
    };
    std::vector<Claim> claims(instances.size());
    std::vector<CornerBox> boxes;
    boxes.reserve(instances.size());
    for (const auto& inst : instances) {
        boxes.push_back({inst.top(), inst.left(), inst.bottom(), inst.right()});
    }

    for (std::size_t li = 0; li < anchors.size(); ++li) {
        const auto& level = anchors[li];
        auto& match = out.match[li];
        match.assign(level.boxes.size(), AnchorAssignment::kNegative);
        for (std::size_t a = 0; a < level.boxes.size(); ++a) {
            double best = 0.0;
            int best_inst = -1;
            for (std::size_t g = 0; g < instances.size(); ++g) {
                const double o = iou(level.boxes[a], boxes[g]);
                if (o > best) {
                    best = o;
                    best_inst = static_cast<int>(g);
                }
                if (o > claims[g].overlap) {
                    claims[g] = {static_cast<int>(li), static_cast<int>(a), o};
                }
            }
            if (best >= fg_thresh) {
                match[a] = best_inst;
            } else if (best >= bg_thresh) {
                match[a] = AnchorAssignment::kIgnore;
            }
        }
    }

    // Guarantee every instance at least one anchor; colliding claims go to
    // the higher IoU, then the lower instance id.
    for (std::size_t g = 0; g < instances.size(); ++g) {
        const Claim& c = claims[g];
        if (c.level < 0) continue;
        int& slot = out.match[c.level][c.index];
        if (slot >= 0) {
            const double other = iou(anchors[c.level].boxes[c.index], boxes[slot]);
            const bool ours_wins =
                c.overlap > other || (c.overlap == other && static_cast<int>(g) < slot);
            if (!ours_wins) continue;
        }
        slot = static_cast<int>(g);
    }
    return out;
}

std::array<double, 4> encode_anchor_delta(const CornerBox& anchor, const Box& box) {
    const double wa = anchor.width();
    const double ha = anchor.height();
    const double cxa = (anchor.left + anchor.right) / 2.0;
    const double cya = (anchor.top + anchor.bottom) / 2.0;
    return {(box.x - cxa) / wa, (box.y - cya) / ha, std::log(box.w / wa), std::log(box.h / ha)};
}

CornerBox decode_anchor_delta(const CornerBox& anchor, const std::array<double, 4>& delta) {
    const double wa = anchor.width();
    const double ha = anchor.height();
    const double cx = (anchor.left + anchor.right) / 2.0 + delta[0] * wa;
    const double cy = (anchor.top + anchor.bottom) / 2.0 + delta[1] * ha;
    const double w = std::exp(delta[2]) * wa;
    const double h = std::exp(delta[3]) * ha;
    return {cy - h / 2.0, cx - w / 2.0, cy + h / 2.0, cx + w / 2.0};
}

ScalarLoss smooth_l1(double residual) {
    const double a = std::abs(residual);
    if (a < 1.0) return {0.5 * residual * residual, residual};
    return {a - 0.5, residual > 0.0 ? 1.0 : -1.0};
}

AnchorBranchLoss anchor_branch_loss(const std::vector<LevelAnchors>& anchors,
                                    const AnchorAssignment& assignment,
                                    const std::vector<Box>& instances,
                                    const std::vector<std::vector<double>>& cls_probs,
                                    const std::vector<std::vector<double>>& reg_deltas,
                                    int num_classes, double alpha, double gamma) {
    AnchorBranchLoss out;
    out.cls_grad.resize(anchors.size());
    out.reg_grad.resize(anchors.size());

    const int n_pos = assignment.num_positive();
    const double cls_norm = std::max(1, n_pos);

    double cls_sum = 0.0;
    double reg_sum = 0.0;
    for (std::size_t li = 0; li < anchors.size(); ++li) {
        const auto& level = anchors[li];
        const std::size_t plane = static_cast<std::size_t>(level.h) * level.w;
        out.cls_grad[li].assign(cls_probs[li].size(), 0.0);
        out.reg_grad[li].assign(reg_deltas[li].size(), 0.0);

        for (int i = 0; i < level.h; ++i) {
            for (int j = 0; j < level.w; ++j) {
                const std::size_t base = static_cast<std::size_t>(i) * level.w + j;
                for (int a = 0; a < level.per_location; ++a) {
                    const int m = assignment.match[li][level.index(i, j, a)];
                    if (m == AnchorAssignment::kIgnore) continue;
                    for (int k = 0; k < num_classes; ++k) {
                        const std::size_t off = (a * num_classes + k) * plane + base;
                        const bool positive = m >= 0 && instances[m].class_id == k;
                        const ScalarLoss fl = focal_loss(cls_probs[li][off], positive, alpha, gamma);
                        cls_sum += fl.value;
                        out.cls_grad[li][off] = fl.grad / cls_norm;
                    }
                    if (m >= 0) {
                        const auto target =
                            encode_anchor_delta(level.boxes[level.index(i, j, a)], instances[m]);
                        for (int c = 0; c < 4; ++c) {
                            const std::size_t off = (a * 4 + c) * plane + base;
                            const ScalarLoss sl = smooth_l1(reg_deltas[li][off] - target[c]);
                            reg_sum += sl.value;
                            out.reg_grad[li][off] = sl.grad / n_pos;
                        }
                    }
                }
            }
        }
    }
    out.value = cls_sum / cls_norm + (n_pos > 0 ? reg_sum / n_pos : 0.0);
    return out;
}

}  // namespace fsaf
