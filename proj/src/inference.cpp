// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsaf/inference.hpp"

#include <algorithm>

namespace fsaf {

bool detection_order(const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.level != b.level) return a.level < b.level;
    if (a.row != b.row) return a.row < b.row;
    if (a.col != b.col) return a.col < b.col;
    if (a.class_id != b.class_id) return a.class_id < b.class_id;
    return a.anchor < b.anchor;
}

namespace {

void keep_top_k(std::vector<Detection>& dets, int top_k) {
    std::sort(dets.begin(), dets.end(), detection_order);
    if (static_cast<int>(dets.size()) > top_k) dets.resize(top_k);
}

}  // namespace

std::vector<Detection> decode_level(const std::vector<double>& cls_probs,
                                    const std::vector<double>& offsets, int num_classes, int h,
                                    int w, int level, double normalizer, double score_thresh,
                                    int top_k) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::vector<Detection> candidates;
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            const std::size_t base = static_cast<std::size_t>(i) * w + j;
            int best_class = 0;
            double best = cls_probs[base];
            for (int k = 1; k < num_classes; ++k) {
                const double p = cls_probs[k * plane + base];
                if (p > best) {
                    best = p;
                    best_class = k;
                }
            }
            if (best <= score_thresh) continue;
            Detection d;
            d.class_id = best_class;
            d.score = best;
            d.level = level;
            d.row = i;
            d.col = j;
            candidates.push_back(d);
        }
    }
    keep_top_k(candidates, top_k);

    std::vector<Detection> out;
    out.reserve(candidates.size());
    for (Detection& d : candidates) {
        const std::size_t base = static_cast<std::size_t>(d.row) * w + d.col;
        const OffsetVector o{offsets[base], offsets[plane + base], offsets[2 * plane + base],
                             offsets[3 * plane + base]};
        const DecodedBox decoded = decode_box(d.row, d.col, o, normalizer, level);
        if (!decoded.valid) continue;
        d.box = decoded.box;
        out.push_back(d);
    }
    return out;
}

std::vector<Detection> decode_anchor_level(const LevelAnchors& anchors,
                                           const std::vector<double>& cls_probs,
                                           const std::vector<double>& deltas, int num_classes,
                                           double score_thresh, int top_k) {
    const std::size_t plane = static_cast<std::size_t>(anchors.h) * anchors.w;
    std::vector<Detection> candidates;
    for (int i = 0; i < anchors.h; ++i) {
        for (int j = 0; j < anchors.w; ++j) {
            const std::size_t base = static_cast<std::size_t>(i) * anchors.w + j;
            for (int a = 0; a < anchors.per_location; ++a) {
                int best_class = 0;
                double best = cls_probs[(a * num_classes) * plane + base];
                for (int k = 1; k < num_classes; ++k) {
                    const double p = cls_probs[(a * num_classes + k) * plane + base];
                    if (p > best) {
                        best = p;
                        best_class = k;
                    }
                }
                if (best <= score_thresh) continue;
                Detection d;
                d.class_id = best_class;
                d.score = best;
                d.level = anchors.level;
                d.row = i;
                d.col = j;
                d.anchor = a;
                candidates.push_back(d);
            }
        }
    }
    keep_top_k(candidates, top_k);

    std::vector<Detection> out;
    out.reserve(candidates.size());
    for (Detection& d : candidates) {
        const std::size_t base = static_cast<std::size_t>(d.row) * anchors.w + d.col;
        const std::array<double, 4> delta = {
            deltas[(d.anchor * 4 + 0) * plane + base], deltas[(d.anchor * 4 + 1) * plane + base],
            deltas[(d.anchor * 4 + 2) * plane + base], deltas[(d.anchor * 4 + 3) * plane + base]};
        d.box = decode_anchor_delta(anchors.boxes[anchors.index(d.row, d.col, d.anchor)], delta);
        if (!d.box.valid()) continue;
        out.push_back(d);
    }
    return out;
}

std::vector<Detection> nms(std::vector<Detection> detections, double iou_thresh) {
    std::sort(detections.begin(), detections.end(), detection_order);
    std::vector<Detection> kept;
    for (const Detection& d : detections) {
        bool suppressed = false;
        for (const Detection& k : kept) {
            if (k.class_id == d.class_id && iou(k.box, d.box) >= iou_thresh) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

std::vector<Detection> detect(const Model& model, const Tensor& image,
                              const DetectOptions& options) {
    if (image.n() != 1) throw std::invalid_argument("detect: expected a single image");
    ForwardPass fp = forward(model, image);
    const ModelConfig& cfg = model.config;

    std::vector<Detection> merged;
    for (int li = 0; li < fp.pyramid.num_levels(); ++li) {
        const int level = cfg.level_min + li;
        const int h = fp.pyramid.map_h(level);
        const int w = fp.pyramid.map_w(level);
        if (options.anchor_free) {
            auto dets = decode_level(fp.extract(fp.af_cls_prob[li], 0), fp.extract(fp.af_reg[li], 0),
                                     cfg.num_classes, h, w, level, cfg.offset_normalizer,
                                     options.score_thresh, options.top_k);
            merged.insert(merged.end(), dets.begin(), dets.end());
        }
    }
    if (options.anchor_based && cfg.anchor_branch) {
        const auto anchors = generate_anchors(fp.pyramid, cfg.anchors);
        for (int li = 0; li < fp.pyramid.num_levels(); ++li) {
            auto dets = decode_anchor_level(anchors[li], fp.extract(fp.ab_cls_prob[li], 0),
                                            fp.extract(fp.ab_reg[li], 0), cfg.num_classes,
                                            options.score_thresh, options.top_k);
            merged.insert(merged.end(), dets.begin(), dets.end());
        }
    }
    if (options.clip_to_image) {
        for (Detection& d : merged) {
            d.box.top = std::clamp(d.box.top, 0.0, double(image.h()));
            d.box.bottom = std::clamp(d.box.bottom, 0.0, double(image.h()));
            d.box.left = std::clamp(d.box.left, 0.0, double(image.w()));
            d.box.right = std::clamp(d.box.right, 0.0, double(image.w()));
        }
        std::erase_if(merged, [](const Detection& d) { return !d.box.valid(); });
    }
    return nms(std::move(merged), options.nms_thresh);
}

}  // namespace fsaf
