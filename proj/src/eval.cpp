// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsaf/eval.hpp"

#include <algorithm>
#include <cmath>

namespace fsaf {

namespace {

constexpr double kAreaSmall = 32.0 * 32.0;
constexpr double kAreaMedium = 96.0 * 96.0;

struct AreaRange {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();

    bool contains(double area) const { return area >= lo && area < hi; }
};

struct DetRef {
    int image = 0;
    int index = 0;  ///< into detections[image]
    double score = 0.0;
};

CornerBox corner_of(const Box& b) { return {b.top(), b.left(), b.bottom(), b.right()}; }

/// Match flags of one class at one threshold/range: +1 true positive,
/// 0 false positive, -1 ignored (matched out-of-range truth, or unmatched
/// with out-of-range own area).
struct MatchOutcome {
    std::vector<int> flags;  ///< parallel to the score-ordered det list
    int num_truth = 0;       ///< in-range ground truth count
};

MatchOutcome match_class(const std::vector<std::vector<Detection>>& detections,
                         const std::vector<std::vector<Box>>& ground_truth,
                         const std::vector<DetRef>& order, int class_id, double thresh,
                         const AreaRange& range) {
    MatchOutcome out;
    out.flags.assign(order.size(), 0);

    std::vector<std::vector<bool>> taken(ground_truth.size());
    for (std::size_t im = 0; im < ground_truth.size(); ++im) {
        for (const Box& g : ground_truth[im]) {
            if (g.class_id == class_id) {
                taken[im].push_back(false);
                out.num_truth += range.contains(g.area());
            }
        }
    }

    for (std::size_t d = 0; d < order.size(); ++d) {
        const DetRef& ref = order[d];
        const Detection& det = detections[ref.image][ref.index];

        int best = -1;
        double best_iou = -1.0;
        int best_ignored = -1;
        double best_ignored_iou = -1.0;
        int gi = 0;
        for (const Box& g : ground_truth[ref.image]) {
            if (g.class_id != class_id) continue;
            const int slot = gi++;
            if (taken[ref.image][slot]) continue;
            const double o = iou(det.box, corner_of(g));
            if (o < thresh) continue;
            if (range.contains(g.area())) {
                if (o > best_iou) {
                    best_iou = o;
                    best = slot;
                }
            } else if (o > best_ignored_iou) {
                best_ignored_iou = o;
                best_ignored = slot;
            }
        }

        if (best >= 0) {
            taken[ref.image][best] = true;
            out.flags[d] = 1;
        } else if (best_ignored >= 0) {
            taken[ref.image][best_ignored] = true;
            out.flags[d] = -1;
        } else if (!range.contains(det.box.area())) {
            out.flags[d] = -1;
        }
    }
    return out;
}

/// 101-point interpolated average precision from score-ordered match flags.
double average_precision(const MatchOutcome& matched) {
    if (matched.num_truth == 0) return -1.0;

    std::vector<double> precision;
    std::vector<double> recall;
    int tp = 0;
    int fp = 0;
    for (const int f : matched.flags) {
        if (f < 0) continue;
        f > 0 ? ++tp : ++fp;
        precision.push_back(double(tp) / (tp + fp));
        recall.push_back(double(tp) / matched.num_truth);
    }

    double ap = 0.0;
    for (int r = 0; r <= 100; ++r) {
        const double grid = r / 100.0;
        double best = 0.0;
        for (std::size_t i = 0; i < recall.size(); ++i) {
            if (recall[i] >= grid) best = std::max(best, precision[i]);
        }
        ap += best / 101.0;
    }
    return ap;
}

/// Mean over defined (>= 0) entries; 0 when nothing is defined.
double mean_defined(const std::vector<double>& values) {
    double sum = 0.0;
    int n = 0;
    for (const double v : values) {
        if (v >= 0.0) {
            sum += v;
            ++n;
        }
    }
    return n > 0 ? sum / n : 0.0;
}

/// Mean over defined entries; -1 (undefined) when nothing is defined.
double mean_or_undefined(const std::vector<double>& values) {
    double sum = 0.0;
    int n = 0;
    for (const double v : values) {
        if (v >= 0.0) {
            sum += v;
            ++n;
        }
    }
    return n > 0 ? sum / n : -1.0;
}

}  // namespace

EvalReport evaluate(const std::vector<std::vector<Detection>>& detections,
                    const std::vector<std::vector<Box>>& ground_truth, int num_classes) {
    if (detections.size() != ground_truth.size()) {
        throw std::invalid_argument("evaluate: detection and truth lists differ in length");
    }
    const AreaRange all{};
    const AreaRange small{0.0, kAreaSmall};
    const AreaRange medium{kAreaSmall, kAreaMedium};
    const AreaRange large{kAreaMedium, std::numeric_limits<double>::infinity()};

    EvalReport report;
    report.per_class.assign(num_classes, -1.0);
    std::vector<double> ap50(num_classes, -1.0), ap75(num_classes, -1.0);
    std::vector<double> ap_s(num_classes, -1.0), ap_m(num_classes, -1.0),
        ap_l(num_classes, -1.0);

    for (int k = 0; k < num_classes; ++k) {
        std::vector<DetRef> order;
        for (std::size_t im = 0; im < detections.size(); ++im) {
            for (std::size_t d = 0; d < detections[im].size(); ++d) {
                if (detections[im][d].class_id == k) {
                    order.push_back({static_cast<int>(im), static_cast<int>(d),
                                     detections[im][d].score});
                }
            }
        }
        std::sort(order.begin(), order.end(), [&](const DetRef& a, const DetRef& b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.image != b.image) return a.image < b.image;
            return detection_order(detections[a.image][a.index], detections[b.image][b.index]);
        });

        auto ap_at = [&](double thresh, const AreaRange& range) {
            return average_precision(match_class(detections, ground_truth, order, k, thresh, range));
        };
        std::vector<double> full_t, small_t, medium_t, large_t;
        for (int t = 0; t < 10; ++t) {
            const double thresh = 0.5 + 0.05 * t;
            full_t.push_back(ap_at(thresh, all));
            small_t.push_back(ap_at(thresh, small));
            medium_t.push_back(ap_at(thresh, medium));
            large_t.push_back(ap_at(thresh, large));
        }
        report.per_class[k] = mean_or_undefined(full_t);
        ap50[k] = full_t[0];
        ap75[k] = full_t[5];
        ap_s[k] = mean_or_undefined(small_t);
        ap_m[k] = mean_or_undefined(medium_t);
        ap_l[k] = mean_or_undefined(large_t);
    }

    report.ap = mean_defined(report.per_class);
    report.ap50 = mean_defined(ap50);
    report.ap75 = mean_defined(ap75);
    report.ap_s = mean_defined(ap_s);
    report.ap_m = mean_defined(ap_m);
    report.ap_l = mean_defined(ap_l);
    return report;
}

}  // namespace fsaf
