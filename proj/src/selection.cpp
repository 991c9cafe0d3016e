// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "fsaf/selection.hpp"

#include <cmath>
#include <stdexcept>

namespace fsaf {

SelectionResult online_select(const LevelLossTable& table) {
    if (table.entries.empty()) {
        throw std::invalid_argument("online_select: empty loss table");
    }
    SelectionResult result;
    result.method = SelectionMethod::kOnline;
    result.level_min = table.level_min;
    result.loss_sums.reserve(table.entries.size());
    int best = 0;
    for (int li = 0; li < table.num_levels(); ++li) {
        const double s = table.entries[li].sum();
        result.loss_sums.push_back(s);
        if (s < result.loss_sums[best]) best = li;
    }
    result.level = table.level_min + best;
    return result;
}

SelectionResult heuristic_select(double w, double h, int l0, const PyramidSpec& pyramid) {
    if (!(w > 0.0) || !(h > 0.0)) {
        throw std::invalid_argument("heuristic_select: box dimensions must be positive");
    }
    const int raw = static_cast<int>(std::floor(l0 + std::log2(std::sqrt(w * h) / kCanonicalSize)));
    SelectionResult result;
    result.method = SelectionMethod::kHeuristic;
    result.level = pyramid.clamp_level(raw);
    result.level_min = pyramid.level_min;
    return result;
}

AgreementStats agreement_stats(const std::vector<SelectionResult>& online,
                               const std::vector<SelectionResult>& heuristic) {
    if (online.size() != heuristic.size()) {
        throw std::invalid_argument("agreement_stats: result lists differ in size");
    }
    AgreementStats stats;
    for (std::size_t i = 0; i < online.size(); ++i) {
        if (online[i].instance_id != heuristic[i].instance_id) {
            throw std::invalid_argument("agreement_stats: instance sets do not match");
        }
        ++stats.total;
        stats.disagreements += online[i].level != heuristic[i].level;
        ++stats.pair_counts[{online[i].level, heuristic[i].level}];
    }
    return stats;
}

}  // namespace fsaf
