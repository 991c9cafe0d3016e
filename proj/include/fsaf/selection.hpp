// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <vector>

#include "fsaf/geometry.hpp"
#include "fsaf/losses.hpp"

namespace fsaf {

inline constexpr int kCanonicalLevel = 5;      ///< level an instance of canonical size maps to
inline constexpr double kCanonicalSize = 224;  ///< canonical pre-training image size

enum class SelectionMethod { kOnline, kHeuristic };

struct SelectionResult {
    int instance_id = -1;
    int level = 0;
    SelectionMethod method = SelectionMethod::kOnline;
    std::vector<double> loss_sums;  ///< per level (level_min first); empty for heuristic
    int level_min = 0;              ///< level of loss_sums[0]
};

/// Level with the minimal focal + IoU loss sum; ties go to the lowest level.
/// Throws std::invalid_argument on an empty table.
SelectionResult online_select(const LevelLossTable& table);

/// Size-based level choice: floor(l0 + log2(sqrt(w*h) / canonical)), clamped
/// into the pyramid range. Throws std::invalid_argument for non-positive
/// dimensions.
SelectionResult heuristic_select(double w, double h, int l0, const PyramidSpec& pyramid);

/// Contingency summary of online vs heuristic level choices over one
/// instance set.
struct AgreementStats {
    int total = 0;
    int disagreements = 0;
    std::map<std::pair<int, int>, int> pair_counts;  ///< (online, heuristic) -> count

    double disagreement_rate() const { return total > 0 ? double(disagreements) / total : 0.0; }
};

/// Throws std::invalid_argument if the two result lists do not describe the
/// same instances in the same order.
AgreementStats agreement_stats(const std::vector<SelectionResult>& online,
                               const std::vector<SelectionResult>& heuristic);

}  // namespace fsaf
