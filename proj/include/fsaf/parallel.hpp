// Copyright 2026 The fsafdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

namespace fsaf {

/// Worker cap from the FSAF_THREADS environment variable (0 or unset = all
/// hardware threads).
int worker_count();

/// Runs fn(i) for i in [0, n) across workers. Iterations must be independent;
/// callers keep determinism by indexing results with i.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace fsaf
