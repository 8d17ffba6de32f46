#pragma once

#include <functional>

#include "mrlft/block_structure.hpp"
#include "mrlft/parameter_box.hpp"

namespace mrlft {

struct BnbOptions {
    double threshold = 0.05;    // stop when (upper - lower)/upper <= threshold
    int max_boxes = 2000;       // total box evaluations
    double max_seconds = 120.0; // wall-clock budget
    int jobs = 0;               // 0 = MRLFT_JOBS or hardware default
};

// Bounds for the objective restricted to one box. `witness` realizes `lower`
// somewhere in the box; `split_dim_hint` < 0 defers to the widest dimension.
struct BoxEvaluation {
    double lower = 0.0;
    double upper = 0.0;
    DeltaValues witness;
    int split_dim_hint = -1;
};

using BoxEvaluator = std::function<BoxEvaluation(const ParameterBox&)>;

struct BnbStats {
    int boxes = 0;
    int max_depth = 0;
    double wall_seconds = 0.0;
    bool budget_exhausted = false;
};

struct BnbResult {
    double lower = 0.0;
    double upper = 0.0;
    ParameterBox best_box;
    DeltaValues witness;
    BnbStats stats;
};

// Maximizes a box-bounded objective by deterministic best-first refinement:
// each round pops the frontier box with the largest upper bound (creation
// order breaks ties) and evaluates its two children, possibly in parallel.
// Results are independent of the worker count. A degenerate root (no
// parameters) is evaluated once and returned.
BnbResult branch_and_bound(const ParameterBox& root, const BoxEvaluator& evaluate,
                           const BnbOptions& opts = {});

}  // namespace mrlft
