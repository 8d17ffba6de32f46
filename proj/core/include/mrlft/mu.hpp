#pragma once

#include <vector>

#include "mrlft/block_structure.hpp"

namespace mrlft {

struct MuOptions {
    int max_iterations = 50;   // scaling-descent cap per bisection step
    int bisection_steps = 24;  // upper-bound beta search depth
    int restarts = 6;          // lower-bound search restarts
    int ascent_sweeps = 12;    // coordinate-ascent sweeps per restart
    unsigned seed = 1u;
    bool use_g_scaling = true; // real-block phase scalings in the upper bound
    double early_exit_at = 0.0;  // stop refining once the bound clears this level (0 = off)
};

// Channel groups after coalescing blocks that share a param: the scaling and
// the uncertainty value are tied across all segments of a group.
struct MuGroup {
    std::string param;
    BlockKind kind = BlockKind::RealRepeatedScalar;
    std::vector<int> row_segments;  // offsets into w (Delta rows = M cols)
    std::vector<int> col_segments;  // offsets into z (Delta cols = M rows)
    int rows = 0;                   // per-segment block rows
    int cols = 0;                   // per-segment block cols
};

std::vector<MuGroup> coalesce_groups(const BlockStructure& structure);

struct MuScalings {
    Eigen::VectorXd log_d;  // one per group, applied as exp(log_d) * I on its channels
    Eigen::VectorXd g;      // one per real scalar group, 0 elsewhere
};

struct MuUpperResult {
    double value = 0.0;
    MuScalings scalings;
    int iterations = 0;
    bool converged = true;
};

struct MuLowerResult {
    double value = 0.0;
    DeltaValues delta;        // scaled uncertainty achieving the bound
    double residual = 1.0;    // relative sigma_min(I - M Delta / value)
};

// Guaranteed upper bound on the structured singular value of M w.r.t. the
// block structure (M maps w -> z, Delta closes z -> w). Balanced diagonal
// scalings plus real-block phase scalings, beta-bisection; any accepted beta
// is verified by direct evaluation of the scaled norm condition. A single
// complex full block reduces to the largest singular value.
MuUpperResult mu_upper_bound(const Eigen::MatrixXcd& m, const BlockStructure& structure,
                             const MuOptions& opts = {});

// Constructive lower bound: vertex enumeration (small real structures),
// random restarts and coordinate ascent on the real parameters; complex full
// blocks are aligned by the dominant singular pair. The returned Delta makes
// I - M Delta / value singular to the reported residual.
MuLowerResult mu_lower_bound(const Eigen::MatrixXcd& m, const BlockStructure& structure,
                             const MuOptions& opts = {});

// Finite-difference sensitivity of the scaled norm to shrinking each group's
// radius; used to pick branching directions (heuristic only).
std::vector<double> mu_sensitivities(const Eigen::MatrixXcd& m, const BlockStructure& structure,
                                     const MuScalings& scalings);

}  // namespace mrlft
