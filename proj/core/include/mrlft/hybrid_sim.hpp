#pragma once

#include <map>
#include <string>
#include <vector>

#include "mrlft/multirate.hpp"
#include "mrlft/uncertain_ss.hpp"

namespace mrlft {

// Sampled signals on a uniform grid. Every matrix has one row per instant.
struct SimTrace {
    std::vector<double> time;
    std::map<std::string, Eigen::MatrixXd> signals;
    double dt = 0.0;
    std::string note;
};

struct HybridSimOptions {
    bool one_step_delay = false;  // hold last instant's command instead of the fresh one
    int grid_refine = 1;          // internal sub-steps per fastest period (results invariant)
};

// Exact simulation of the continuous plant in feedback with the multi-rate
// digital controller. All plant inputs are piecewise constant (held commands
// and slow-grid exogenous inputs), so the plant advances by exact ZOH steps
// at the fastest period; no integration error. Instant ordering: sample ->
// controller update -> hold update -> plant advance. `w_profile` holds one
// row per slowest period. Plant I/O: inputs [w | u], outputs [z | y] with
// the y rows = the measurements the loops sample.
SimTrace simulate_hybrid(const StateSpaceModel& plant, const MultirateController& ctrl,
                         const Eigen::MatrixXd& w_profile, double horizon,
                         const HybridSimOptions& opts = {});

// Iterates the instantiated discrete LFT model; one input row per step.
SimTrace simulate_discrete_lft(const UncertainStateSpace& sys, const DeltaValues& values,
                               const Eigen::MatrixXd& w_seq, int steps);

// One row per instant, named columns, deterministic formatting.
void export_csv(const SimTrace& trace, const std::string& path);

}  // namespace mrlft
