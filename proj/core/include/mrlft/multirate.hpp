#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mrlft/discretization.hpp"
#include "mrlft/uncertain_ss.hpp"

namespace mrlft {

// One digital loop: sampler on a subset of plant measurements, a discrete
// controller at its own period, and a zero-order hold on the command.
struct LoopSpec {
    std::string name;
    StateSpaceModel controller;   // discrete, period = `period`
    std::vector<int> y_indices;   // measurement partition (indices into plant y)
    double period = 0.0;          // seconds

    int command_width() const { return controller.outputs(); }
};

// Ordered fastest-to-slowest set of loops plus the routing gain combining
// held commands into the plant input: u = L_sigma * [v_1; ...; v_r].
struct MultirateController {
    std::vector<LoopSpec> loops;
    Eigen::MatrixXd l_sigma;

    int rate_count() const { return static_cast<int>(loops.size()); }
    int total_command_width() const;
    double fastest_period() const;
    double slowest_period() const;

    // Integer rate ratio q_i = T_{i+1} / T_i.
    std::vector<int> rate_ratios() const;

    // Throws ModelError on invalid periods/partitions/routing dims; warns on
    // L_sigma entries outside {-1, 0, +1}.
    void validate(int plant_outputs, int plant_inputs) const;
};

struct AssemblyStep {
    std::string action;
    int states = 0;
    double period = 0.0;
    std::string delta;   // structure description after the step
};

struct AssemblyLog {
    std::vector<AssemblyStep> steps;
    std::string describe() const;
};

struct AssemblyResult {
    UncertainStateSpace sys;       // discrete at the slowest period
    AssemblyLog log;
    ErrorBoundReport error_report; // from the rational discretization; empty otherwise
};

// LFT-preserving down-sampling by integer factor q: the returned system's
// one-step map equals the q-step transition of the input at every admissible
// Delta value, with the uncertainty structure replicated q times (one copy
// per sub-step). Requires the sampled outputs not to read the uncertainty
// channels directly (constant C and D assumption).
UncertainStateSpace downsample(const UncertainStateSpace& sys, int q);

// Full single-rate assembly: discretize the plant at the fastest period,
// close loop 1, then alternately down-sample to the next period and close
// the next loop. The result is a single-rate discrete model at the slowest
// period whose uncertainty holds prod(q_i) copies of the per-step structure.
AssemblyResult assemble(const UncertainStateSpace& plant, const MultirateController& ctrl,
                        int disc_order, double t1,
                        DiscretizationMethod method = DiscretizationMethod::RationalApprox,
                        const PadeOptions& pade_opts = {});

// Max absolute deviation between the assembled single-rate model and the
// exact hybrid simulation of the same closed loop, over the slow-rate grid.
// `input_profile` holds one exogenous input row per slow period.
double coverage_check(const UncertainStateSpace& sys_lft, const UncertainStateSpace& plant,
                      const MultirateController& ctrl, const DeltaValues& delta_sample,
                      const Eigen::MatrixXd& input_profile, double horizon);

}  // namespace mrlft
