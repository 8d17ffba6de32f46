#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "mrlft/discretization.hpp"
#include "mrlft/hybrid_sim.hpp"
#include "mrlft/satellite.hpp"

using namespace mrlft;

namespace {

// Integrator plant theta' = u + w, sampled proportional feedback.
StateSpaceModel integrator_plant() {
    Eigen::MatrixXd a(1, 1), b(1, 2), c(2, 1), d(2, 2);
    a << 0.0;
    b << 1.0, 1.0;
    c << 1.0, 1.0;
    d.setZero();
    return StateSpaceModel(a, b, c, d);
}

MultirateController proportional_loop(double gain, double period) {
    MultirateController ctrl;
    ctrl.loops.push_back({"p", StateSpaceModel::static_gain(
                                   gain * Eigen::MatrixXd::Ones(1, 1), period),
                          {0}, period});
    ctrl.l_sigma = -Eigen::MatrixXd::Ones(1, 1);
    return ctrl;
}

}  // namespace

TEST_CASE("hybrid simulation reproduces the sampled integrator recursion") {
    const double t = 0.25, gain = 0.8, horizon = 5.0;
    const StateSpaceModel plant = integrator_plant();
    const MultirateController ctrl = proportional_loop(gain, t);
    const int steps = static_cast<int>(horizon / t);
    Eigen::MatrixXd w = Eigen::MatrixXd::Ones(steps + 1, 1);
    const SimTrace trace = simulate_hybrid(plant, ctrl, w, horizon);

    // x_{k+1} = x_k + T (w - gain x_k), exact for held inputs.
    double x = 0.0;
    for (int k = 0; k <= steps; ++k) {
        CHECK(trace.signals.at("y")(k, 0) == doctest::Approx(x).epsilon(1e-12));
        x = x + t * (1.0 - gain * x);
    }
    CHECK(trace.time.front() == doctest::Approx(0.0));
    CHECK(trace.time.back() == doctest::Approx(horizon));
}

TEST_CASE("grid refinement leaves sampled values unchanged") {
    const StateSpaceModel plant = integrator_plant();
    const MultirateController ctrl = proportional_loop(0.5, 0.2);
    Eigen::MatrixXd w = Eigen::MatrixXd::Ones(26, 1);
    const SimTrace base = simulate_hybrid(plant, ctrl, w, 5.0);
    HybridSimOptions fine;
    fine.grid_refine = 4;
    const SimTrace refined = simulate_hybrid(plant, ctrl, w, 5.0, fine);
    const int stride = static_cast<int>(refined.signals.at("y").rows() - 1) / 25;
    for (int k = 0; k <= 25; ++k)
        CHECK(refined.signals.at("y")(k * stride, 0) ==
              doctest::Approx(base.signals.at("y")(k, 0)).epsilon(1e-12));
}

TEST_CASE("one-step computation delay changes the transient") {
    const StateSpaceModel plant = integrator_plant();
    const MultirateController ctrl = proportional_loop(0.5, 0.2);
    Eigen::MatrixXd w = Eigen::MatrixXd::Ones(26, 1);
    const SimTrace fresh = simulate_hybrid(plant, ctrl, w, 5.0);
    HybridSimOptions opts;
    opts.one_step_delay = true;
    const SimTrace delayed = simulate_hybrid(plant, ctrl, w, 5.0, opts);
    CHECK(std::abs(fresh.signals.at("y")(2, 0) - delayed.signals.at("y")(2, 0)) > 1e-6);
}

TEST_CASE("discrete LFT simulation iterates the instantiated model") {
    Eigen::MatrixXd a(1, 1), b(1, 1), c(1, 1), d(1, 1);
    a << 0.5;
    b << 1.0;
    c << 2.0;
    d << 0.0;
    const UncertainStateSpace sys(StateSpaceModel(a, b, c, d, 0.1), BlockStructure{},
                                  ChannelMap{1, 0, 1, 0});
    Eigen::MatrixXd w = Eigen::MatrixXd::Ones(11, 1);
    const SimTrace trace = simulate_discrete_lft(sys, {}, w, 10);
    double x = 0.0;
    for (int k = 0; k <= 10; ++k) {
        CHECK(trace.signals.at("z")(k, 0) == doctest::Approx(2.0 * x).epsilon(1e-12));
        x = 0.5 * x + 1.0;
    }
}

TEST_CASE("assembled model with the exact error factor covers the hybrid loop") {
    const UncertainStateSpace plant = build_plant();
    const MultirateController ctrl = build_controller();
    const double horizon = 40.0;
    const int steps = static_cast<int>(horizon / ctrl.slowest_period());
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(steps + 1, 1);
    for (int k = 0; k * ctrl.slowest_period() < 5.0; ++k) w(k, 0) = 1.0;

    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const auto params = plant.delta().scalar_params();
    for (int order : {1, 2}) {
        const AssemblyResult res = assemble(plant, ctrl, order, 0.1);
        for (int trial = 0; trial < 3; ++trial) {
            DeltaValues v;
            for (const auto& p : params) v.scalars[p] = u(rng);
            const Eigen::MatrixXd acl = plant.eval_at(v).A;
            DeltaValues full = v;
            full.matrices["eps"] =
                (delta_eps_exact(acl, 0.1, order) / res.error_report.bound)
                    .cast<std::complex<double>>();
            CHECK(coverage_check(res.sys, plant, ctrl, full, w, horizon) < 1e-6);
        }
    }
}

TEST_CASE("csv export is deterministic and grid-shaped") {
    Eigen::MatrixXd a(1, 1), b(1, 1), c(1, 1), d(1, 1);
    a << 0.5;
    b << 1.0;
    c << 1.0;
    d << 0.0;
    const UncertainStateSpace sys(StateSpaceModel(a, b, c, d, 0.1), BlockStructure{},
                                  ChannelMap{1, 0, 1, 0});
    const SimTrace trace = simulate_discrete_lft(sys, {}, Eigen::MatrixXd::Ones(6, 1), 5);
    const std::string p1 = "/tmp/mrlft_trace_a.csv", p2 = "/tmp/mrlft_trace_b.csv";
    export_csv(trace, p1);
    export_csv(trace, p2);
    std::ifstream f1(p1), f2(p2);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
    CHECK(s1.str().find("time") != std::string::npos);
    // Header plus one row per instant.
    CHECK(std::count(s1.str().begin(), s1.str().end(), '\n') == 7);
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}
