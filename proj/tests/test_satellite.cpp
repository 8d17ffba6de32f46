#include <random>

#include "doctest.h"
#include "mrlft/satellite.hpp"

using namespace mrlft;

namespace {

DeltaValues box_point(double dj, double da, double dw, double dx) {
    DeltaValues v;
    v.scalars["dJ"] = dj;
    v.scalars["da"] = da;
    v.scalars["dw"] = dw;
    v.scalars["dx"] = dx;
    return v;
}

// Physical parameters moved to the box point; the LFT family around the
// nominal must reproduce this plant exactly.
SatelliteParams moved_params(const SatelliteParams& p, const DeltaValues& v) {
    SatelliteParams q = p;
    q.inertia *= 1.0 + p.rel_inertia * v.scalars.at("dJ");
    q.coupling *= 1.0 + p.rel_coupling * v.scalars.at("da");
    q.mode_freq *= 1.0 + p.rel_mode_freq * v.scalars.at("dw");
    q.damping *= 1.0 + p.rel_damping * v.scalars.at("dx");
    return q;
}

}  // namespace

TEST_CASE("plant realization carries the documented structure") {
    const UncertainStateSpace plant = build_plant();
    CHECK(plant.states() == 5);
    CHECK_FALSE(plant.is_discrete());
    CHECK(plant.channels().n_w == 1);
    CHECK(plant.channels().n_u == 1);
    CHECK(plant.channels().n_z == 1);
    CHECK(plant.channels().n_y == 2);

    const auto& blocks = plant.delta().blocks();
    REQUIRE(blocks.size() == 4);
    CHECK(blocks[0].name == "dJ");
    CHECK(blocks[1].name == "da");
    CHECK(blocks[2].name == "dw");
    CHECK(blocks[2].rows == 2);  // the mode frequency enters twice
    CHECK(blocks[3].name == "dx");
    CHECK(plant.n_wd() == 5);

    CHECK_THROWS_AS(build_plant(SatelliteParams{.coupling = 0.95}), ModelError);
    CHECK_THROWS_AS(build_plant(SatelliteParams{.rel_inertia = 0.0}), ModelError);
}

TEST_CASE("LFT closure reproduces the physically rebuilt plant") {
    const SatelliteParams p;
    const UncertainStateSpace family = build_plant(p);
    std::mt19937_64 rng(81);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        const DeltaValues v = box_point(u(rng), u(rng), u(rng), u(rng));
        const StateSpaceModel closed = family.eval_at(v);
        const StateSpaceModel direct = build_plant(moved_params(p, v)).nominal();
        CHECK((closed.A - direct.A).cwiseAbs().maxCoeff() < 1e-11);
        CHECK((closed.B - direct.B).cwiseAbs().maxCoeff() < 1e-11);
        CHECK((closed.C - direct.C).cwiseAbs().maxCoeff() < 1e-11);
        CHECK((closed.D - direct.D).cwiseAbs().maxCoeff() < 1e-11);
    }
}

TEST_CASE("controller splits the PID across the two rates") {
    const PidParams c;
    const MultirateController ctrl = build_controller(c);
    REQUIRE(ctrl.loops.size() == 2);
    CHECK(ctrl.loops[0].name == "rate");
    CHECK(ctrl.loops[0].period == c.t1);
    CHECK(ctrl.loops[0].y_indices == std::vector<int>{0});
    CHECK(ctrl.loops[0].controller.states() == 0);
    CHECK(ctrl.loops[0].controller.D(0, 0) == c.kd);

    CHECK(ctrl.loops[1].name == "position");
    CHECK(ctrl.loops[1].period == c.q * c.t1);
    CHECK(ctrl.loops[1].y_indices == std::vector<int>{1});
    CHECK(ctrl.loops[1].controller.outputs() == 2);

    CHECK(ctrl.l_sigma.rows() == 1);
    CHECK(ctrl.l_sigma.cols() == 3);
    CHECK(ctrl.l_sigma.minCoeff() == -1.0);
    CHECK(ctrl.l_sigma.maxCoeff() == -1.0);
    CHECK_NOTHROW(ctrl.validate(2, 1));

    // Integral path ramps by ki * t2 per slow step on a unit input.
    const StateSpaceModel& pi = ctrl.loops[1].controller;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
    double prev = 0.0;
    for (int k = 0; k < 4; ++k) {
        const Eigen::VectorXd out = pi.C * x + pi.D * one;
        CHECK(out(0) == c.kp);
        CHECK(out(1) - prev == doctest::Approx(k == 0 ? 0.0 : c.ki * c.q * c.t1));
        prev = out(1);
        x = pi.A * x + pi.B * one;
    }

    CHECK_THROWS_AS(build_controller(PidParams{.ki = 0.0}), ModelError);
}

TEST_CASE("continuous design has the frozen closed-loop poles") {
    const PoleReport rep = closed_loop_poles(SatelliteParams{}, PidParams{});
    REQUIRE(rep.poles.size() == 6);
    // Sorted by |Im|: rigid pair, actuator pair, flex pair.
    std::vector<std::complex<double>> expect{{-0.35234, 0.346685},
                                             {-1.41855, 2.32249},
                                             {-0.737111, 6.60799}};
    for (const auto& e : expect) {
        bool found = false;
        for (const auto& s : rep.poles)
            if (std::abs(s - e) < 5e-4 || std::abs(s - std::conj(e)) < 5e-4) found = true;
        CHECK(found);
    }
    CHECK(std::abs(rep.dominant - expect[0]) < 5e-4);
    CHECK(std::abs(rep.dominant) == doctest::Approx(0.494302).epsilon(1e-4));
}

TEST_CASE("flexible pair tracks the mode-frequency parameter") {
    const double nominal = std::abs(closed_loop_poles({}, {}).dominant);
    double im_lo = 0.0, im_hi = 0.0, im_nom = 0.0;
    for (double dw : {-1.0, 0.0, 1.0}) {
        const PoleReport rep = closed_loop_poles({}, {}, box_point(0.0, 0.0, dw, 0.0));
        double peak = 0.0;
        for (const auto& s : rep.poles) peak = std::max(peak, s.imag());
        (dw < 0.0 ? im_lo : dw > 0.0 ? im_hi : im_nom) = peak;
    }
    CHECK(im_lo < im_nom);
    CHECK(im_nom < im_hi);
    CHECK(im_hi > 1.05 * nominal);  // the flex pair, not the rigid one

    // The loop gain dips at the physical mode frequency (the transfer zero).
    for (double dw : {-1.0, 1.0}) {
        const double om = 4.0 * (1.0 + 0.1 * dw);
        const DeltaValues v = box_point(0.0, 0.0, dw, 0.0);
        const double at_zero = std::abs(loop_transfer({}, {}, om, v));
        const double nearby = std::abs(loop_transfer({}, {}, om * 1.05, v));
        CHECK(at_zero < 0.05 * nearby);
    }
}

TEST_CASE("delay margin reports the frozen crossings") {
    const DelayMarginReport rep = delay_margin(SatelliteParams{}, PidParams{});
    REQUIRE(rep.crossings.size() == 3);
    CHECK(rep.crossings[0].omega == doctest::Approx(2.09625).epsilon(1e-4));
    CHECK(rep.crossings[0].margin == doctest::Approx(0.419125).epsilon(1e-3));
    CHECK(rep.crossings[1].omega == doctest::Approx(5.00814).epsilon(1e-4));
    CHECK(rep.crossings[1].margin == doctest::Approx(0.756343).epsilon(1e-3));
    CHECK(rep.crossings[2].omega == doctest::Approx(6.79868).epsilon(1e-4));
    CHECK(rep.crossings[2].margin == doctest::Approx(0.0808922).epsilon(1e-3));
    CHECK(rep.margin == doctest::Approx(0.0808922).epsilon(1e-3));

    // Unity gain holds at each reported crossing.
    for (const auto& cp : rep.crossings)
        CHECK(std::abs(loop_transfer({}, {}, cp.omega)) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("worst vertex of the box is the frozen one") {
    const CriticalVertex cv = critical_vertex(SatelliteParams{}, PidParams{});
    CHECK(cv.values.scalars.at("dJ") == -1.0);
    CHECK(cv.values.scalars.at("da") == 1.0);
    CHECK(cv.values.scalars.at("dw") == 1.0);
    CHECK(cv.values.scalars.at("dx") == -1.0);
    CHECK(cv.report.margin == doctest::Approx(0.0623027).epsilon(1e-3));
}

TEST_CASE("reconstruction gates carry the frozen verdicts") {
    const std::vector<GateCheck> gates = reconstruction_gates();
    REQUIRE(gates.size() == 3);
    CHECK(gates[0].name == "dominant-mode-frequency");
    CHECK(gates[0].value == doctest::Approx(0.494302).epsilon(1e-4));
    CHECK(gates[0].pass);
    CHECK(gates[1].name == "nominal-delay-margin");
    CHECK(gates[1].value == doctest::Approx(0.0808922).epsilon(1e-3));
    CHECK(gates[1].pass);
    CHECK(gates[2].name == "critical-delay-margin");
    CHECK(gates[2].value == doctest::Approx(0.0623027).epsilon(1e-3));
    CHECK_FALSE(gates[2].pass);  // sits above the published interval
}

TEST_CASE("continuous design is stable across the box") {
    std::mt19937_64 rng(82);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const DeltaValues v = box_point(u(rng), u(rng), u(rng), u(rng));
        CHECK(continuous_closed_loop({}, {}, v).is_stable());
    }
}
