#include <random>

#include "doctest.h"
#include "mrlft/multirate.hpp"
#include "mrlft/satellite.hpp"

using namespace mrlft;

namespace {

Eigen::MatrixXd random_matrix(int r, int c, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = g(rng);
    return m;
}

StateSpaceModel random_coeff(int n, int m, int p, std::mt19937_64& rng, double scale) {
    return StateSpaceModel(scale * random_matrix(n, n, rng), scale * random_matrix(n, m, rng),
                           scale * random_matrix(p, n, rng), scale * random_matrix(p, m, rng));
}

// Random discrete uncertain system with two scalar params touching all four
// matrices, so the value outputs read the uncertainty channels directly.
UncertainStateSpace random_uncertain(std::mt19937_64& rng) {
    StateSpaceModel nominal = random_coeff(3, 2, 2, rng, 1.0);
    nominal.A *= 0.25;  // keep powers tame
    nominal.Ts = 0.1;
    return realize_affine(nominal, {"p1", "p2"},
                          {random_coeff(3, 2, 2, rng, 0.1), random_coeff(3, 2, 2, rng, 0.1)},
                          ParameterBox::unit({"p1", "p2"}), ChannelMap{1, 1, 1, 1});
}

Eigen::MatrixXd stack(const StateSpaceModel& s) {
    Eigen::MatrixXd m(s.states() + s.outputs(), s.states() + s.inputs());
    m << s.A, s.B, s.C, s.D;
    return m;
}

// Brute-force q-step composition of the instantiated one-step map under held
// inputs, with outputs sampled at the slow instants.
StateSpaceModel iterate_q(const StateSpaceModel& s, int q) {
    const int n = s.states();
    Eigen::MatrixXd aq = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd bq = Eigen::MatrixXd::Zero(n, s.inputs());
    for (int j = 0; j < q; ++j) {
        bq = s.A * bq + s.B;
        aq = s.A * aq;
    }
    return StateSpaceModel(aq, bq, s.C, s.D, *s.Ts * q);
}

}  // namespace

TEST_CASE("downsampled one-step map equals the q-step composition") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int q : {2, 3, 4}) {
        const UncertainStateSpace sys = random_uncertain(rng);
        const UncertainStateSpace slow = downsample(sys, q);
        CHECK(slow.delta().size() == q * sys.delta().size());
        CHECK(*slow.period() == doctest::Approx(0.1 * q));
        for (int trial = 0; trial < 20; ++trial) {
            DeltaValues v;
            v.scalars["p1"] = u(rng);
            v.scalars["p2"] = u(rng);
            const StateSpaceModel got = slow.eval_at(v);
            const StateSpaceModel want = iterate_q(sys.eval_at(v), q);
            CHECK((stack(got) - stack(want)).cwiseAbs().maxCoeff() < 1e-11);
        }
    }
}

TEST_CASE("downsampling by one is the identity") {
    std::mt19937_64 rng(32);
    const UncertainStateSpace sys = random_uncertain(rng);
    const UncertainStateSpace same = downsample(sys, 1);
    CHECK((same.realization().A - sys.realization().A).norm() == doctest::Approx(0.0));
    CHECK(same.delta().size() == sys.delta().size());
}

TEST_CASE("downsample rejects continuous systems and bad factors") {
    const UncertainStateSpace plant = build_plant();
    CHECK_THROWS_AS(downsample(plant, 2), ModelError);
    std::mt19937_64 rng(33);
    CHECK_THROWS_AS(downsample(random_uncertain(rng), 0), ModelError);
}

TEST_CASE("controller timing validation") {
    MultirateController ctrl = build_controller();
    CHECK(ctrl.rate_count() == 2);
    CHECK(ctrl.fastest_period() == doctest::Approx(0.1));
    CHECK(ctrl.slowest_period() == doctest::Approx(0.2));
    CHECK(ctrl.rate_ratios() == std::vector<int>{2});
    ctrl.validate(2, 1);

    MultirateController bad = ctrl;
    bad.loops[1].period = 0.25;  // not an integer multiple of 0.1
    CHECK_THROWS_AS(bad.validate(2, 1), ModelError);

    MultirateController bad_routing = ctrl;
    bad_routing.l_sigma = Eigen::MatrixXd::Ones(1, 2);
    CHECK_THROWS_AS(bad_routing.validate(2, 1), ModelError);

    MultirateController bad_measure = ctrl;
    bad_measure.loops[0].y_indices = {5};
    CHECK_THROWS_AS(bad_measure.validate(2, 1), ModelError);
}

TEST_CASE("assembly produces a slow-rate model with replicated structure") {
    const UncertainStateSpace plant = build_plant();
    const MultirateController ctrl = build_controller();
    const AssemblyResult res = assemble(plant, ctrl, 1, 0.1);
    CHECK(res.sys.is_discrete());
    CHECK(*res.sys.period() == doctest::Approx(0.2));
    CHECK(res.sys.states() == 6);  // five plant states plus the integrator
    CHECK(res.sys.channels().n_u == 0);
    CHECK(res.sys.channels().n_y == 0);
    CHECK(res.error_report.certified);
    CHECK_FALSE(res.log.steps.empty());
    CHECK(res.log.describe().find("downsample x2") != std::string::npos);

    int eps_rows = 0, copies = 0;
    for (const auto& b : res.sys.delta().blocks()) {
        if (b.param == "eps") eps_rows += b.rows;
        if (b.param == "dJ") ++copies;
    }
    CHECK(eps_rows == 10);
    CHECK(copies == 2);
}

TEST_CASE("assembly rejects mismatched fast periods and discrete plants") {
    const UncertainStateSpace plant = build_plant();
    const MultirateController ctrl = build_controller();
    CHECK_THROWS_AS(assemble(plant, ctrl, 1, 0.05), ModelError);
    const AssemblyResult res = assemble(plant, ctrl, 1, 0.1);
    CHECK_THROWS_AS(assemble(res.sys, ctrl, 1, 0.1), ModelError);
}

TEST_CASE("tustin assembly carries no error certificate") {
    const UncertainStateSpace plant = build_plant();
    const MultirateController ctrl = build_controller();
    const AssemblyResult res =
        assemble(plant, ctrl, 1, 0.1, DiscretizationMethod::Tustin);
    CHECK_FALSE(res.error_report.certified);
    CHECK(res.error_report.bound == doctest::Approx(0.0));
    for (const auto& b : res.sys.delta().blocks()) CHECK(b.param.rfind("eps", 0) != 0);
}

TEST_CASE("single-rate collapse with q = 1 skips down-sampling") {
    PidParams c;
    c.q = 1;
    const MultirateController ctrl = build_controller(c);
    CHECK(ctrl.rate_ratios() == std::vector<int>{1});
    const AssemblyResult res = assemble(build_plant(), ctrl, 1, 0.1);
    CHECK(*res.sys.period() == doctest::Approx(0.1));
    int copies = 0;
    for (const auto& b : res.sys.delta().blocks())
        if (b.param == "dJ") ++copies;
    CHECK(copies == 1);
}
