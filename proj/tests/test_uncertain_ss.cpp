#include <random>

#include "doctest.h"
#include "mrlft/errors.hpp"
#include "mrlft/uncertain_ss.hpp"

using namespace mrlft;

namespace {

Eigen::MatrixXd random_matrix(int r, int c, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = g(rng);
    return m;
}

StateSpaceModel random_system(int n, int m, int p, std::mt19937_64& rng,
                              std::optional<double> ts = std::nullopt) {
    return StateSpaceModel(random_matrix(n, n, rng), random_matrix(n, m, rng),
                           random_matrix(p, n, rng), random_matrix(p, m, rng), ts);
}

// Affine family with two scalar parameters touching A and B.
struct AffineCase {
    StateSpaceModel nominal;
    std::vector<StateSpaceModel> coeffs;
    ParameterBox box;
    UncertainStateSpace sys;
};

AffineCase make_affine(std::mt19937_64& rng) {
    AffineCase c{random_system(3, 2, 2, rng),
                 {random_system(3, 2, 2, rng), random_system(3, 2, 2, rng)},
                 ParameterBox({{"p1", 2.0, 0.5, -1.0, 1.0}, {"p2", -1.0, 0.25, -1.0, 1.0}}),
                 {}};
    c.sys = realize_affine(c.nominal, {"p1", "p2"}, c.coeffs, c.box,
                           ChannelMap{1, 1, 1, 1});
    return c;
}

Eigen::MatrixXd stack(const StateSpaceModel& s) {
    Eigen::MatrixXd m(s.states() + s.outputs(), s.states() + s.inputs());
    m << s.A, s.B, s.C, s.D;
    return m;
}

}  // namespace

TEST_CASE("realize_affine reproduces the family at random points") {
    std::mt19937_64 rng(101);
    const AffineCase c = make_affine(rng);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::vector<double> x{u(rng), u(rng)};
        const StateSpaceModel at = c.sys.eval_at(bind_box_values(c.box, x));
        const Eigen::MatrixXd expect =
            stack(c.nominal) + x[0] * stack(c.coeffs[0]) + x[1] * stack(c.coeffs[1]);
        CHECK((stack(at) - expect).norm() < 1e-11 * (1.0 + expect.norm()));
    }
}

TEST_CASE("realize_affine block sizes equal coefficient ranks") {
    std::mt19937_64 rng(102);
    StateSpaceModel nominal = random_system(3, 1, 1, rng);
    // Rank-1 coefficient: outer product placed in A.
    StateSpaceModel c1(Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Zero(3, 1),
                       Eigen::MatrixXd::Zero(1, 3), Eigen::MatrixXd::Zero(1, 1));
    c1.A = random_matrix(3, 1, rng) * random_matrix(1, 3, rng);
    const UncertainStateSpace sys = realize_affine(
        nominal, {"r1"}, {c1}, ParameterBox::unit({"r1"}), ChannelMap{0, 1, 0, 1});
    REQUIRE(sys.delta().size() == 1);
    CHECK(sys.delta().blocks()[0].rows == 1);
    CHECK(sys.delta().blocks()[0].kind == BlockKind::RealRepeatedScalar);
}

TEST_CASE("zero coefficients drop their parameter") {
    std::mt19937_64 rng(103);
    StateSpaceModel nominal = random_system(2, 1, 1, rng);
    StateSpaceModel zero(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 1),
                         Eigen::MatrixXd::Zero(1, 2), Eigen::MatrixXd::Zero(1, 1));
    StateSpaceModel live = zero;
    live.A = random_matrix(2, 2, rng);
    const UncertainStateSpace sys =
        realize_affine(nominal, {"dead", "live"}, {zero, live},
                       ParameterBox::unit({"dead", "live"}), ChannelMap{0, 1, 0, 1});
    CHECK(sys.delta().size() == 1);
    CHECK(sys.delta().blocks()[0].param == "live");
}

TEST_CASE("eval_at with empty values extracts the nominal partition") {
    std::mt19937_64 rng(104);
    const AffineCase c = make_affine(rng);
    const StateSpaceModel nom = c.sys.nominal();
    CHECK((stack(nom) - stack(c.nominal)).norm() < 1e-12 * (1.0 + stack(c.nominal).norm()));
}

TEST_CASE("scale_uncertainty compensates a scaled instantiation") {
    std::mt19937_64 rng(105);
    const AffineCase c = make_affine(rng);
    const double k = 0.35;
    const UncertainStateSpace scaled = c.sys.scale_uncertainty(k);
    const std::vector<double> x{0.6, -0.8};
    const StateSpaceModel a = c.sys.eval_at(bind_box_values(c.box, {k * x[0], k * x[1]}));
    const StateSpaceModel b = scaled.eval_at(bind_box_values(c.box, x));
    CHECK((stack(a) - stack(b)).norm() < 1e-11 * (1.0 + stack(a).norm()));
}

TEST_CASE("recenter shifts the box into the realization") {
    std::mt19937_64 rng(106);
    const AffineCase c = make_affine(rng);
    // delta = 0.25 + 0.5 * delta' on p1 only.
    const UncertainStateSpace rc = c.sys.recenter({"p1"}, {0.25}, {0.5});
    const StateSpaceModel a = c.sys.eval_at(bind_box_values(c.box, {0.25 + 0.5 * 0.4, -0.3}));
    const StateSpaceModel b = rc.eval_at(bind_box_values(c.box, {0.4, -0.3}));
    CHECK((stack(a) - stack(b)).norm() < 1e-11 * (1.0 + stack(a).norm()));
}

TEST_CASE("drop_blocks removes channels and zeroes the parameter") {
    std::mt19937_64 rng(107);
    const AffineCase c = make_affine(rng);
    const UncertainStateSpace dropped = c.sys.drop_blocks({"p2"});
    CHECK(dropped.delta().size() == 1);
    const StateSpaceModel a = dropped.eval_at(bind_box_values(c.box, {0.7, 0.0}));
    const StateSpaceModel b = c.sys.eval_at(bind_box_values(c.box, {0.7, 0.0}));
    CHECK((stack(a) - stack(b)).norm() < 1e-11 * (1.0 + stack(a).norm()));
}

TEST_CASE("reorder_blocks preserves the instantiated system") {
    std::mt19937_64 rng(108);
    const AffineCase c = make_affine(rng);
    const UncertainStateSpace perm = c.sys.reorder_blocks({1, 0});
    CHECK(perm.delta().blocks()[0].param == "p2");
    const DeltaValues v = bind_box_values(c.box, {0.3, -0.9});
    CHECK((stack(perm.eval_at(v)) - stack(c.sys.eval_at(v))).norm() < 1e-11);
}

TEST_CASE("close_controller matches hand-derived static feedback") {
    // Discrete plant x+ = 0.5 x + u, y = x, closed with u = k y (positive
    // feedback): x+ = (0.5 + k) x.
    Eigen::MatrixXd a(1, 1), b(1, 1), c(1, 1), d(1, 1);
    a << 0.5;
    b << 1.0;
    c << 1.0;
    d << 0.0;
    const StateSpaceModel plant(a, b, c, d, 0.1);
    const UncertainStateSpace up(plant, BlockStructure{}, ChannelMap{0, 1, 0, 1});
    const StateSpaceModel gain = StateSpaceModel::static_gain(0.3 * Eigen::MatrixXd::Ones(1, 1), 0.1);
    const UncertainStateSpace closed = close_controller(up, gain, {0}, {0});
    CHECK(closed.states() == 1);
    CHECK(closed.channels().n_u == 0);
    CHECK(closed.channels().n_y == 0);
    CHECK(closed.realization().A(0, 0) == doctest::Approx(0.8));
}

TEST_CASE("close_controller rejects an ill-posed static loop") {
    Eigen::MatrixXd a(1, 1), b(1, 1), c(1, 1), d(1, 1);
    a << 0.5;
    b << 1.0;
    c << 1.0;
    d << 1.0;  // direct feedthrough makes I - D K singular at K = 1
    const StateSpaceModel plant(a, b, c, d, 0.1);
    const UncertainStateSpace up(plant, BlockStructure{}, ChannelMap{0, 1, 0, 1});
    const StateSpaceModel gain = StateSpaceModel::static_gain(Eigen::MatrixXd::Ones(1, 1), 0.1);
    CHECK_THROWS_AS(close_controller(up, gain, {0}, {0}), NumericError);
}

TEST_CASE("close_controller requires matching periods") {
    Eigen::MatrixXd a(1, 1), b(1, 1), c(1, 1), d(1, 1);
    a << 0.5;
    b << 1.0;
    c << 1.0;
    d << 0.0;
    const StateSpaceModel plant(a, b, c, d, 0.1);
    const UncertainStateSpace up(plant, BlockStructure{}, ChannelMap{0, 1, 0, 1});
    const StateSpaceModel gain = StateSpaceModel::static_gain(Eigen::MatrixXd::Ones(1, 1), 0.2);
    CHECK_THROWS_AS(close_controller(up, gain, {0}, {0}), ModelError);
}
