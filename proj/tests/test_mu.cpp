#include <random>

#include "doctest.h"
#include "mrlft/mu.hpp"

using namespace mrlft;

namespace {

Eigen::MatrixXcd random_complex(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXcd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = std::complex<double>(g(rng), g(rng));
    return m;
}

double sigma_max(const Eigen::MatrixXcd& m) { return m.jacobiSvd().singularValues()(0); }

// Relative smallest singular value of I - M Delta / mu.
double closure_residual(const Eigen::MatrixXcd& m, const BlockStructure& s,
                        const MuLowerResult& r) {
    const Eigen::MatrixXcd delta = s.assemble(r.delta);
    const Eigen::MatrixXcd probe =
        Eigen::MatrixXcd::Identity(m.rows(), m.rows()) - m * delta / r.value;
    const auto sv = probe.jacobiSvd().singularValues();
    return sv(sv.size() - 1) / std::max(1.0, sv(0));
}

BlockStructure mixed_structure() {
    return BlockStructure({BlockSpec::real_scalar("a", 2), BlockSpec::real_scalar("b"),
                           BlockSpec::complex_full("c", 2, 2)});
}

}  // namespace

TEST_CASE("a single complex full block reduces to the largest singular value") {
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXcd m = random_complex(4, rng);
        const BlockStructure s({BlockSpec::complex_full("c", 4, 4)});
        const double sv = sigma_max(m);
        const MuUpperResult up = mu_upper_bound(m, s);
        const MuLowerResult lo = mu_lower_bound(m, s);
        CHECK(up.value == doctest::Approx(sv).epsilon(1e-6));
        CHECK(lo.value == doctest::Approx(sv).epsilon(1e-6));
        CHECK(lo.residual <= 1e-6);
    }
}

TEST_CASE("distinct real scalars on a diagonal matrix give the largest entry") {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
    m(0, 0) = 2.0;
    m(1, 1) = -3.0;
    const BlockStructure s({BlockSpec::real_scalar("d1"), BlockSpec::real_scalar("d2")});
    const MuUpperResult up = mu_upper_bound(m, s);
    const MuLowerResult lo = mu_lower_bound(m, s);
    CHECK(up.value >= 3.0 - 1e-9);
    CHECK(up.value <= 3.0 + 0.05);
    CHECK(lo.value == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(lo.delta.scalars.at("d2") * lo.value == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("repeated real scalar sees the real spectral radius") {
    // M has real eigenvalues +-1, so the smallest destabilizing repeated
    // delta is 1 while sigma_max(M) = 2.
    Eigen::MatrixXcd m(2, 2);
    m << 0.0, 4.0, 0.25, 0.0;
    const BlockStructure s({BlockSpec::real_scalar("d", 2)});
    const MuLowerResult lo = mu_lower_bound(m, s);
    CHECK(lo.value == doctest::Approx(1.0).epsilon(1e-6));
    const MuUpperResult up = mu_upper_bound(m, s);
    CHECK(up.value >= 1.0 - 1e-9);
    CHECK(up.value <= 1.0 + 0.25);  // G scalings close most of the gap to 2
}

TEST_CASE("purely imaginary gain is invisible to one real scalar") {
    Eigen::MatrixXcd m(1, 1);
    m(0, 0) = std::complex<double>(0.0, 5.0);
    const BlockStructure s({BlockSpec::real_scalar("d")});
    CHECK(mu_lower_bound(m, s).value == doctest::Approx(0.0));
    CHECK(mu_upper_bound(m, s).value <= 0.6);  // far below sigma_max = 5
}

TEST_CASE("bounds sandwich and scale linearly") {
    std::mt19937_64 rng(62);
    const BlockStructure s = mixed_structure();
    for (int trial = 0; trial < 8; ++trial) {
        const Eigen::MatrixXcd m = random_complex(5, rng);
        const MuUpperResult up = mu_upper_bound(m, s);
        const MuLowerResult lo = mu_lower_bound(m, s);
        CHECK(lo.value <= up.value * (1.0 + 1e-9));
        if (lo.value > 0.0) CHECK(closure_residual(m, s, lo) <= 1e-6);

        const double alpha = 2.5;
        const MuUpperResult up2 = mu_upper_bound(alpha * m, s);
        CHECK(up2.value == doctest::Approx(alpha * up.value).epsilon(2e-2));
    }
}

TEST_CASE("upper bound never falls below sampled structured evaluations") {
    std::mt19937_64 rng(63);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const BlockStructure s({BlockSpec::real_scalar("a"), BlockSpec::real_scalar("b", 2)});
    const Eigen::MatrixXcd m = random_complex(3, rng);
    const MuUpperResult up = mu_upper_bound(m, s);
    // Any unit-ball Delta with det(I - M Delta/k) = 0 certifies mu >= k.
    for (int trial = 0; trial < 200; ++trial) {
        DeltaValues v;
        v.scalars["a"] = u(rng);
        v.scalars["b"] = u(rng);
        const Eigen::MatrixXcd delta = s.assemble(v);
        const Eigen::MatrixXcd md = m * delta;
        // Largest real eigenvalue of M Delta gives a destabilizing scale.
        const auto eigs = md.eigenvalues();
        for (int i = 0; i < eigs.size(); ++i)
            if (std::abs(eigs(i).imag()) < 1e-9 && eigs(i).real() > 0.0)
                CHECK(eigs(i).real() <= up.value * (1.0 + 1e-6));
    }
}

TEST_CASE("coalesce_groups ties blocks sharing a param") {
    BlockStructure s({BlockSpec::real_scalar("dJ"), BlockSpec::real_full("eps", 2, 2)});
    std::map<std::string, std::string> renames;
    s = BlockStructure::augment(s, s, &renames);
    const auto groups = coalesce_groups(s);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].param == "dJ");
    CHECK(groups[0].row_segments.size() == 2);
    CHECK(groups[1].param == "eps");
    CHECK(groups[1].row_segments.size() == 2);
}

TEST_CASE("tied copies are instantiated with one shared value") {
    // Two 1x1 blocks sharing one param: the witness must bind the shared
    // param once, and the tied value destabilizes at delta = 1.
    Eigen::MatrixXcd m(2, 2);
    m << 0.0, 2.0, 0.5, 0.0;
    BlockStructure shared(
        {BlockSpec{"d", "d", BlockKind::RealRepeatedScalar, 1, 1},
         BlockSpec{"d#2", "d", BlockKind::RealRepeatedScalar, 1, 1}});
    const MuLowerResult lo = mu_lower_bound(m, shared);
    CHECK(lo.value == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(lo.delta.scalars.count("d") == 1);
    CHECK(lo.delta.scalars.count("d#2") == 0);
}

TEST_CASE("mu options keep results deterministic per seed") {
    std::mt19937_64 rng(64);
    const Eigen::MatrixXcd m = random_complex(5, rng);
    const BlockStructure s = mixed_structure();
    MuOptions opts;
    opts.seed = 7;
    const MuLowerResult a = mu_lower_bound(m, s, opts);
    const MuLowerResult b = mu_lower_bound(m, s, opts);
    CHECK(a.value == doctest::Approx(b.value).epsilon(0));
}

TEST_CASE("zero matrix has zero structured value") {
    const BlockStructure s({BlockSpec::real_scalar("a", 3)});
    const Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(3, 3);
    CHECK(mu_upper_bound(m, s).value == doctest::Approx(0.0));
    CHECK(mu_lower_bound(m, s).value == doctest::Approx(0.0));
}
