#include <random>

#include "doctest.h"
#include "mrlft/errors.hpp"
#include "mrlft/lft.hpp"

using namespace mrlft;

namespace {

Eigen::MatrixXd random_matrix(int r, int c, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = g(rng);
    return m;
}

// Exchanges the two partitions of M so that the upper LFT of one equals the
// lower LFT of the other.
Eigen::MatrixXd swap_partitions(const Eigen::MatrixXd& m, int r1, int c1) {
    const int r2 = static_cast<int>(m.rows()) - r1;
    const int c2 = static_cast<int>(m.cols()) - c1;
    Eigen::MatrixXd s(m.rows(), m.cols());
    s.topLeftCorner(r2, c2) = m.bottomRightCorner(r2, c2);
    s.topRightCorner(r2, c1) = m.bottomLeftCorner(r2, c1);
    s.bottomLeftCorner(r1, c2) = m.topRightCorner(r1, c2);
    s.bottomRightCorner(r1, c1) = m.topLeftCorner(r1, c1);
    return s;
}

}  // namespace

TEST_CASE("upper LFT with zero block returns the lower-right partition") {
    std::mt19937_64 rng(11);
    const Eigen::MatrixXd m = random_matrix(5, 5, rng);
    const Eigen::MatrixXd f = upper_lft(m, 2, 2, Eigen::MatrixXd::Zero(2, 2));
    CHECK((f - m.bottomRightCorner(3, 3)).norm() == doctest::Approx(0.0));
}

TEST_CASE("upper LFT matches the explicit closure formula") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const int r1 = 2, c1 = 3;
        const Eigen::MatrixXd m = random_matrix(r1 + 3, c1 + 2, rng);
        Eigen::MatrixXd delta = 0.3 * random_matrix(c1, r1, rng);
        const Eigen::MatrixXd m11 = m.topLeftCorner(r1, c1);
        const Eigen::MatrixXd expect =
            m.bottomRightCorner(3, 2) +
            m.bottomLeftCorner(3, c1) * delta *
                (Eigen::MatrixXd::Identity(r1, r1) - m11 * delta).inverse() *
                m.topRightCorner(r1, 2);
        CHECK((upper_lft(m, r1, c1, delta) - expect).norm() < 1e-12 * (1.0 + expect.norm()));
    }
}

TEST_CASE("upper LFT of swapped partitions equals lower LFT") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const int r1 = 3, c1 = 2;
        const Eigen::MatrixXd m = random_matrix(r1 + 2, c1 + 4, rng);
        const Eigen::MatrixXd k = 0.4 * random_matrix(c1, r1, rng);
        const Eigen::MatrixXd up = upper_lft(m, r1, c1, k);
        const Eigen::MatrixXd low = lower_lft(swap_partitions(m, r1, c1), 2, 4, k);
        CHECK((up - low).norm() < 1e-12 * (1.0 + up.norm()));
    }
}

TEST_CASE("complex overload agrees with the real path on real data") {
    std::mt19937_64 rng(14);
    const Eigen::MatrixXd m = random_matrix(6, 6, rng);
    const Eigen::MatrixXd delta = 0.2 * random_matrix(3, 3, rng);
    const Eigen::MatrixXcd fc =
        upper_lft(Eigen::MatrixXcd(m.cast<std::complex<double>>()), 3, 3,
                  Eigen::MatrixXcd(delta.cast<std::complex<double>>()));
    const Eigen::MatrixXd fr = upper_lft(m, 3, 3, delta);
    CHECK((fc.real() - fr).norm() < 1e-12);
    CHECK(fc.imag().norm() == doctest::Approx(0.0));
}

TEST_CASE("singular closure raises IllPosedError naming the context") {
    const Eigen::MatrixXd g = Eigen::MatrixXd::Identity(2, 2);
    const Eigen::MatrixXd r = Eigen::MatrixXd::Ones(2, 2);
    CHECK_THROWS_AS(closure_solve(g, r, "unit test"), IllPosedError);
    try {
        closure_solve(g, r, "unit test");
    } catch (const IllPosedError& e) {
        CHECK(std::string(e.what()).find("unit test") != std::string::npos);
    }
}

TEST_CASE("ill-posed LFT interconnection is rejected") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
    m(0, 0) = 1.0;  // M11 * Delta = I at Delta = 1
    m(0, 1) = m(1, 0) = m(2, 2) = 1.0;
    CHECK_THROWS_AS(upper_lft(m, 1, 1, Eigen::MatrixXd::Ones(1, 1)), IllPosedError);
}

TEST_CASE("closure_solve equals a dense solve away from singularity") {
    std::mt19937_64 rng(15);
    const Eigen::MatrixXd g = 0.5 * random_matrix(4, 4, rng);
    const Eigen::MatrixXd r = random_matrix(4, 2, rng);
    const Eigen::MatrixXd x = closure_solve(g, r);
    CHECK(((Eigen::MatrixXd::Identity(4, 4) - g) * x - r).norm() < 1e-12);
}
