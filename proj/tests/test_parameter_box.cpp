#include <random>

#include "doctest.h"
#include "mrlft/parameter_box.hpp"

using namespace mrlft;

TEST_CASE("unit box exposes centers, radii, and physical mapping") {
    ParameterBox box({{"dJ", 1.0, 0.1, -1.0, 1.0}, {"dw", 4.0, 0.4, -1.0, 1.0}});
    CHECK(box.size() == 2);
    CHECK(box.center()[0] == doctest::Approx(0.0));
    CHECK(box.radii()[1] == doctest::Approx(1.0));
    CHECK(box.max_radius() == doctest::Approx(1.0));
    CHECK(box.physical(0, 1.0) == doctest::Approx(1.1));
    CHECK(box.physical(1, -1.0) == doctest::Approx(3.6));
    CHECK(box.index_of("dw") == 1);
    CHECK(box.index_of("dq") == -1);
}

TEST_CASE("vertices enumerate all corners of non-degenerate dimensions") {
    const ParameterBox box = ParameterBox::unit({"a", "b", "c"});
    const auto verts = box.vertices();
    CHECK(verts.size() == 8);
    for (const auto& v : verts) {
        CHECK(v.size() == 3);
        for (double x : v) CHECK(std::abs(x) == doctest::Approx(1.0));
        CHECK(box.contains(v));
    }
}

TEST_CASE("degenerate dimensions stay at their center in vertices") {
    ParameterBox box({{"a", 0.0, 1.0, -1.0, 1.0}, {"b", 0.0, 1.0, 0.25, 0.25}});
    const auto verts = box.vertices();
    CHECK(verts.size() == 2);
    for (const auto& v : verts) CHECK(v[1] == doctest::Approx(0.25));
}

TEST_CASE("split halves one dimension and preserves the rest") {
    const ParameterBox box = ParameterBox::unit({"a", "b"});
    const auto [left, right] = box.split(1);
    CHECK(left.params()[1].lo == doctest::Approx(-1.0));
    CHECK(left.params()[1].hi == doctest::Approx(0.0));
    CHECK(right.params()[1].lo == doctest::Approx(0.0));
    CHECK(right.params()[1].hi == doctest::Approx(1.0));
    CHECK(left.params()[0].hi == doctest::Approx(1.0));
    CHECK(left.volume() + right.volume() == doctest::Approx(box.volume()));
}

TEST_CASE("samples fall inside the box deterministically per seed") {
    const ParameterBox box = ParameterBox::unit({"a", "b", "c", "d"});
    std::mt19937_64 rng1(42), rng2(42);
    for (int i = 0; i < 50; ++i) {
        const auto x = box.sample(rng1);
        CHECK(box.contains(x));
        CHECK(x == box.sample(rng2));
    }
}

TEST_CASE("contains respects bounds with tolerance") {
    const ParameterBox box = ParameterBox::unit({"a"});
    CHECK(box.contains({1.0}));
    CHECK(box.contains({1.0 + 1e-13}));
    CHECK_FALSE(box.contains({1.1}));
}
