#include "doctest.h"
#include "mrlft/block_structure.hpp"
#include "mrlft/errors.hpp"

using namespace mrlft;

namespace {

BlockStructure sample_structure() {
    return BlockStructure({BlockSpec::real_scalar("dJ"), BlockSpec::real_scalar("dw", 2),
                           BlockSpec::real_full("eps", 3, 2)});
}

}  // namespace

TEST_CASE("offsets and totals follow the block layout") {
    const BlockStructure s = sample_structure();
    CHECK(s.total_rows() == 1 + 2 + 3);
    CHECK(s.total_cols() == 1 + 2 + 2);
    CHECK(s.row_offset(0) == 0);
    CHECK(s.row_offset(1) == 1);
    CHECK(s.row_offset(2) == 3);
    CHECK(s.col_offset(2) == 3);
    CHECK(s.index_of("dw") == 1);
    CHECK(s.index_of("absent") == -1);
    CHECK(s.has_param("eps"));
}

TEST_CASE("assemble places scalar and full values block-diagonally") {
    const BlockStructure s = sample_structure();
    DeltaValues v;
    v.scalars["dJ"] = 0.5;
    v.scalars["dw"] = -0.25;
    Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(3, 2);
    e(0, 1) = 2.0;
    v.matrices["eps"] = e;
    const Eigen::MatrixXcd d = s.assemble(v);
    CHECK(d.rows() == 6);
    CHECK(d.cols() == 5);
    CHECK(d(0, 0).real() == doctest::Approx(0.5));
    CHECK(d(1, 1).real() == doctest::Approx(-0.25));
    CHECK(d(2, 2).real() == doctest::Approx(-0.25));
    CHECK(d(3, 4).real() == doctest::Approx(2.0));
    CHECK(d.cwiseAbs().sum() == doctest::Approx(0.5 + 0.5 + 2.0));
}

TEST_CASE("unbound params default to zero and extras are ignored") {
    const BlockStructure s = sample_structure();
    DeltaValues v;
    v.scalars["unrelated"] = 9.0;
    CHECK(s.assemble(v).norm() == doctest::Approx(0.0));
}

TEST_CASE("real block rejects complex values and wrong shapes") {
    const BlockStructure s = sample_structure();
    DeltaValues bad_shape;
    bad_shape.matrices["eps"] = Eigen::MatrixXcd::Zero(2, 2);
    CHECK_THROWS_AS(s.assemble(bad_shape), ModelError);
    DeltaValues bad_complex;
    bad_complex.matrices["eps"] = std::complex<double>(0, 1) * Eigen::MatrixXcd::Ones(3, 2);
    CHECK_THROWS_AS(s.assemble(bad_complex), ModelError);
}

TEST_CASE("augment renames duplicate blocks but keeps param identity") {
    const BlockStructure a = sample_structure();
    std::map<std::string, std::string> renames;
    const BlockStructure s = BlockStructure::augment(a, a, &renames);
    CHECK(s.size() == 6);
    CHECK(renames.at("dJ") == "dJ#2");
    CHECK(s.blocks()[3].name == "dJ#2");
    CHECK(s.blocks()[3].param == "dJ");
    // One scalar value feeds every copy.
    DeltaValues v;
    v.scalars["dJ"] = 1.0;
    CHECK(s.assemble(v).real().trace() == doctest::Approx(2.0));
}

TEST_CASE("scalar_params lists distinct params in first-appearance order") {
    BlockStructure s = sample_structure();
    s.append(BlockSpec::real_scalar("dJ#x"));
    const auto params = s.scalar_params();
    REQUIRE(params.size() == 3);
    CHECK(params[0] == "dJ");
    CHECK(params[1] == "dw");
    CHECK_FALSE(s.all_real_scalars());
}

TEST_CASE("append rejects duplicate names") {
    BlockStructure s = sample_structure();
    CHECK_THROWS_AS(s.append(BlockSpec::real_scalar("dJ")), ModelError);
}

TEST_CASE("describe names blocks with sizes") {
    const std::string text = sample_structure().describe();
    CHECK(text.find("dJ") != std::string::npos);
    CHECK(text.find("dw") != std::string::npos);
    CHECK(text.find("eps") != std::string::npos);
}
