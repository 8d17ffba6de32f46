#include "mrlft/lft.hpp"

#include <string>

#include "mrlft/errors.hpp"

namespace mrlft {
namespace {

template <typename Mat>
Mat closure_solve_impl(const Mat& G, const Mat& R, const char* what) {
    const Eigen::Index n = G.rows();
    if (n == 0) return R;
    Mat lhs = Mat::Identity(n, n) - G;
    Eigen::PartialPivLU<Mat> lu(lhs);
    if (lu.rcond() < kWellPosedRcond)
        throw IllPosedError(std::string("ill-posed LFT closure in ") + what +
                            " (rcond < 1e-12)");
    return lu.solve(R);
}

template <typename Mat>
Mat upper_lft_impl(const Mat& M, int r1, int c1, const Mat& Delta, const char* what) {
    if (r1 < 0 || c1 < 0 || r1 > M.rows() || c1 > M.cols())
        throw ModelError("upper_lft: partition exceeds matrix dimensions");
    if (Delta.rows() != c1 || Delta.cols() != r1)
        throw ModelError("upper_lft: Delta must be " + std::to_string(c1) + "x" +
                         std::to_string(r1) + ", got " + std::to_string(Delta.rows()) + "x" +
                         std::to_string(Delta.cols()));
    const auto r2 = M.rows() - r1;
    const auto c2 = M.cols() - c1;
    Mat M11 = M.topLeftCorner(r1, c1);
    Mat M12 = M.topRightCorner(r1, c2);
    Mat M21 = M.bottomLeftCorner(r2, c1);
    Mat M22 = M.bottomRightCorner(r2, c2);
    if (r1 == 0 || c1 == 0 || Delta.isZero(0.0)) return M22;
    Mat inner = closure_solve_impl<Mat>(M11 * Delta, M12, what);
    return M22 + M21 * Delta * inner;
}

template <typename Mat>
Mat flip_partitions(const Mat& M, int r1, int c1) {
    const auto r2 = M.rows() - r1;
    const auto c2 = M.cols() - c1;
    Mat F(M.rows(), M.cols());
    F.topLeftCorner(r2, c2) = M.bottomRightCorner(r2, c2);
    F.topRightCorner(r2, c1) = M.bottomLeftCorner(r2, c1);
    F.bottomLeftCorner(r1, c2) = M.topRightCorner(r1, c2);
    F.bottomRightCorner(r1, c1) = M.topLeftCorner(r1, c1);
    return F;
}

}  // namespace

Eigen::MatrixXd upper_lft(const Eigen::MatrixXd& M, int r1, int c1, const Eigen::MatrixXd& Delta) {
    return upper_lft_impl(M, r1, c1, Delta, "upper_lft");
}

Eigen::MatrixXcd upper_lft(const Eigen::MatrixXcd& M, int r1, int c1,
                           const Eigen::MatrixXcd& Delta) {
    return upper_lft_impl(M, r1, c1, Delta, "upper_lft");
}

Eigen::MatrixXd lower_lft(const Eigen::MatrixXd& M, int r1, int c1, const Eigen::MatrixXd& K) {
    return upper_lft_impl(flip_partitions(M, r1, c1), static_cast<int>(M.rows()) - r1,
                          static_cast<int>(M.cols()) - c1, K, "lower_lft");
}

Eigen::MatrixXcd lower_lft(const Eigen::MatrixXcd& M, int r1, int c1, const Eigen::MatrixXcd& K) {
    return upper_lft_impl(flip_partitions(M, r1, c1), static_cast<int>(M.rows()) - r1,
                          static_cast<int>(M.cols()) - c1, K, "lower_lft");
}

Eigen::MatrixXd closure_solve(const Eigen::MatrixXd& G, const Eigen::MatrixXd& R,
                              const char* what) {
    return closure_solve_impl(G, R, what);
}

Eigen::MatrixXcd closure_solve(const Eigen::MatrixXcd& G, const Eigen::MatrixXcd& R,
                               const char* what) {
    return closure_solve_impl(G, R, what);
}

}  // namespace mrlft
