#pragma once

#include <Eigen/Dense>

namespace mrlft {

// Upper LFT: M partitioned with r1 x c1 top-left block,
//   F_u(M, Delta) = M22 + M21 Delta (I - M11 Delta)^-1 M12,
// Delta of size c1 x r1 closing the first partition.
Eigen::MatrixXd upper_lft(const Eigen::MatrixXd& M, int r1, int c1, const Eigen::MatrixXd& Delta);
Eigen::MatrixXcd upper_lft(const Eigen::MatrixXcd& M, int r1, int c1,
                           const Eigen::MatrixXcd& Delta);

// Lower LFT: closes the second partition with K of size c2 x r2,
//   F_l(M, K) = M11 + M12 K (I - M22 K)^-1 M21.
Eigen::MatrixXd lower_lft(const Eigen::MatrixXd& M, int r1, int c1, const Eigen::MatrixXd& K);
Eigen::MatrixXcd lower_lft(const Eigen::MatrixXcd& M, int r1, int c1, const Eigen::MatrixXcd& K);

// Reciprocal condition number below which (I - M11 Delta) is ill-posed.
inline constexpr double kWellPosedRcond = 1e-12;

// Solves (I - G)^-1 R, raising IllPosedError mentioning `what` when the
// closure is singular within kWellPosedRcond.
Eigen::MatrixXd closure_solve(const Eigen::MatrixXd& G, const Eigen::MatrixXd& R,
                              const char* what = "closure");
Eigen::MatrixXcd closure_solve(const Eigen::MatrixXcd& G, const Eigen::MatrixXcd& R,
                               const char* what = "closure");

}  // namespace mrlft
