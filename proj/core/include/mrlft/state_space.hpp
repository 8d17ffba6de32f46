#pragma once

#include <Eigen/Dense>
#include <optional>

namespace mrlft {

// Plain state-space model x' = Ax + Bu, y = Cx + Du. Continuous when Ts is
// empty, discrete with period Ts otherwise.
struct StateSpaceModel {
    Eigen::MatrixXd A, B, C, D;
    std::optional<double> Ts;

    StateSpaceModel() = default;
    StateSpaceModel(Eigen::MatrixXd A_, Eigen::MatrixXd B_, Eigen::MatrixXd C_,
                    Eigen::MatrixXd D_, std::optional<double> Ts_ = std::nullopt);

    int states() const { return static_cast<int>(A.rows()); }
    int inputs() const { return static_cast<int>(B.cols()); }
    int outputs() const { return static_cast<int>(C.rows()); }
    bool is_discrete() const { return Ts.has_value(); }

    // Spectral abscissa (continuous) or radius margin (discrete): max Re(eig)
    // or max |eig| - 1. Negative iff asymptotically stable.
    double stability_measure() const;
    bool is_stable() const { return stability_measure() < 0.0; }

    // Transfer matrix D + C (wI - A)^-1 B at w = jw (continuous) or
    // w = exp(j w Ts) (discrete).
    Eigen::MatrixXcd transfer_at(double omega) const;

    static StateSpaceModel static_gain(const Eigen::MatrixXd& D,
                                       std::optional<double> Ts = std::nullopt);
};

void check_dims(const StateSpaceModel& sys, const char* where);

}  // namespace mrlft
