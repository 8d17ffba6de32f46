#include "mrlft/state_space.hpp"

#include <complex>
#include <string>

#include <Eigen/Eigenvalues>

#include "mrlft/errors.hpp"

namespace mrlft {

StateSpaceModel::StateSpaceModel(Eigen::MatrixXd A_, Eigen::MatrixXd B_, Eigen::MatrixXd C_,
                                 Eigen::MatrixXd D_, std::optional<double> Ts_)
    : A(std::move(A_)), B(std::move(B_)), C(std::move(C_)), D(std::move(D_)), Ts(Ts_) {
    check_dims(*this, "StateSpaceModel");
    if (Ts && *Ts <= 0.0) throw ModelError("StateSpaceModel: period must be positive");
}

void check_dims(const StateSpaceModel& sys, const char* where) {
    const auto n = sys.A.rows();
    if (sys.A.cols() != n) throw ModelError(std::string(where) + ": A must be square");
    if (sys.B.rows() != n) throw ModelError(std::string(where) + ": B row count != states");
    if (sys.C.cols() != n) throw ModelError(std::string(where) + ": C col count != states");
    if (sys.D.rows() != sys.C.rows() || sys.D.cols() != sys.B.cols())
        throw ModelError(std::string(where) + ": D must be outputs x inputs");
}

double StateSpaceModel::stability_measure() const {
    if (A.rows() == 0) return -1.0;
    Eigen::VectorXcd eig = A.eigenvalues();
    double worst = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
        double m = is_discrete() ? std::abs(eig[i]) - 1.0 : eig[i].real();
        worst = std::max(worst, m);
    }
    return worst;
}

Eigen::MatrixXcd StateSpaceModel::transfer_at(double omega) const {
    using cd = std::complex<double>;
    const Eigen::Index n = A.rows();
    if (n == 0) return D.cast<cd>();
    cd s = is_discrete() ? std::polar(1.0, omega * *Ts) : cd(0.0, omega);
    Eigen::MatrixXcd resolvent =
        (s * Eigen::MatrixXcd::Identity(n, n) - A.cast<cd>()).partialPivLu().solve(B.cast<cd>());
    return D.cast<cd>() + C.cast<cd>() * resolvent;
}

StateSpaceModel StateSpaceModel::static_gain(const Eigen::MatrixXd& D,
                                             std::optional<double> Ts) {
    StateSpaceModel sys;
    sys.A.resize(0, 0);
    sys.B.resize(0, D.cols());
    sys.C.resize(D.rows(), 0);
    sys.D = D;
    sys.Ts = Ts;
    return sys;
}

}  // namespace mrlft
