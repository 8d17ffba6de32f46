#pragma once

#include <string>
#include <vector>

#include "mrlft/block_structure.hpp"
#include "mrlft/parameter_box.hpp"
#include "mrlft/state_space.hpp"

namespace mrlft {

// Width bookkeeping for the partitioned I/O of an uncertain realization:
// inputs [w_delta | w | u], outputs [z_delta | z | y].
struct ChannelMap {
    int n_w = 0;  // exogenous inputs
    int n_u = 0;  // control inputs
    int n_z = 0;  // performance outputs
    int n_y = 0;  // measurement outputs
};

// State-space LFT realization: the uncertainty closes z_delta -> w_delta as
// an upper LFT with the block-diagonal Delta described by `delta`.
class UncertainStateSpace {
public:
    UncertainStateSpace() = default;
    UncertainStateSpace(StateSpaceModel realization, BlockStructure delta, ChannelMap channels);

    const StateSpaceModel& realization() const { return sys_; }
    const BlockStructure& delta() const { return delta_; }
    const ChannelMap& channels() const { return ch_; }
    bool is_discrete() const { return sys_.is_discrete(); }
    std::optional<double> period() const { return sys_.Ts; }
    int states() const { return sys_.states(); }
    int n_wd() const { return delta_.total_rows(); }
    int n_zd() const { return delta_.total_cols(); }

    // Partition views of the realization.
    Eigen::MatrixXd A() const { return sys_.A; }
    Eigen::MatrixXd B_delta() const { return sys_.B.leftCols(n_wd()); }
    Eigen::MatrixXd B_w() const { return sys_.B.middleCols(n_wd(), ch_.n_w); }
    Eigen::MatrixXd B_u() const { return sys_.B.rightCols(ch_.n_u); }
    Eigen::MatrixXd C_delta() const { return sys_.C.topRows(n_zd()); }
    Eigen::MatrixXd C_z() const { return sys_.C.middleRows(n_zd(), ch_.n_z); }
    Eigen::MatrixXd C_y() const { return sys_.C.bottomRows(ch_.n_y); }
    Eigen::MatrixXd D_block(int row_part, int col_part) const;  // parts: 0=delta,1=w/z,2=u/y

    // Instantiates Delta and closes the uncertainty channels. With empty
    // values this is an exact partition extraction (no solve).
    StateSpaceModel eval_at(const DeltaValues& values) const;
    StateSpaceModel nominal() const { return eval_at(DeltaValues::zero()); }

    // Transfer of the uncertainty channel block M(s): z_delta <- w_delta,
    // evaluated on the stability boundary at `omega`. With `with_perf` the
    // performance channels are appended: [z_delta; z] <- [w_delta; w].
    Eigen::MatrixXcd uncertainty_transfer(double omega, bool with_perf = false) const;

    // Rescales every uncertainty channel: block i absorbs factor k_i so the
    // new Delta' = Delta / k_i ranges over the unit ball when the original
    // ranged over radius k_i. Scalar overload scales all blocks alike.
    UncertainStateSpace scale_uncertainty(double k) const;
    UncertainStateSpace scale_uncertainty(const std::vector<double>& per_block) const;

    // Re-centers real scalar params: delta_p = c_p + rho_p * delta_p', with
    // the shift absorbed into the realization. Unlisted params keep c=0,
    // rho=1. Full blocks cannot be re-centered (throws if named).
    UncertainStateSpace recenter(const std::vector<std::string>& params,
                                 const std::vector<double>& centers,
                                 const std::vector<double>& radii) const;
    UncertainStateSpace recenter(const ParameterBox& box) const;

    // Permutes the delta blocks into the given order (indices into blocks()).
    UncertainStateSpace reorder_blocks(const std::vector<int>& perm) const;

    // Drops uncertainty blocks (and their channels) by name.
    UncertainStateSpace drop_blocks(const std::vector<std::string>& names) const;

    std::string describe() const;

private:
    StateSpaceModel sys_;
    BlockStructure delta_;
    ChannelMap ch_;
};

// Closes measurement/control channels of a discrete plant with a discrete
// controller (positive feedback u_sel = ctrl(y_sel)); periods must match and
// the static loop must be well posed. Selected channels are consumed;
// uncertainty channels and remaining I/O keep their order.
UncertainStateSpace close_controller(const UncertainStateSpace& plant,
                                     const StateSpaceModel& ctrl,
                                     const std::vector<int>& y_idx,
                                     const std::vector<int>& u_idx);

// Builds the minimal-by-construction LFT realization of an affine family
//   S(x) = S0 + sum_i x_i * Si,  Si = [[Ai, Bi], [Ci, Di]],
// where x_i = (p_i - nominal_i)/half_range_i is the normalized parameter.
// Each parameter contributes a real repeated-scalar block of size
// rank([Ai Bi; Ci Di]); zero coefficients drop the parameter.
UncertainStateSpace realize_affine(const StateSpaceModel& nominal,
                                   const std::vector<std::string>& param_names,
                                   const std::vector<StateSpaceModel>& coeffs,
                                   const ParameterBox& box, const ChannelMap& channels);

// DeltaValues binding every scalar param of `box` to coordinates `x`.
DeltaValues bind_box_values(const ParameterBox& box, const std::vector<double>& x);

}  // namespace mrlft
