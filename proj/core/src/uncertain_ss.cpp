#include "mrlft/uncertain_ss.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "mrlft/errors.hpp"
#include "mrlft/lft.hpp"

namespace mrlft {

UncertainStateSpace::UncertainStateSpace(StateSpaceModel realization, BlockStructure delta,
                                         ChannelMap channels)
    : sys_(std::move(realization)), delta_(std::move(delta)), ch_(channels) {
    check_dims(sys_, "UncertainStateSpace");
    const int want_in = delta_.total_rows() + ch_.n_w + ch_.n_u;
    const int want_out = delta_.total_cols() + ch_.n_z + ch_.n_y;
    if (sys_.inputs() != want_in)
        throw ModelError("UncertainStateSpace: realization has " + std::to_string(sys_.inputs()) +
                         " inputs, channel map needs " + std::to_string(want_in));
    if (sys_.outputs() != want_out)
        throw ModelError("UncertainStateSpace: realization has " + std::to_string(sys_.outputs()) +
                         " outputs, channel map needs " + std::to_string(want_out));
}

Eigen::MatrixXd UncertainStateSpace::D_block(int row_part, int col_part) const {
    const int r0 = row_part == 0 ? 0 : row_part == 1 ? n_zd() : n_zd() + ch_.n_z;
    const int nr = row_part == 0 ? n_zd() : row_part == 1 ? ch_.n_z : ch_.n_y;
    const int c0 = col_part == 0 ? 0 : col_part == 1 ? n_wd() : n_wd() + ch_.n_w;
    const int nc = col_part == 0 ? n_wd() : col_part == 1 ? ch_.n_w : ch_.n_u;
    return sys_.D.block(r0, c0, nr, nc);
}

StateSpaceModel UncertainStateSpace::eval_at(const DeltaValues& values) const {
    const int nd = n_wd();
    const int m = ch_.n_w + ch_.n_u;
    const int p = ch_.n_z + ch_.n_y;
    StateSpaceModel out;
    out.Ts = sys_.Ts;
    if (nd == 0 || values.empty()) {
        out.A = sys_.A;
        out.B = sys_.B.rightCols(m);
        out.C = sys_.C.bottomRows(p);
        out.D = sys_.D.bottomRightCorner(p, m);
        return out;
    }
    Eigen::MatrixXd Delta = delta_.assemble_real(values);
    // w_d = Delta z_d, z_d = C1 x + D11 w_d + D12 [w;u]
    Eigen::MatrixXd D11 = sys_.D.topLeftCorner(n_zd(), nd);
    Eigen::MatrixXd rhs(nd, states() + m);
    rhs << C_delta(), sys_.D.topRightCorner(n_zd(), m);
    const Eigen::MatrixXd gd = Delta * D11;
    const Eigen::MatrixXd gr = Delta * rhs;
    Eigen::MatrixXd w_sol = closure_solve(gd, gr, "eval_at");
    Eigen::MatrixXd Wx = w_sol.leftCols(states());
    Eigen::MatrixXd Wu = w_sol.rightCols(m);
    Eigen::MatrixXd B1 = B_delta();
    Eigen::MatrixXd D21 = sys_.D.bottomLeftCorner(p, nd);
    out.A = sys_.A + B1 * Wx;
    out.B = sys_.B.rightCols(m) + B1 * Wu;
    out.C = sys_.C.bottomRows(p) + D21 * Wx;
    out.D = sys_.D.bottomRightCorner(p, m) + D21 * Wu;
    return out;
}

Eigen::MatrixXcd UncertainStateSpace::uncertainty_transfer(double omega, bool with_perf) const {
    using cd = std::complex<double>;
    const int nd = n_wd();
    const int rows = with_perf ? n_zd() + ch_.n_z : n_zd();
    const int cols = with_perf ? nd + ch_.n_w : nd;
    const Eigen::Index n = states();
    Eigen::MatrixXcd Dz = sys_.D.topLeftCorner(rows, cols).cast<cd>();
    if (n == 0) return Dz;
    cd s = is_discrete() ? std::polar(1.0, omega * *sys_.Ts) : cd(0.0, omega);
    Eigen::MatrixXcd resolvent = (s * Eigen::MatrixXcd::Identity(n, n) - sys_.A.cast<cd>())
                                     .partialPivLu()
                                     .solve(sys_.B.leftCols(cols).cast<cd>());
    return Dz + sys_.C.topRows(rows).cast<cd>() * resolvent;
}

UncertainStateSpace UncertainStateSpace::scale_uncertainty(double k) const {
    return scale_uncertainty(std::vector<double>(delta_.size(), k));
}

UncertainStateSpace UncertainStateSpace::scale_uncertainty(
    const std::vector<double>& per_block) const {
    if (static_cast<int>(per_block.size()) != delta_.size())
        throw ModelError("scale_uncertainty: one factor per block required");
    // Delta ranging over radius k is replaced by k * Delta', Delta' in the
    // unit ball; the factor is absorbed into the w_delta columns.
    StateSpaceModel sys = sys_;
    for (int i = 0; i < delta_.size(); ++i) {
        const auto& b = delta_.blocks()[i];
        const int off = delta_.row_offset(i);
        sys.B.middleCols(off, b.rows) *= per_block[i];
        sys.D.middleCols(off, b.rows) *= per_block[i];
    }
    return UncertainStateSpace(std::move(sys), delta_, ch_);
}

UncertainStateSpace UncertainStateSpace::recenter(const std::vector<std::string>& params,
                                                  const std::vector<double>& centers,
                                                  const std::vector<double>& radii) const {
    if (params.size() != centers.size() || params.size() != radii.size())
        throw ModelError("recenter: params/centers/radii size mismatch");
    const int nd = n_wd();
    Eigen::VectorXd c = Eigen::VectorXd::Zero(nd);
    Eigen::VectorXd rho = Eigen::VectorXd::Ones(nd);
    for (size_t k = 0; k < params.size(); ++k) {
        bool found = false;
        for (int i = 0; i < delta_.size(); ++i) {
            const auto& b = delta_.blocks()[i];
            if (b.param != params[k]) continue;
            if (b.kind != BlockKind::RealRepeatedScalar)
                throw ModelError("recenter: block '" + b.name + "' is not a real scalar");
            c.segment(delta_.row_offset(i), b.rows).setConstant(centers[k]);
            rho.segment(delta_.row_offset(i), b.rows).setConstant(radii[k]);
            found = true;
        }
        if (!found) throw ModelError("recenter: no block with param '" + params[k] + "'");
    }
    // w = (C + P Delta') z: close the constant part C through the loop.
    Eigen::MatrixXd D11 = sys_.D.topLeftCorner(n_zd(), nd);
    Eigen::MatrixXd Cd = c.asDiagonal();
    Eigen::MatrixXd P = rho.asDiagonal();
    const int m = ch_.n_w + ch_.n_u;
    const int p = ch_.n_z + ch_.n_y;
    // (I - D11 C)^-1 applied to [D11*P | C1 | D12]
    Eigen::MatrixXd rhs(n_zd(), nd + states() + m);
    rhs << D11 * P, C_delta(), sys_.D.topRightCorner(n_zd(), m);
    Eigen::MatrixXd sol = closure_solve(D11 * Cd, rhs, "recenter");
    Eigen::MatrixXd D11n = sol.leftCols(nd);
    Eigen::MatrixXd C1n = sol.middleCols(nd, states());
    Eigen::MatrixXd D12n = sol.rightCols(m);
    // w_delta = C z + P w': feed the closed z back through B1/D21.
    Eigen::MatrixXd B1 = B_delta();
    Eigen::MatrixXd D21 = sys_.D.bottomLeftCorner(p, nd);
    StateSpaceModel sys;
    sys.Ts = sys_.Ts;
    sys.A = sys_.A + B1 * Cd * C1n;
    sys.B.resize(states(), nd + m);
    sys.B << B1 * (Cd * D11n + P), sys_.B.rightCols(m) + B1 * Cd * D12n;
    sys.C.resize(n_zd() + p, states());
    sys.C << C1n, sys_.C.bottomRows(p) + D21 * Cd * C1n;
    sys.D.resize(n_zd() + p, nd + m);
    sys.D << D11n, D12n, D21 * (Cd * D11n + P),
        sys_.D.bottomRightCorner(p, m) + D21 * Cd * D12n;
    return UncertainStateSpace(std::move(sys), delta_, ch_);
}

UncertainStateSpace UncertainStateSpace::recenter(const ParameterBox& box) const {
    std::vector<std::string> names;
    std::vector<double> c, r;
    auto ctr = box.center();
    auto rad = box.radii();
    for (int i = 0; i < box.size(); ++i) {
        names.push_back(box.params()[i].name);
        c.push_back(ctr[i]);
        r.push_back(rad[i]);
    }
    return recenter(names, c, r);
}

UncertainStateSpace UncertainStateSpace::reorder_blocks(const std::vector<int>& perm) const {
    if (static_cast<int>(perm.size()) != delta_.size())
        throw ModelError("reorder_blocks: permutation size mismatch");
    std::vector<BlockSpec> blocks;
    blocks.reserve(perm.size());
    std::set<int> seen;
    for (int i : perm) {
        if (i < 0 || i >= delta_.size() || !seen.insert(i).second)
            throw ModelError("reorder_blocks: invalid permutation");
        blocks.push_back(delta_.blocks()[i]);
    }
    const int m = ch_.n_w + ch_.n_u;
    const int p = ch_.n_z + ch_.n_y;
    StateSpaceModel sys;
    sys.Ts = sys_.Ts;
    sys.A = sys_.A;
    sys.B.resize(states(), sys_.inputs());
    sys.C.resize(sys_.outputs(), states());
    sys.D.resize(sys_.outputs(), sys_.inputs());
    int rc = 0, cc = 0;
    std::vector<int> col_src, row_src;
    for (int i : perm) {
        const auto& b = delta_.blocks()[i];
        for (int k = 0; k < b.rows; ++k) col_src.push_back(delta_.row_offset(i) + k);
        for (int k = 0; k < b.cols; ++k) row_src.push_back(delta_.col_offset(i) + k);
        rc += b.cols;
        cc += b.rows;
    }
    for (int k = 0; k < ch_.n_w + ch_.n_u; ++k) col_src.push_back(n_wd() + k);
    for (int k = 0; k < p; ++k) row_src.push_back(n_zd() + k);
    (void)m;
    for (size_t j = 0; j < col_src.size(); ++j) sys.B.col(j) = sys_.B.col(col_src[j]);
    for (size_t i = 0; i < row_src.size(); ++i) sys.C.row(i) = sys_.C.row(row_src[i]);
    for (size_t i = 0; i < row_src.size(); ++i)
        for (size_t j = 0; j < col_src.size(); ++j) sys.D(i, j) = sys_.D(row_src[i], col_src[j]);
    return UncertainStateSpace(std::move(sys), BlockStructure(std::move(blocks)), ch_);
}

UncertainStateSpace UncertainStateSpace::drop_blocks(const std::vector<std::string>& names) const {
    std::set<std::string> drop(names.begin(), names.end());
    std::vector<int> keep_cols, keep_rows;
    std::vector<BlockSpec> blocks;
    for (int i = 0; i < delta_.size(); ++i) {
        const auto& b = delta_.blocks()[i];
        if (drop.count(b.name)) continue;
        blocks.push_back(b);
        for (int k = 0; k < b.rows; ++k) keep_cols.push_back(delta_.row_offset(i) + k);
        for (int k = 0; k < b.cols; ++k) keep_rows.push_back(delta_.col_offset(i) + k);
    }
    const int m = ch_.n_w + ch_.n_u;
    const int p = ch_.n_z + ch_.n_y;
    for (int k = 0; k < m; ++k) keep_cols.push_back(n_wd() + k);
    for (int k = 0; k < p; ++k) keep_rows.push_back(n_zd() + k);
    StateSpaceModel sys;
    sys.Ts = sys_.Ts;
    sys.A = sys_.A;
    sys.B.resize(states(), static_cast<int>(keep_cols.size()));
    sys.C.resize(static_cast<int>(keep_rows.size()), states());
    sys.D.resize(static_cast<int>(keep_rows.size()), static_cast<int>(keep_cols.size()));
    for (size_t j = 0; j < keep_cols.size(); ++j) sys.B.col(j) = sys_.B.col(keep_cols[j]);
    for (size_t i = 0; i < keep_rows.size(); ++i) sys.C.row(i) = sys_.C.row(keep_rows[i]);
    for (size_t i = 0; i < keep_rows.size(); ++i)
        for (size_t j = 0; j < keep_cols.size(); ++j)
            sys.D(i, j) = sys_.D(keep_rows[i], keep_cols[j]);
    return UncertainStateSpace(std::move(sys), BlockStructure(std::move(blocks)), ch_);
}

std::string UncertainStateSpace::describe() const {
    std::ostringstream os;
    os << states() << " states, delta = [" << delta_.describe() << "], w/u/z/y = " << ch_.n_w
       << "/" << ch_.n_u << "/" << ch_.n_z << "/" << ch_.n_y;
    if (is_discrete()) os << ", Ts = " << *sys_.Ts;
    return os.str();
}

UncertainStateSpace close_controller(const UncertainStateSpace& plant,
                                     const StateSpaceModel& ctrl, const std::vector<int>& y_idx,
                                     const std::vector<int>& u_idx) {
    if (!plant.is_discrete() || !ctrl.is_discrete())
        throw ModelError("close_controller: both systems must be discrete");
    if (std::abs(*plant.period() - *ctrl.Ts) > 1e-12 * *plant.period())
        throw ModelError("close_controller: period mismatch");
    if (static_cast<int>(y_idx.size()) != ctrl.inputs())
        throw ModelError("close_controller: y selection width != controller inputs");
    if (static_cast<int>(u_idx.size()) != ctrl.outputs())
        throw ModelError("close_controller: u selection width != controller outputs");
    const auto& ch = plant.channels();
    for (int i : y_idx)
        if (i < 0 || i >= ch.n_y) throw ModelError("close_controller: y index out of range");
    for (int i : u_idx)
        if (i < 0 || i >= ch.n_u) throw ModelError("close_controller: u index out of range");

    const int np = plant.states();
    const int nc = ctrl.states();
    const int nd = plant.n_wd();
    const int nzd = plant.n_zd();
    const auto& sys = plant.realization();

    // Column/row selections for consumed and kept channels.
    std::vector<int> u_keep, y_keep;
    {
        std::set<int> used_u(u_idx.begin(), u_idx.end()), used_y(y_idx.begin(), y_idx.end());
        if (static_cast<int>(used_u.size()) != static_cast<int>(u_idx.size()))
            throw ModelError("close_controller: duplicate u index");
        if (static_cast<int>(used_y.size()) != static_cast<int>(y_idx.size()))
            throw ModelError("close_controller: duplicate y index");
        for (int i = 0; i < ch.n_u; ++i)
            if (!used_u.count(i)) u_keep.push_back(i);
        for (int i = 0; i < ch.n_y; ++i)
            if (!used_y.count(i)) y_keep.push_back(i);
    }
    auto ucol = [&](int i) { return nd + ch.n_w + i; };
    auto yrow = [&](int i) { return nzd + ch.n_z + i; };

    Eigen::MatrixXd Bu_sel(np, u_idx.size());
    for (size_t j = 0; j < u_idx.size(); ++j) Bu_sel.col(j) = sys.B.col(ucol(u_idx[j]));
    Eigen::MatrixXd Cy_sel(y_idx.size(), np);
    Eigen::MatrixXd Dy_sel(y_idx.size(), sys.inputs());
    for (size_t i = 0; i < y_idx.size(); ++i) {
        Cy_sel.row(i) = sys.C.row(yrow(y_idx[i]));
        Dy_sel.row(i) = sys.D.row(yrow(y_idx[i]));
    }
    Eigen::MatrixXd Dyu_sel(y_idx.size(), u_idx.size());
    for (size_t i = 0; i < y_idx.size(); ++i)
        for (size_t j = 0; j < u_idx.size(); ++j)
            Dyu_sel(i, j) = sys.D(yrow(y_idx[i]), ucol(u_idx[j]));

    // Static loop: u_sel = Cc xc + Dc y_sel, y_sel = (...) + Dyu_sel u_sel.
    // Solve y_sel = (I - Dyu_sel Dc)^-1 [plant terms + Dyu_sel Cc xc].
    const int ny_s = static_cast<int>(y_idx.size());
    Eigen::MatrixXd loop = Dyu_sel * ctrl.D;
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(ny_s, ny_s) - loop;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);
    if (lu.rcond() < kWellPosedRcond)
        throw IllPosedError("close_controller: algebraic loop (I - D_yu*D_c) is singular");

    // y_sel as a function of [x_p; x_c; w_d; w; u_keep].
    const int n_in_keep = nd + ch.n_w + static_cast<int>(u_keep.size());
    Eigen::MatrixXd R(ny_s, np + nc + n_in_keep);
    R.setZero();
    R.middleCols(0, np) = Cy_sel;
    R.middleCols(np, nc) = Dyu_sel * ctrl.C;
    R.middleCols(np + nc, nd + ch.n_w) = Dy_sel.leftCols(nd + ch.n_w);
    for (size_t j = 0; j < u_keep.size(); ++j)
        R.col(np + nc + nd + ch.n_w + j) = Dy_sel.col(ucol(u_keep[j]));
    Eigen::MatrixXd Ysel = lu.solve(R);

    // u_sel = Cc xc + Dc y_sel.
    Eigen::MatrixXd Usel = ctrl.D * Ysel;
    Usel.middleCols(np, nc) += ctrl.C;

    // Assemble closed realization over states [x_p; x_c].
    const int n = np + nc;
    StateSpaceModel out;
    out.Ts = plant.period();
    out.A.setZero(n, n);
    out.B.setZero(n, n_in_keep);
    // Plant rows: xp+ = A xp + B [w_d; w] + Bu_keep u_keep + Bu_sel u_sel.
    Eigen::MatrixXd Prow(np, np + nc + n_in_keep);
    Prow.setZero();
    Prow.leftCols(np) = sys.A;
    Prow.middleCols(np + nc, nd + ch.n_w) = sys.B.leftCols(nd + ch.n_w);
    for (size_t j = 0; j < u_keep.size(); ++j)
        Prow.col(np + nc + nd + ch.n_w + j) = sys.B.col(ucol(u_keep[j]));
    Prow += Bu_sel * Usel;
    out.A.topRows(np) = Prow.leftCols(np + nc);
    out.B.topRows(np) = Prow.rightCols(n_in_keep);
    // Controller rows: xc+ = Ac xc + Bc y_sel.
    Eigen::MatrixXd Crow = ctrl.B * Ysel;
    Crow.middleCols(np, nc) += ctrl.A;
    out.A.bottomRows(nc) = Crow.leftCols(np + nc);
    out.B.bottomRows(nc) = Crow.rightCols(n_in_keep);

    // Output rows: [z_d; z; y_keep].
    const int n_out_keep = nzd + ch.n_z + static_cast<int>(y_keep.size());
    out.C.setZero(n_out_keep, n);
    out.D.setZero(n_out_keep, n_in_keep);
    std::vector<int> out_rows;
    for (int i = 0; i < nzd + ch.n_z; ++i) out_rows.push_back(i);
    for (int i : y_keep) out_rows.push_back(yrow(i));
    for (size_t i = 0; i < out_rows.size(); ++i) {
        Eigen::MatrixXd row(1, np + nc + n_in_keep);
        row.setZero();
        row.leftCols(np) = sys.C.row(out_rows[i]);
        row.middleCols(np + nc, nd + ch.n_w) = sys.D.row(out_rows[i]).leftCols(nd + ch.n_w);
        for (size_t j = 0; j < u_keep.size(); ++j)
            row(0, np + nc + nd + ch.n_w + j) = sys.D(out_rows[i], ucol(u_keep[j]));
        Eigen::MatrixXd du(1, u_idx.size());
        for (size_t j = 0; j < u_idx.size(); ++j) du(0, j) = sys.D(out_rows[i], ucol(u_idx[j]));
        row += du * Usel;
        out.C.row(i) = row.leftCols(np + nc);
        out.D.row(i) = row.rightCols(n_in_keep);
    }

    ChannelMap new_ch;
    new_ch.n_w = ch.n_w;
    new_ch.n_u = static_cast<int>(u_keep.size());
    new_ch.n_z = ch.n_z;
    new_ch.n_y = static_cast<int>(y_keep.size());
    return UncertainStateSpace(std::move(out), plant.delta(), new_ch);
}

UncertainStateSpace realize_affine(const StateSpaceModel& nominal,
                                   const std::vector<std::string>& param_names,
                                   const std::vector<StateSpaceModel>& coeffs,
                                   const ParameterBox& box, const ChannelMap& channels) {
    if (param_names.size() != coeffs.size())
        throw ModelError("realize_affine: one coefficient system per parameter");
    const int n = nominal.states();
    const int m = nominal.inputs();
    const int p = nominal.outputs();
    if (channels.n_w + channels.n_u != m || channels.n_z + channels.n_y != p)
        throw ModelError("realize_affine: channel map does not cover nominal I/O");

    // Factor each coefficient block S_i = [Ai Bi; Ci Di] = L_i * R_i with
    // rank r_i; parameter i then enters as L_i (delta_i I_{r_i}) R_i.
    std::vector<Eigen::MatrixXd> Ls, Rs;
    std::vector<BlockSpec> blocks;
    for (size_t k = 0; k < coeffs.size(); ++k) {
        const auto& S = coeffs[k];
        if (S.states() != n || S.inputs() != m || S.outputs() != p)
            throw ModelError("realize_affine: coefficient dims mismatch for '" + param_names[k] +
                             "'");
        Eigen::MatrixXd Sk(n + p, n + m);
        Sk << S.A, S.B, S.C, S.D;
        if (box.index_of(param_names[k]) < 0)
            throw ModelError("realize_affine: parameter '" + param_names[k] + "' not in box");
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Sk, Eigen::ComputeThinU | Eigen::ComputeThinV);
        double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
        int rank = 0;
        for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > 1e-12 * std::max(smax, 1.0)) ++rank;
        if (rank == 0) continue;  // parameter has no effect, dropped
        Eigen::MatrixXd L = svd.matrixU().leftCols(rank);
        Eigen::MatrixXd Rm = svd.singularValues().head(rank).asDiagonal() *
                             svd.matrixV().leftCols(rank).transpose();
        Ls.push_back(L);
        Rs.push_back(Rm);
        blocks.push_back(BlockSpec::real_scalar(param_names[k], rank));
    }

    int nd = 0;
    for (const auto& b : blocks) nd += b.rows;
    StateSpaceModel sys;
    sys.Ts = nominal.Ts;
    sys.A = nominal.A;
    sys.B.resize(n, nd + m);
    sys.C.resize(nd + p, n);
    sys.D.setZero(nd + p, nd + m);
    int off = 0;
    for (size_t k = 0; k < Ls.size(); ++k) {
        const int r = static_cast<int>(Ls[k].cols());
        // w_k enters through the row part of L, z_k reads the column part of R.
        sys.B.middleCols(off, r) = Ls[k].topRows(n);
        sys.C.middleRows(off, r) = Rs[k].leftCols(n);
        sys.D.block(off, nd, r, m) = Rs[k].rightCols(m);
        sys.D.block(nd, off, p, r) = Ls[k].bottomRows(p);
        off += r;
    }
    sys.B.rightCols(m) = nominal.B;
    sys.C.bottomRows(p) = nominal.C;
    sys.D.bottomRightCorner(p, m) = nominal.D;
    return UncertainStateSpace(std::move(sys), BlockStructure(std::move(blocks)), channels);
}

DeltaValues bind_box_values(const ParameterBox& box, const std::vector<double>& x) {
    if (x.size() != static_cast<size_t>(box.size()))
        throw ModelError("bind_box_values: coordinate count mismatch");
    DeltaValues v;
    for (int i = 0; i < box.size(); ++i) v.scalars[box.params()[i].name] = x[i];
    return v;
}

}  // namespace mrlft
