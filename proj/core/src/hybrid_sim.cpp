#include "mrlft/hybrid_sim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "mrlft/discretization.hpp"
#include "mrlft/errors.hpp"

namespace mrlft {
namespace {

void append_signal(SimTrace& tr, const std::string& name, int rows, int cols) {
    tr.signals[name] = Eigen::MatrixXd::Zero(rows, cols);
}

}  // namespace

SimTrace simulate_hybrid(const StateSpaceModel& plant, const MultirateController& ctrl,
                         const Eigen::MatrixXd& w_profile, double horizon,
                         const HybridSimOptions& opts) {
    if (plant.is_discrete()) throw ModelError("hybrid simulation needs a continuous plant");
    const int n_u = static_cast<int>(ctrl.l_sigma.rows());
    const int n_w = plant.inputs() - n_u;
    if (n_w < 0) throw ModelError("plant inputs narrower than the routing gain");

    int p = 0;
    for (const auto& l : ctrl.loops) p += static_cast<int>(l.y_indices.size());
    const int n_z = plant.outputs() - p;
    if (n_z < 0) throw ModelError("loop measurements exceed plant outputs");
    ctrl.validate(p, n_u);

    const double t1 = ctrl.fastest_period();
    const double tr = ctrl.slowest_period();
    const int steps = static_cast<int>(std::lround(horizon / t1));
    if (std::abs(steps * t1 - horizon) > 1e-9 * std::max(horizon, t1) ||
        std::abs(std::lround(horizon / tr) * tr - horizon) > 1e-9 * std::max(horizon, tr))
        throw ModelError("horizon must be a multiple of the slowest period");
    const int wstride = static_cast<int>(std::lround(tr / t1));
    if (w_profile.cols() != n_w || w_profile.rows() * wstride < steps)
        throw ModelError("input profile must hold one w row per slowest period");

    // Algebraic loop guard: sampled outputs must not feed through from u.
    if (p > 0 && n_u > 0 &&
        plant.D.bottomRightCorner(p, n_u).cwiseAbs().maxCoeff() >
            1e-14 * (1.0 + plant.D.cwiseAbs().maxCoeff()))
        throw ModelError("direct feedthrough from commands to sampled outputs creates an "
                         "algebraic loop at the sampling instants");

    const int refine = std::max(1, opts.grid_refine);
    const StateSpaceModel pd = zoh_exact(plant, t1 / refine);

    const int r = ctrl.rate_count();
    std::vector<int> stride(r);
    for (int i = 0; i < r; ++i) stride[i] = static_cast<int>(std::lround(ctrl.loops[i].period / t1));
    std::vector<Eigen::VectorXd> xc(r), v_held(r), v_next(r);
    for (int i = 0; i < r; ++i) {
        xc[i] = Eigen::VectorXd::Zero(ctrl.loops[i].controller.states());
        v_held[i] = Eigen::VectorXd::Zero(ctrl.loops[i].command_width());
        v_next[i] = v_held[i];
    }

    SimTrace tr_out;
    tr_out.dt = t1;
    tr_out.time.resize(steps + 1);
    append_signal(tr_out, "states", steps + 1, plant.states());
    append_signal(tr_out, "u", steps + 1, n_u);
    append_signal(tr_out, "v", steps + 1, ctrl.total_command_width());
    append_signal(tr_out, "y", steps + 1, p);
    append_signal(tr_out, "z", steps + 1, n_z);
    append_signal(tr_out, "w", steps + 1, n_w);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(plant.states());
    for (int k = 0; k <= steps; ++k) {
        const int wrow = std::min<int>(k / wstride, static_cast<int>(w_profile.rows()) - 1);
        const Eigen::VectorXd wk = w_profile.row(wrow).transpose();

        // Sampled measurements; independent of u by the guard above.
        Eigen::VectorXd u_pre(n_u);
        {
            int off = 0;
            Eigen::VectorXd vstack(ctrl.total_command_width());
            for (int i = 0; i < r; ++i) {
                vstack.segment(off, v_held[i].size()) = v_held[i];
                off += static_cast<int>(v_held[i].size());
            }
            u_pre = ctrl.l_sigma * vstack;
        }
        Eigen::VectorXd uin(plant.inputs());
        uin << wk, u_pre;
        const Eigen::VectorXd y_full = plant.C * x + plant.D * uin;

        for (int i = 0; i < r; ++i) {
            if (k % stride[i] != 0) continue;
            const auto& loop = ctrl.loops[i];
            Eigen::VectorXd yi(loop.y_indices.size());
            for (size_t j = 0; j < loop.y_indices.size(); ++j)
                yi(j) = y_full(n_z + loop.y_indices[j]);
            const Eigen::VectorXd vi =
                loop.controller.C * xc[i] + loop.controller.D * yi;
            xc[i] = loop.controller.A * xc[i] + loop.controller.B * yi;
            if (opts.one_step_delay) {
                v_held[i] = v_next[i];
                v_next[i] = vi;
            } else {
                v_held[i] = vi;
            }
        }

        Eigen::VectorXd vstack(ctrl.total_command_width());
        {
            int off = 0;
            for (int i = 0; i < r; ++i) {
                vstack.segment(off, v_held[i].size()) = v_held[i];
                off += static_cast<int>(v_held[i].size());
            }
        }
        const Eigen::VectorXd u = ctrl.l_sigma * vstack;
        Eigen::VectorXd uin_post(plant.inputs());
        uin_post << wk, u;
        const Eigen::VectorXd out_post = plant.C * x + plant.D * uin_post;

        tr_out.time[k] = k * t1;
        tr_out.signals["states"].row(k) = x.transpose();
        tr_out.signals["u"].row(k) = u.transpose();
        tr_out.signals["v"].row(k) = vstack.transpose();
        tr_out.signals["y"].row(k) = out_post.tail(p).transpose();
        tr_out.signals["z"].row(k) = out_post.head(n_z).transpose();
        tr_out.signals["w"].row(k) = wk.transpose();

        if (k < steps)
            for (int s = 0; s < refine; ++s) x = pd.A * x + pd.B * uin_post;
    }
    return tr_out;
}

SimTrace simulate_discrete_lft(const UncertainStateSpace& sys, const DeltaValues& values,
                               const Eigen::MatrixXd& w_seq, int steps) {
    if (!sys.is_discrete()) throw ModelError("discrete simulation needs a discrete system");
    const StateSpaceModel m = sys.eval_at(values);
    if (w_seq.cols() != m.inputs())
        throw ModelError("input sequence width must match the instantiated model");
    if (w_seq.rows() < steps) throw ModelError("input sequence shorter than the horizon");

    const int nz = sys.channels().n_z;
    SimTrace tr;
    tr.dt = *sys.period();
    tr.time.resize(steps + 1);
    tr.signals["states"] = Eigen::MatrixXd::Zero(steps + 1, m.states());
    tr.signals["z"] = Eigen::MatrixXd::Zero(steps + 1, nz);
    tr.signals["y"] = Eigen::MatrixXd::Zero(steps + 1, m.outputs() - nz);
    tr.signals["w"] = Eigen::MatrixXd::Zero(steps + 1, m.inputs());

    Eigen::VectorXd x = Eigen::VectorXd::Zero(m.states());
    for (int k = 0; k <= steps; ++k) {
        const int row = std::min(k, static_cast<int>(w_seq.rows()) - 1);
        const Eigen::VectorXd wk = w_seq.row(row).transpose();
        const Eigen::VectorXd out = m.C * x + m.D * wk;
        tr.time[k] = k * tr.dt;
        tr.signals["states"].row(k) = x.transpose();
        tr.signals["z"].row(k) = out.head(nz).transpose();
        tr.signals["y"].row(k) = out.tail(m.outputs() - nz).transpose();
        tr.signals["w"].row(k) = wk.transpose();
        if (k < steps) x = m.A * x + m.B * wk;
    }
    return tr;
}

void export_csv(const SimTrace& trace, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ModelError("cannot open trace output file: " + path);
    f << "t";
    for (const auto& [name, sig] : trace.signals)
        for (int j = 0; j < sig.cols(); ++j) f << "," << name << "_" << j;
    f << "\n";
    char buf[32];
    for (size_t k = 0; k < trace.time.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", trace.time[k]);
        f << buf;
        for (const auto& [name, sig] : trace.signals) {
            for (int j = 0; j < sig.cols(); ++j) {
                std::snprintf(buf, sizeof buf, "%.17g", sig(static_cast<int>(k), j));
                f << "," << buf;
            }
        }
        f << "\n";
    }
}

}  // namespace mrlft
