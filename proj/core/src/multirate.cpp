#include "mrlft/multirate.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include "mrlft/errors.hpp"
#include "mrlft/hybrid_sim.hpp"

namespace mrlft {
namespace {

int integer_ratio(double t_slow, double t_fast, const char* what) {
    const double raw = t_slow / t_fast;
    const int q = static_cast<int>(std::lround(raw));
    if (q < 1 || std::abs(q * t_fast - t_slow) > 1e-9 * t_slow)
        throw ModelError(std::string(what) + ": periods must be integer multiples of the faster one");
    return q;
}

}  // namespace

int MultirateController::total_command_width() const {
    int w = 0;
    for (const auto& l : loops) w += l.command_width();
    return w;
}

double MultirateController::fastest_period() const {
    if (loops.empty()) throw ModelError("controller has no loops");
    return loops.front().period;
}

double MultirateController::slowest_period() const {
    if (loops.empty()) throw ModelError("controller has no loops");
    return loops.back().period;
}

std::vector<int> MultirateController::rate_ratios() const {
    std::vector<int> q;
    for (size_t i = 0; i + 1 < loops.size(); ++i)
        q.push_back(integer_ratio(loops[i + 1].period, loops[i].period, "rate ladder"));
    return q;
}

void MultirateController::validate(int plant_outputs, int plant_inputs) const {
    if (loops.empty()) throw ModelError("controller has no loops");
    std::vector<bool> covered(plant_outputs, false);
    for (const auto& l : loops) {
        if (l.period <= 0.0) throw ModelError("loop period must be positive");
        if (!l.controller.is_discrete() ||
            std::abs(*l.controller.Ts - l.period) > 1e-9 * l.period)
            throw ModelError("loop controller must be discrete at the loop period");
        if (static_cast<int>(l.y_indices.size()) != l.controller.inputs())
            throw ModelError("loop measurement count must match controller inputs");
        for (int idx : l.y_indices) {
            if (idx < 0 || idx >= plant_outputs) throw ModelError("measurement index out of range");
            if (covered[idx]) throw ModelError("measurement partitions must be disjoint");
            covered[idx] = true;
        }
    }
    if (!std::all_of(covered.begin(), covered.end(), [](bool b) { return b; }))
        throw ModelError("measurement partitions must cover every plant output");
    rate_ratios();  // throws on a broken ladder
    if (l_sigma.rows() != plant_inputs || l_sigma.cols() != total_command_width())
        throw ModelError("routing gain must be plant-inputs x total-command-width");
    bool clean = true;
    for (int i = 0; i < l_sigma.rows() && clean; ++i)
        for (int j = 0; j < l_sigma.cols() && clean; ++j) {
            const double v = l_sigma(i, j);
            clean = (v == 0.0 || v == 1.0 || v == -1.0);
        }
    if (!clean)
        std::cerr << "warning: routing gain has entries outside {-1, 0, +1}\n";
}

std::string AssemblyLog::describe() const {
    std::ostringstream os;
    for (const auto& s : steps)
        os << s.action << " | states=" << s.states << " period=" << s.period
           << " delta=[" << s.delta << "]\n";
    return os.str();
}

UncertainStateSpace downsample(const UncertainStateSpace& sys, int q) {
    if (q < 1) throw ModelError("down-sampling factor must be >= 1");
    if (!sys.is_discrete()) throw ModelError("down-sampling needs a discrete system");
    if (q == 1) return sys;

    const int n = sys.states();
    const int mw = sys.n_wd();
    const int mz = sys.n_zd();
    const int nw = sys.channels().n_w;
    const int nu = sys.channels().n_u;
    const int nv = sys.channels().n_z + sys.channels().n_y;
    const int nh = nw + nu;

    Eigen::MatrixXd dv(nv, mw);
    dv << sys.D_block(1, 0), sys.D_block(2, 0);

    const Eigen::MatrixXd a = sys.A();
    const Eigen::MatrixXd b1 = sys.B_delta();
    Eigen::MatrixXd bh(n, nh);
    bh << sys.B_w(), sys.B_u();
    const Eigen::MatrixXd c1 = sys.C_delta();
    const Eigen::MatrixXd d11 = sys.D_block(0, 0);
    Eigen::MatrixXd d1h(mz, nh);
    d1h << sys.D_block(0, 1), sys.D_block(0, 2);

    // Powers A^j and partial geometric sums sum_{i<j} A^i.
    std::vector<Eigen::MatrixXd> pw(q + 1), geo(q + 1);
    pw[0] = Eigen::MatrixXd::Identity(n, n);
    geo[0] = Eigen::MatrixXd::Zero(n, n);
    for (int j = 1; j <= q; ++j) {
        pw[j] = a * pw[j - 1];
        geo[j] = geo[j - 1] + pw[j - 1];
    }

    StateSpaceModel d;
    d.A = pw[q];
    d.B = Eigen::MatrixXd::Zero(n, q * mw + nh);
    d.C = Eigen::MatrixXd::Zero(q * mz + nv, n);
    d.D = Eigen::MatrixXd::Zero(q * mz + nv, q * mw + nh);
    d.Ts = *sys.period() * q;

    for (int i = 0; i < q; ++i) d.B.middleCols(i * mw, mw) = pw[q - 1 - i] * b1;
    d.B.rightCols(nh) = geo[q] * bh;

    // Sub-step j channel reads the state x_{k+j} reached after j steps.
    for (int j = 0; j < q; ++j) {
        d.C.middleRows(j * mz, mz) = c1 * pw[j];
        for (int i = 0; i < j; ++i)
            d.D.block(j * mz, i * mw, mz, mw) = c1 * pw[j - 1 - i] * b1;
        d.D.block(j * mz, j * mw, mz, mw) = d11;
        d.D.block(j * mz, q * mw, mz, nh) = c1 * geo[j] * bh + d1h;
    }

    // Value outputs read the slow instant: state x_{qk} plus that substep's
    // own uncertainty channel (the first copy) and the held inputs.
    d.C.bottomRows(nv) << sys.C_z(), sys.C_y();
    if (mw > 0) d.D.block(q * mz, 0, nv, mw) = dv;
    d.D.bottomRightCorner(nv, nh) << sys.D_block(1, 1), sys.D_block(1, 2),
        sys.D_block(2, 1), sys.D_block(2, 2);

    BlockStructure blocks = sys.delta();
    for (int j = 1; j < q; ++j) blocks = BlockStructure::augment(blocks, sys.delta());

    return UncertainStateSpace(std::move(d), std::move(blocks), sys.channels());
}

AssemblyResult assemble(const UncertainStateSpace& plant, const MultirateController& ctrl,
                        int disc_order, double t1, DiscretizationMethod method,
                        const PadeOptions& pade_opts) {
    if (plant.is_discrete()) throw ModelError("assembly starts from a continuous plant");
    ctrl.validate(plant.channels().n_y, plant.channels().n_u);
    if (std::abs(t1 - ctrl.fastest_period()) > 1e-9 * t1)
        throw ModelError("discretization period must equal the fastest loop period");

    // Route the command vector: u = L_sigma * [v_1; ...; v_r].
    StateSpaceModel r = plant.realization();
    const int mw = plant.n_wd();
    const int nw = plant.channels().n_w;
    Eigen::MatrixXd b(r.states(), mw + nw + ctrl.total_command_width());
    b << r.B.leftCols(mw + nw), plant.B_u() * ctrl.l_sigma;
    Eigen::MatrixXd d(r.C.rows(), b.cols());
    d << r.D.leftCols(mw + nw), r.D.rightCols(plant.channels().n_u) * ctrl.l_sigma;
    r.B = std::move(b);
    r.D = std::move(d);
    ChannelMap ch = plant.channels();
    ch.n_u = ctrl.total_command_width();
    UncertainStateSpace routed(std::move(r), plant.delta(), ch);

    AssemblyResult out{UncertainStateSpace{}, {}, {}};
    switch (method) {
        case DiscretizationMethod::RationalApprox: {
            PadeResult p = pade_discretize(routed, t1, disc_order, pade_opts);
            out.sys = std::move(p.sys);
            out.error_report = p.report;
            break;
        }
        case DiscretizationMethod::Tustin:
            out.sys = tustin_discretize(routed, t1);
            break;
        case DiscretizationMethod::FullZoh:
            out.sys = full_zoh_discretize(routed, t1);
            break;
    }
    auto log_step = [&](const std::string& action) {
        out.log.steps.push_back({action, out.sys.states(), out.sys.period().value_or(0.0),
                                 out.sys.delta().describe()});
    };
    log_step("discretize");

    // Positions of not-yet-consumed plant measurements and command slots.
    std::vector<int> y_map(plant.channels().n_y);
    for (size_t i = 0; i < y_map.size(); ++i) y_map[i] = static_cast<int>(i);
    std::vector<int> slot_offset(ctrl.loops.size());
    {
        int off = 0;
        for (size_t i = 0; i < ctrl.loops.size(); ++i) {
            slot_offset[i] = off;
            off += ctrl.loops[i].command_width();
        }
    }

    auto close_loop = [&](size_t i) {
        const LoopSpec& loop = ctrl.loops[i];
        std::vector<int> y_sel;
        for (int orig : loop.y_indices) {
            auto it = std::find(y_map.begin(), y_map.end(), orig);
            if (it == y_map.end()) throw ModelError("measurement already consumed");
            y_sel.push_back(static_cast<int>(it - y_map.begin()));
        }
        std::vector<int> u_sel(loop.command_width());
        for (int j = 0; j < loop.command_width(); ++j) u_sel[j] = slot_offset[i] + j;
        out.sys = close_controller(out.sys, loop.controller, y_sel, u_sel);
        // Remove consumed channels from the maps.
        std::vector<int> keep;
        for (int orig : y_map)
            if (std::find(loop.y_indices.begin(), loop.y_indices.end(), orig) ==
                loop.y_indices.end())
                keep.push_back(orig);
        y_map = std::move(keep);
        for (size_t j = i + 1; j < ctrl.loops.size(); ++j)
            slot_offset[j] -= loop.command_width();
        log_step("close loop " + (loop.name.empty() ? std::to_string(i + 1) : loop.name));
    };

    close_loop(0);
    const std::vector<int> q = ctrl.rate_ratios();
    for (size_t i = 0; i + 1 < ctrl.loops.size(); ++i) {
        if (q[i] > 1) {
            out.sys = downsample(out.sys, q[i]);
            log_step("downsample x" + std::to_string(q[i]));
        }
        close_loop(i + 1);
    }
    return out;
}

double coverage_check(const UncertainStateSpace& sys_lft, const UncertainStateSpace& plant,
                      const MultirateController& ctrl, const DeltaValues& delta_sample,
                      const Eigen::MatrixXd& input_profile, double horizon) {
    const double tr = ctrl.slowest_period();
    const double t1 = ctrl.fastest_period();
    const int steps = static_cast<int>(std::lround(horizon / tr));
    if (std::abs(steps * tr - horizon) > 1e-9 * std::max(horizon, tr))
        throw ModelError("horizon must be a multiple of the slowest period");
    if (input_profile.rows() < steps)
        throw ModelError("input profile shorter than the horizon");

    StateSpaceModel plant_at = plant.eval_at(delta_sample);
    SimTrace hyb = simulate_hybrid(plant_at, ctrl, input_profile, horizon);
    SimTrace lft = simulate_discrete_lft(sys_lft, delta_sample, input_profile, steps);

    const Eigen::MatrixXd& zh = hyb.signals.at("z");
    const Eigen::MatrixXd& zl = lft.signals.at("z");
    const int stride = integer_ratio(tr, t1, "coverage grid");
    double worst = 0.0;
    for (int k = 0; k <= steps; ++k)
        worst = std::max(worst, (zh.row(k * stride) - zl.row(k)).cwiseAbs().maxCoeff());
    return worst;
}

}  // namespace mrlft
