#include "mrlft/satellite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "mrlft/discretization.hpp"
#include "mrlft/errors.hpp"

namespace mrlft {
namespace {

using json = nlohmann::ordered_json;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Physical {
    double j, a, om, xi, tau;
};

double delta_of(const DeltaValues& v, const char* name) {
    auto it = v.scalars.find(name);
    return it == v.scalars.end() ? 0.0 : it->second;
}

Physical physical_point(const SatelliteParams& p, const DeltaValues& v) {
    return Physical{p.inertia * (1.0 + p.rel_inertia * delta_of(v, "dJ")),
                    p.coupling * (1.0 + p.rel_coupling * delta_of(v, "da")),
                    p.mode_freq * (1.0 + p.rel_mode_freq * delta_of(v, "dw")),
                    p.damping * (1.0 + p.rel_damping * delta_of(v, "dx")), p.actuator_tc};
}

std::vector<std::string> error_block_names(const UncertainStateSpace& s) {
    std::vector<std::string> names;
    for (const auto& b : s.delta().blocks())
        if (b.param.rfind("eps", 0) == 0) names.push_back(b.name);
    return names;
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

double rel_dev(double x, double ref) { return std::abs(x - ref) / std::abs(ref); }

}  // namespace

UncertainStateSpace build_plant(const SatelliteParams& p) {
    if (p.inertia <= 0.0 || p.coupling <= 0.0 || p.damping <= 0.0 || p.mode_freq <= 0.0 ||
        p.actuator_tc <= 0.0)
        throw ModelError("satellite parameters must be positive");
    for (double r : {p.rel_inertia, p.rel_coupling, p.rel_mode_freq, p.rel_damping})
        if (r <= 0.0 || r >= 1.0) throw ModelError("relative half-ranges must lie in (0,1)");
    if (p.coupling * (1.0 + p.rel_coupling) >= 1.0)
        throw ModelError("coupling must stay below one over the whole box");

    const double j0 = p.inertia, a0 = p.coupling, om0 = p.mode_freq, xi0 = p.damping;
    const double rj = p.rel_inertia, ra = p.rel_coupling, ro = p.rel_mode_freq,
                 rx = p.rel_damping;
    const double ka = 1.0 / (1.0 - a0);
    const int n = 5, m = 5;

    // States (actuator, flex pos, flex vel, body rate, body angle); channels
    // w = (wJ, wa, wo1, wo2, wx) against z = (zJ, za, zo1, zo2, zx). zJ is
    // torque/J through the reciprocal loop, za the flex acceleration through
    // the 1/(1-alpha) loop, zo1/zo2 the two taps of the factored mode
    // frequency (dw enters twice), zx the damping tap.
    Eigen::MatrixXd c1 = Eigen::MatrixXd::Zero(m, n);
    Eigen::MatrixXd d11 = Eigen::MatrixXd::Zero(m, m);
    c1(0, 0) = 1.0 / j0;
    d11(0, 0) = -rj;
    Eigen::RowVectorXd qs = Eigen::RowVectorXd::Zero(n);  // omega*p1 + 2 xi*p2, state part
    qs(1) = om0;
    qs(2) = 2.0 * xi0;
    Eigen::RowVectorXd qw = Eigen::RowVectorXd::Zero(m);  // same signal, channel part
    qw(2) = om0 * ro;
    qw(4) = 2.0 * xi0 * rx;
    c1.row(1) = ka * (c1.row(0) - om0 * qs);
    d11.row(1) = ka * (d11.row(0) - om0 * qw);
    d11(1, 1) += ka * a0 * ra;
    d11(1, 3) += -ka * om0 * ro;
    c1(2, 1) = 1.0;
    c1.row(3) = qs;
    d11.row(3) = qw;
    c1(4, 2) = 1.0;

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd b1 = Eigen::MatrixXd::Zero(n, m);
    a(0, 0) = -1.0 / p.actuator_tc;
    a(1, 2) = 1.0;
    a.row(2) = c1.row(1);  // flex velocity integrates the flex acceleration
    b1.row(2) = d11.row(1);
    a.row(3) = c1.row(0) + a0 * c1.row(1);  // body rate: rigid part + coupling
    b1.row(3) = d11.row(0) + a0 * d11.row(1);
    b1(3, 1) += a0 * ra;
    a(4, 3) = 1.0;

    StateSpaceModel sys;
    sys.A = a;
    sys.B = Eigen::MatrixXd::Zero(n, m + 2);  // [w_delta | w_p | u]
    sys.B.leftCols(m) = b1;
    sys.B(0, m) = 1.0 / p.actuator_tc;
    sys.B(0, m + 1) = 1.0 / p.actuator_tc;
    sys.C = Eigen::MatrixXd::Zero(m + 3, n);  // [z_delta | z | y]
    sys.C.topRows(m) = c1;
    sys.C(m, 3) = 1.0;      // z: body rate
    sys.C(m + 1, 3) = 1.0;  // y: body rate
    sys.C(m + 2, 4) = 1.0;  // y: body angle
    sys.D = Eigen::MatrixXd::Zero(m + 3, m + 2);
    sys.D.topLeftCorner(m, m) = d11;

    BlockStructure delta({BlockSpec::real_scalar("dJ"), BlockSpec::real_scalar("da"),
                          BlockSpec::real_scalar("dw", 2), BlockSpec::real_scalar("dx")});
    return UncertainStateSpace(std::move(sys), std::move(delta), ChannelMap{1, 1, 1, 2});
}

MultirateController build_controller(const PidParams& c) {
    if (c.kp <= 0.0 || c.ki <= 0.0 || c.kd <= 0.0)
        throw ModelError("PID gains must be positive");
    if (c.t1 <= 0.0 || c.q < 1) throw ModelError("periods need t1 > 0 and integer q >= 1");
    const double t2 = c.q * c.t1;

    StateSpaceModel rate;  // static derivative gain on the body rate
    rate.A = Eigen::MatrixXd::Zero(0, 0);
    rate.B = Eigen::MatrixXd::Zero(0, 1);
    rate.C = Eigen::MatrixXd::Zero(1, 0);
    rate.D = Eigen::MatrixXd::Constant(1, 1, c.kd);
    rate.Ts = c.t1;

    StateSpaceModel pi;  // proportional path plus forward-Euler integral path
    pi.A = Eigen::MatrixXd::Ones(1, 1);
    pi.B = Eigen::MatrixXd::Constant(1, 1, t2);
    pi.C = Eigen::MatrixXd::Zero(2, 1);
    pi.C(1, 0) = c.ki;
    pi.D = Eigen::MatrixXd::Zero(2, 1);
    pi.D(0, 0) = c.kp;
    pi.Ts = t2;

    MultirateController ctrl;
    ctrl.loops.push_back(LoopSpec{"rate", std::move(rate), {0}, c.t1});
    ctrl.loops.push_back(LoopSpec{"position", std::move(pi), {1}, t2});
    ctrl.l_sigma = Eigen::MatrixXd::Constant(1, 3, -1.0);
    return ctrl;
}

StateSpaceModel continuous_closed_loop(const SatelliteParams& p, const PidParams& c,
                                       const DeltaValues& values) {
    const StateSpaceModel g = build_plant(p).eval_at(values);  // in [wp u], out [v | v th]
    const int n = g.states();
    const Eigen::VectorXd bw = g.B.col(0);
    const Eigen::VectorXd bu = g.B.col(1);
    const Eigen::RowVectorXd cv = g.C.row(1);
    const Eigen::RowVectorXd cth = g.C.row(2);

    StateSpaceModel cl;  // plant states plus one integrator state
    cl.A = Eigen::MatrixXd::Zero(n + 1, n + 1);
    cl.A.topLeftCorner(n, n) = g.A - bu * (c.kd * cv + c.kp * cth);
    cl.A.topRightCorner(n, 1) = -c.ki * bu;
    cl.A.bottomLeftCorner(1, n) = cth;
    cl.B = Eigen::MatrixXd::Zero(n + 1, 1);
    cl.B.topRows(n) = bw;
    cl.C = Eigen::MatrixXd::Zero(2, n + 1);
    cl.C.row(0).head(n) = cv;
    cl.C.row(1).head(n) = cth;
    cl.D = Eigen::MatrixXd::Zero(2, 1);
    return cl;
}

std::complex<double> loop_transfer(const SatelliteParams& p, const PidParams& c, double omega,
                                   const DeltaValues& values) {
    const Physical ph = physical_point(p, values);
    const std::complex<double> s(0.0, omega);
    const std::complex<double> pid = c.kd * s + c.kp + c.ki / s;
    const std::complex<double> flex = s * s + 2.0 * ph.xi * ph.om * s + ph.om * ph.om;
    const std::complex<double> gacc =
        flex / (ph.j * ((1.0 - ph.a) * s * s + 2.0 * ph.xi * ph.om * s + ph.om * ph.om));
    return pid * gacc / (s * s * (ph.tau * s + 1.0));
}

DelayMarginReport delay_margin(const SatelliteParams& p, const PidParams& c,
                               const DeltaValues& values) {
    auto excess = [&](double w) {
        return std::abs(loop_transfer(p, c, w, values)) - 1.0;
    };
    DelayMarginReport rep;
    rep.margin = kInf;
    const int pts = 6000;
    double wl = 1e-3, gl = excess(wl);
    for (int i = 1; i <= pts; ++i) {
        const double w = 1e-3 * std::pow(1e6, static_cast<double>(i) / pts);
        const double gv = excess(w);
        if ((gl <= 0.0) != (gv <= 0.0)) {
            double lo = wl, hi = w;
            for (int it = 0; it < 80; ++it) {
                const double mid = std::sqrt(lo * hi);
                ((excess(mid) <= 0.0) == (gl <= 0.0) ? lo : hi) = mid;
            }
            const double wc = std::sqrt(lo * hi);
            // Extra lag to drag the phase down to 180 degrees.
            double dist = std::arg(loop_transfer(p, c, wc, values)) + M_PI;
            dist = std::fmod(dist, 2.0 * M_PI);
            if (dist < 0.0) dist += 2.0 * M_PI;
            rep.crossings.push_back(CrossoverPoint{wc, dist / wc});
            rep.margin = std::min(rep.margin, dist / wc);
        }
        wl = w;
        gl = gv;
    }
    return rep;
}

CriticalVertex critical_vertex(const SatelliteParams& p, const PidParams& c) {
    const char* names[] = {"dJ", "da", "dw", "dx"};
    CriticalVertex best;
    best.report.margin = kInf;
    for (int mask = 0; mask < 16; ++mask) {
        DeltaValues v;
        for (int i = 0; i < 4; ++i) v.scalars[names[i]] = (mask >> i) & 1 ? 1.0 : -1.0;
        DelayMarginReport r = delay_margin(p, c, v);
        if (r.margin < best.report.margin) {
            best.report = std::move(r);
            best.values = std::move(v);
        }
    }
    return best;
}

PoleReport closed_loop_poles(const SatelliteParams& p, const PidParams& c,
                             const DeltaValues& values) {
    const Eigen::VectorXcd eigs = continuous_closed_loop(p, c, values).A.eigenvalues();
    PoleReport rep;
    for (int i = 0; i < eigs.size(); ++i) rep.poles.push_back(eigs(i));
    // The slowest oscillatory pair dominates the step response; fall back to
    // the slowest pole when nothing oscillates.
    double best = kInf;
    for (const auto& s : rep.poles)
        if (s.imag() > 1e-9 && std::abs(s) < best) {
            best = std::abs(s);
            rep.dominant = s;
        }
    if (!std::isfinite(best)) {
        double re = -kInf;
        for (const auto& s : rep.poles)
            if (s.real() > re) {
                re = s.real();
                rep.dominant = s;
            }
    }
    return rep;
}

std::vector<GateCheck> reconstruction_gates(const SatelliteParams& p, const PidParams& c) {
    std::vector<GateCheck> gates;
    const double wn = std::abs(closed_loop_poles(p, c).dominant);
    gates.push_back(GateCheck{"dominant-mode-frequency", wn, 0.45, 0.55, false});
    const double nom = delay_margin(p, c).margin;
    gates.push_back(GateCheck{"nominal-delay-margin", nom, 0.068, 0.092, false});
    const double crit = critical_vertex(p, c).report.margin;
    gates.push_back(GateCheck{"critical-delay-margin", crit, 0.04, 0.06, false});
    for (auto& g : gates) g.pass = g.value >= g.lo && g.value <= g.hi;
    return gates;
}

BenchmarkReport reproduce_tables(const SatelliteParams& p, const PidParams& c,
                                 const ReproduceOptions& opts) {
    using clock = std::chrono::steady_clock;
    BenchmarkReport rep;
    rep.gates = reconstruction_gates(p, c);
    rep.gates_pass = std::all_of(rep.gates.begin(), rep.gates.end(),
                                 [](const GateCheck& g) { return g.pass; });

    const UncertainStateSpace plant = build_plant(p);
    const MultirateController ctrl = build_controller(c);

    AssemblyResult r1 = assemble(plant, ctrl, 1, c.t1);
    AssemblyResult r2 = assemble(plant, ctrl, 2, c.t1);

    // A mode subset restricts the run to the matching gain rows only.
    const bool gains_only = !opts.modes.empty();

    if (!gains_only) for (int order : {1, 2}) {
        const AssemblyResult& ar = order == 1 ? r1 : r2;
        StructureRow row;
        row.order = order;
        row.delta = ar.sys.delta().describe();
        for (const auto& b : ar.sys.delta().blocks()) {
            if (b.param == "dJ") ++row.plant_copies;
            if (b.param.rfind("eps", 0) == 0) {
                row.eps_rows += b.rows;
                row.eps_cols += b.cols;
            }
        }
        row.bound = ar.error_report.bound;
        row.reference = order == 1 ? 0.15 : 0.0012;
        row.certified = ar.error_report.certified;
        rep.structures.push_back(row);
    }

    AnalysisOptions ao;
    ao.threshold = opts.threshold;
    ao.freq_points = opts.freq_points;
    ao.jobs = opts.jobs;
    ao.seed = opts.seed;
    ao.max_seconds = 540.0;
    ao.peak_candidates = 6;
    ao.mu.restarts = 4;

    struct MarginJob {
        const char* label;
        UncertainStateSpace model;
        double ref_lo, ref_hi;
        bool err;
    };
    std::vector<MarginJob> mjobs;
    if (!gains_only) {
    mjobs.push_back({"rational-1", r1.sys.drop_blocks(error_block_names(r1.sys)), 0.79, 0.83,
                     false});
    mjobs.push_back({"rational-1-with-error", r1.sys, 2.31, 2.43, true});
    mjobs.push_back({"rational-2", r2.sys.drop_blocks(error_block_names(r2.sys)), 0.80, 0.84,
                     false});
    mjobs.push_back({"rational-2-with-error", r2.sys, 0.82, 0.86, true});
    mjobs.push_back({"full-zoh",
                     assemble(plant, ctrl, 1, c.t1, DiscretizationMethod::FullZoh).sys, 2.41,
                     2.53, false});
    mjobs.push_back({"tustin",
                     assemble(plant, ctrl, 1, c.t1, DiscretizationMethod::Tustin).sys, 0.30,
                     0.31, false});
    }
    for (const auto& job : mjobs) {
        const auto t0 = clock::now();
        const AnalysisResult res = robust_stability_margin(job.model, ao);
        MarginRow row;
        row.label = job.label;
        row.error_channels = job.err;
        row.margin_lower = res.lower;
        row.margin_upper = res.upper;
        row.mu_upper = res.lower > 0.0 ? 1.0 / res.lower : kInf;
        row.mu_lower = std::isfinite(res.upper) && res.upper > 0.0 ? 1.0 / res.upper : 0.0;
        row.ref_lower = job.ref_lo;
        row.ref_upper = job.ref_hi;
        row.seconds = std::chrono::duration<double>(clock::now() - t0).count();
        rep.margins.push_back(row);
    }

    const bool want_mr =
        opts.modes.empty() ||
        std::find(opts.modes.begin(), opts.modes.end(), "MR") != opts.modes.end();
    const bool want_sr =
        opts.modes.empty() ||
        std::find(opts.modes.begin(), opts.modes.end(), "SR-HF") != opts.modes.end();
    if (!opts.skip_gains && (want_mr || want_sr)) {
        AnalysisOptions go = ao;
        go.max_seconds = 1100.0;
        struct GainJob {
            const char* label;
            UncertainStateSpace model;
            double ref_lo, ref_hi;
            bool err;
        };
        std::vector<GainJob> gjobs;
        if (want_mr) {
            gjobs.push_back({"mr", r2.sys.drop_blocks(error_block_names(r2.sys)), 6.71, 6.91,
                             false});
            gjobs.push_back({"mr-with-error", r2.sys, 7.12, 8.55, true});
        }
        if (want_sr) {
            PidParams chf = c;
            chf.q = 1;  // both loops at the fast period
            AssemblyResult sr = assemble(plant, build_controller(chf), 2, c.t1);
            gjobs.push_back({"sr-hf", sr.sys.drop_blocks(error_block_names(sr.sys)), 10.48,
                             11.00, false});
            gjobs.push_back({"sr-hf-with-error", sr.sys, 11.44, 12.01, true});
        }
        for (const auto& job : gjobs) {
            const auto t0 = clock::now();
            const AnalysisResult res = worst_case_hinf(job.model, go);
            GainRow row;
            row.label = job.label;
            row.error_channels = job.err;
            row.lower = res.lower;
            row.upper = res.upper;
            row.ref_lower = job.ref_lo;
            row.ref_upper = job.ref_hi;
            row.seconds = std::chrono::duration<double>(clock::now() - t0).count();
            rep.gains.push_back(row);
        }
    }

    // Named checks mirror the reference values; stability/performance rows
    // are gated only when the reconstruction gates hold.
    struct Check {
        std::string name;
        bool pass = false;
        bool gated = true;
    };
    std::vector<Check> checks;
    for (const auto& s : rep.structures)
        checks.push_back({"structure-order" + std::to_string(s.order),
                          s.plant_copies == 2 * s.order && s.eps_rows == 10 * s.order &&
                              s.eps_cols == 10 * s.order &&
                              rel_dev(s.bound, s.reference) <= 0.20 && s.certified,
                          true});
    auto margin_row = [&](const std::string& label) -> const MarginRow* {
        for (const auto& r : rep.margins)
            if (r.label == label) return &r;
        return nullptr;
    };
    if (const MarginRow* r = margin_row("rational-2-with-error"))
        checks.push_back({"stability-order2-with-error-certifies",
                          r->mu_upper < 1.0 && rel_dev(r->mu_upper, r->ref_upper) <= 0.15 &&
                              rel_dev(r->mu_lower, r->ref_lower) <= 0.15,
                          rep.gates_pass});
    if (const MarginRow* r = margin_row("rational-1-with-error"))
        checks.push_back({"stability-order1-with-error-fails",
                          r->mu_lower > 1.0 && rel_dev(r->mu_lower, r->ref_lower) <= 0.25,
                          rep.gates_pass});
    if (const MarginRow* r = margin_row("full-zoh"))
        checks.push_back({"stability-full-zoh", rel_dev(r->mu_upper, 2.5) <= 0.25,
                          rep.gates_pass});
    if (const MarginRow* r = margin_row("tustin"))
        checks.push_back({"stability-tustin", rel_dev(r->mu_upper, 0.31) <= 0.25,
                          rep.gates_pass});
    const GainRow* mr_row = nullptr;
    const GainRow* sr_row = nullptr;
    for (const auto& r : rep.gains) {
        if (r.label == "mr-with-error") mr_row = &r;
        if (r.label == "sr-hf-with-error") sr_row = &r;
    }
    if (mr_row)
        checks.push_back({"gain-mr",
                          rel_dev(mr_row->lower, mr_row->ref_lower) <= 0.20 &&
                              rel_dev(mr_row->upper, mr_row->ref_upper) <= 0.20,
                          rep.gates_pass});
    if (sr_row)
        checks.push_back({"gain-sr-hf",
                          rel_dev(sr_row->lower, sr_row->ref_lower) <= 0.20 &&
                              rel_dev(sr_row->upper, sr_row->ref_upper) <= 0.20,
                          rep.gates_pass});
    if (mr_row && sr_row)
        checks.push_back({"gain-single-rate-penalty",
                          mr_row->lower > 0.0 && sr_row->lower / mr_row->lower > 1.4,
                          rep.gates_pass});

    json summary;
    summary["suite"] = "satellite";
    summary["gates_pass"] = rep.gates_pass;
    summary["gates"] = json::array();
    for (const auto& g : rep.gates)
        summary["gates"].push_back(
            {{"name", g.name}, {"value", g.value}, {"lo", g.lo}, {"hi", g.hi}, {"pass", g.pass}});
    summary["checks"] = json::array();
    bool all_gated_pass = true;
    for (const auto& chk : checks) {
        summary["checks"].push_back({{"name", chk.name},
                                     {"pass", chk.pass},
                                     {"gated", chk.gated},
                                     {"note", chk.gated ? "" : "reported-not-gated"}});
        if (chk.gated && !chk.pass) all_gated_pass = false;
    }
    summary["pass"] = all_gated_pass;
    rep.pass = all_gated_pass;
    rep.summary_json = summary.dump(2) + "\n";

    if (opts.write_files) {
        namespace fs = std::filesystem;
        fs::create_directories(opts.out_dir);
        if (!rep.structures.empty()) {
            std::ofstream f(opts.out_dir + "/table1.csv");
            f << "order,delta,plant_copies,eps_rows,eps_cols,bound,reference,rel_dev,"
                 "certified\n";
            for (const auto& s : rep.structures)
                f << s.order << ",\"" << s.delta << "\"," << s.plant_copies << "," << s.eps_rows
                  << "," << s.eps_cols << "," << fmt(s.bound) << "," << fmt(s.reference) << ","
                  << fmt(rel_dev(s.bound, s.reference)) << "," << (s.certified ? 1 : 0) << "\n";
        }
        if (!rep.margins.empty()) {
            std::ofstream f(opts.out_dir + "/table2.csv");
            // No timing columns: outputs must be byte-identical across runs.
            f << "label,error_channels,mu_lower,mu_upper,ref_lower,ref_upper,dev_lower,"
                 "dev_upper,margin_lower,margin_upper\n";
            for (const auto& r : rep.margins)
                f << r.label << "," << (r.error_channels ? 1 : 0) << "," << fmt(r.mu_lower)
                  << "," << fmt(r.mu_upper) << "," << fmt(r.ref_lower) << ","
                  << fmt(r.ref_upper) << "," << fmt(rel_dev(r.mu_lower, r.ref_lower)) << ","
                  << fmt(rel_dev(r.mu_upper, r.ref_upper)) << "," << fmt(r.margin_lower) << ","
                  << fmt(r.margin_upper) << "\n";
        }
        if (!rep.gains.empty()) {
            std::ofstream f(opts.out_dir + "/table3.csv");
            f << "label,error_channels,lower,upper,ref_lower,ref_upper,dev_lower,dev_upper\n";
            for (const auto& r : rep.gains)
                f << r.label << "," << (r.error_channels ? 1 : 0) << "," << fmt(r.lower) << ","
                  << fmt(r.upper) << "," << fmt(r.ref_lower) << "," << fmt(r.ref_upper) << ","
                  << fmt(rel_dev(r.lower, r.ref_lower)) << ","
                  << fmt(rel_dev(r.upper, r.ref_upper)) << "\n";
        }
        std::ofstream f(opts.out_dir + "/summary.json");
        f << rep.summary_json;
    }
    return rep;
}

std::map<std::string, SimTrace> reproduce_figures(const SatelliteParams& p, const PidParams& c,
                                                  const ReproduceOptions& opts) {
    const UncertainStateSpace plant = build_plant(p);
    const MultirateController mr = build_controller(c);
    PidParams csr = c;  // classical single-rate comparison: both loops slow
    csr.t1 = c.q * c.t1;
    csr.q = 1;
    const MultirateController sr = build_controller(csr);

    const double horizon = 40.0, step_dur = 5.0;
    const double tslow = c.q * c.t1;
    const int slow_steps = static_cast<int>(std::lround(horizon / tslow));
    Eigen::MatrixXd wprof = Eigen::MatrixXd::Zero(slow_steps + 1, 1);
    for (int k = 0; k <= slow_steps; ++k)
        if (k * tslow < step_dur) wprof(k, 0) = 1.0;

    const UncertainStateSpace ra1 = assemble(plant, mr, 1, c.t1).sys;
    const UncertainStateSpace ra2 = assemble(plant, mr, 2, c.t1).sys;
    const UncertainStateSpace fz =
        assemble(plant, mr, 1, c.t1, DiscretizationMethod::FullZoh).sys;
    const UncertainStateSpace tu =
        assemble(plant, mr, 1, c.t1, DiscretizationMethod::Tustin).sys;

    auto continuous_trace = [&](const DeltaValues& v) {
        const double dt = 0.01;
        const StateSpaceModel md = zoh_exact(continuous_closed_loop(p, c, v), dt);
        const int steps = static_cast<int>(std::lround(horizon / dt));
        SimTrace tr;
        tr.dt = dt;
        tr.time.resize(steps + 1);
        tr.signals["z"] = Eigen::MatrixXd::Zero(steps + 1, 1);
        tr.signals["y"] = Eigen::MatrixXd::Zero(steps + 1, 2);
        tr.signals["w"] = Eigen::MatrixXd::Zero(steps + 1, 1);
        Eigen::VectorXd x = Eigen::VectorXd::Zero(md.states());
        for (int k = 0; k <= steps; ++k) {
            const double w = k * dt < step_dur ? 1.0 : 0.0;
            const Eigen::Vector2d out = md.C * x + md.D * Eigen::VectorXd::Constant(1, w);
            tr.time[k] = k * dt;
            tr.signals["z"](k, 0) = out(0);
            tr.signals["y"].row(k) = out.transpose();
            tr.signals["w"](k, 0) = w;
            if (k < steps) x = md.A * x + md.B * Eigen::VectorXd::Constant(1, w);
        }
        tr.note = "continuous reference";
        return tr;
    };

    std::map<std::string, SimTrace> out;
    const std::pair<std::string, DeltaValues> configs[] = {
        {"nominal", DeltaValues{}}, {"critical", critical_vertex(p, c).values}};
    for (const auto& [cfg, v] : configs) {
        out[cfg + "_continuous"] = continuous_trace(v);
        out[cfg + "_single-rate"] = simulate_hybrid(plant.eval_at(v), sr, wprof, horizon);
        out[cfg + "_multi-rate"] = simulate_hybrid(plant.eval_at(v), mr, wprof, horizon);
        out[cfg + "_rational-1"] = simulate_discrete_lft(ra1, v, wprof, slow_steps);
        out[cfg + "_rational-2"] = simulate_discrete_lft(ra2, v, wprof, slow_steps);
        out[cfg + "_full-zoh"] = simulate_discrete_lft(fz, v, wprof, slow_steps);
        out[cfg + "_tustin"] = simulate_discrete_lft(tu, v, wprof, slow_steps);
    }

    if (opts.write_files) {
        namespace fs = std::filesystem;
        fs::create_directories(opts.out_dir + "/figs");
        for (const auto& [name, tr] : out) export_csv(tr, opts.out_dir + "/figs/" + name + ".csv");
    }
    return out;
}

}  // namespace mrlft
