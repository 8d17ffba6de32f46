#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mrlft/mrlft.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace mrlft;

struct CommonArgs {
    unsigned seed = 99;
    int jobs = 0;
};

void add_common(CLI::App* cmd, CommonArgs* g) {
    cmd->add_option("--seed", g->seed, "seed for randomized internals");
    cmd->add_option("--jobs", g->jobs, "worker threads (0: MRLFT_JOBS or hardware)");
}

const std::map<std::string, DiscretizationMethod>& method_map() {
    static const std::map<std::string, DiscretizationMethod> m{
        {"rational", DiscretizationMethod::RationalApprox},
        {"tustin", DiscretizationMethod::Tustin},
        {"full-zoh", DiscretizationMethod::FullZoh}};
    return m;
}

const char* method_name(DiscretizationMethod m) {
    switch (m) {
        case DiscretizationMethod::RationalApprox: return "rational";
        case DiscretizationMethod::Tustin: return "tustin";
        case DiscretizationMethod::FullZoh: return "full-zoh";
    }
    return "?";
}

const char* bound_method_name(ErrorBoundMethod m) {
    switch (m) {
        case ErrorBoundMethod::VertexApprox: return "vertex-approx";
        case ErrorBoundMethod::GridSampled: return "grid-sampled";
        case ErrorBoundMethod::SeriesTailCertified: return "series-tail-certified";
    }
    return "?";
}

json error_report_json(DiscretizationMethod method, const ErrorBoundReport& rep) {
    json j;
    j["method"] = method_name(method);
    if (method == DiscretizationMethod::RationalApprox) {
        j["order"] = rep.order;
        j["bound"] = rep.bound;
        j["bound_method"] = bound_method_name(rep.method);
        j["certified"] = rep.certified;
        j["truncation_order"] = rep.truncation_order;
        j["tail_bound"] = rep.tail_bound;
        j["vertex_value"] = rep.vertex_value;
    } else {
        j["certified"] = false;
        j["note"] = "no error certificate";
    }
    return j;
}

void print_error_certification(DiscretizationMethod method, const ErrorBoundReport& rep) {
    if (method == DiscretizationMethod::RationalApprox)
        std::printf(
            "certification: discretization-error channels INCLUDED, sigma_max bound %.6g "
            "(%s)\n",
            rep.bound, rep.certified ? "certified" : "not certified");
    else
        std::printf(
            "certification: NONE (no error certificate; model exact only at the nominal "
            "point)\n");
}

DeltaValues parse_delta_spec(const std::string& spec, const UncertainStateSpace& plant) {
    DeltaValues v;
    if (spec.empty() || spec == "0" || spec == "nominal") return v;
    const auto params = plant.delta().scalar_params();
    size_t pos = 0;
    while (pos < spec.size()) {
        size_t end = spec.find(',', pos);
        if (end == std::string::npos) end = spec.size();
        const std::string item = spec.substr(pos, end - pos);
        const size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw ModelError("delta spec entry '" + item + "': expected name=value");
        const std::string name = item.substr(0, eq);
        if (std::find(params.begin(), params.end(), name) == params.end())
            throw ModelError("delta spec names unknown parameter '" + name + "'");
        try {
            v.scalars[name] = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw ModelError("delta spec entry '" + item + "': bad number");
        }
        pos = end + 1;
    }
    return v;
}

// "step:AMP[,DURATION]"; duration defaults to the whole horizon.
std::pair<double, double> parse_disturbance(const std::string& spec, double horizon) {
    const std::string body = spec.substr(5);
    const size_t comma = body.find(',');
    const double amp = std::stod(body.substr(0, comma));
    const double dur = comma == std::string::npos ? horizon : std::stod(body.substr(comma + 1));
    return {amp, dur};
}

std::string check_disturbance(const std::string& spec) {
    if (spec.rfind("step:", 0) != 0) return "disturbance must look like step:AMP[,DURATION]";
    try {
        parse_disturbance(spec, 1.0);
    } catch (const std::exception&) {
        return "disturbance must look like step:AMP[,DURATION]";
    }
    return {};
}

json values_json(const DeltaValues& v) {
    json j = json::object();
    json js = json::object();
    for (const auto& [name, val] : v.scalars) js[name] = val;
    j["scalars"] = std::move(js);
    json jm = json::object();
    for (const auto& [name, mat] : v.matrices)
        jm[name] = mat.jacobiSvd().singularValues()(0);
    j["matrix_norms"] = std::move(jm);
    return j;
}

int cmd_discretize(const std::string& model, double period, int order,
                   DiscretizationMethod method, const std::string& out) {
    ModelDocument doc = load_model(model);
    if (doc.plant.is_discrete()) throw ModelError("plant is already discrete");
    ErrorBoundReport report;
    if (method == DiscretizationMethod::RationalApprox) {
        PadeResult r = pade_discretize(doc.plant, period, order);
        doc.plant = std::move(r.sys);
        report = r.report;
    } else if (method == DiscretizationMethod::Tustin) {
        doc.plant = tustin_discretize(doc.plant, period);
    } else {
        doc.plant = full_zoh_discretize(doc.plant, period);
    }
    std::filesystem::create_directories(out);
    save_model(doc, out + "/discrete_model.json");
    std::ofstream f(out + "/error_report.json");
    f << error_report_json(method, report).dump(2) << "\n";
    std::printf("discretized plant at T = %g s, method %s%s\n", period, method_name(method),
                method == DiscretizationMethod::RationalApprox
                    ? (", order " + std::to_string(order)).c_str()
                    : "");
    std::printf("delta structure: %s\n", doc.plant.delta().describe().c_str());
    print_error_certification(method, report);
    std::printf("wrote %s/discrete_model.json and %s/error_report.json\n", out.c_str(),
                out.c_str());
    return 0;
}

int cmd_assemble(const std::string& model, int order, DiscretizationMethod method,
                 const std::string& out) {
    ModelDocument doc = load_model(model);
    if (doc.plant.is_discrete()) throw ModelError("plant is already discrete; nothing to do");
    if (doc.controller.loops.empty())
        throw ModelError("model has no controller loops to assemble");
    const AssemblyResult ar =
        assemble(doc.plant, doc.controller, order, doc.controller.fastest_period(), method);

    ModelDocument closed;
    closed.plant = ar.sys;
    closed.controller.l_sigma.resize(0, 0);
    closed.io.disturbances = doc.io.disturbances;
    closed.io.performance = doc.io.performance;
    std::filesystem::create_directories(out);
    save_model(closed, out + "/assembled_model.json");

    json steps = json::array();
    for (const auto& st : ar.log.steps)
        steps.push_back(json{{"action", st.action},
                             {"states", st.states},
                             {"period", st.period},
                             {"delta", st.delta}});
    json j;
    j["steps"] = std::move(steps);
    j["error_bound"] = error_report_json(method, ar.error_report);
    std::ofstream f(out + "/assembly_log.json");
    f << j.dump(2) << "\n";

    std::printf("assembled single-rate model at T = %g s, %d states\n",
                *ar.sys.period(), ar.sys.states());
    std::printf("delta structure: %s\n", ar.sys.delta().describe().c_str());
    print_error_certification(method, ar.error_report);
    std::printf("wrote %s/assembled_model.json and %s/assembly_log.json\n", out.c_str(),
                out.c_str());
    return 0;
}

int cmd_simulate(const std::string& model, const std::string& delta_spec, double horizon,
                 const std::string& dist_spec, const std::string& out) {
    ModelDocument doc = load_model(model);
    const DeltaValues v = parse_delta_spec(delta_spec, doc.plant);
    const auto [amp, dur] = parse_disturbance(dist_spec, horizon);
    const int n_w = doc.plant.channels().n_w;

    SimTrace tr;
    if (doc.plant.is_discrete()) {
        if (!doc.controller.loops.empty())
            throw ModelError("discrete plant with open loops: assemble before simulating");
        const double ts = *doc.plant.period();
        const int steps = static_cast<int>(std::llround(horizon / ts));
        if (steps <= 0) throw ModelError("horizon shorter than one period");
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(steps + 1, n_w);
        for (int k = 0; k <= steps; ++k)
            if (k * ts < dur) w.row(k).setConstant(amp);
        tr = simulate_discrete_lft(doc.plant, v, w, steps);
    } else {
        if (doc.controller.loops.empty())
            throw ModelError("continuous plant needs controller loops for hybrid simulation");
        const double tslow = doc.controller.slowest_period();
        const int rows = static_cast<int>(std::llround(horizon / tslow));
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(rows + 1, n_w);
        for (int k = 0; k <= rows; ++k)
            if (k * tslow < dur) w.row(k).setConstant(amp);
        tr = simulate_hybrid(doc.plant.eval_at(v), doc.controller, w, horizon);
    }
    std::filesystem::create_directories(out);
    export_csv(tr, out + "/trace.csv");

    double peak = 0.0;
    if (const auto it = tr.signals.find("z"); it != tr.signals.end())
        peak = it->second.cwiseAbs().maxCoeff();
    std::printf("simulated %zu instants, dt = %g s; peak |z| = %.6g\n", tr.time.size(), tr.dt,
                peak);
    std::printf("wrote %s/trace.csv\n", out.c_str());
    return 0;
}

int cmd_analyze(const std::string& model, const std::string& metric, double threshold,
                double budget, int order, DiscretizationMethod method, int freq_points,
                const std::string& out, const CommonArgs& g) {
    ModelDocument doc = load_model(model);
    UncertainStateSpace sys = doc.plant;
    if (!sys.is_discrete()) {
        if (doc.controller.loops.empty())
            throw ModelError("continuous plant without controller loops cannot be analyzed");
        sys = assemble(doc.plant, doc.controller, order, doc.controller.fastest_period(),
                       method)
                  .sys;
    }

    AnalysisOptions ao;
    ao.threshold = threshold;
    ao.max_seconds = budget;
    ao.seed = g.seed;
    ao.jobs = g.jobs;
    ao.freq_points = freq_points;
    const bool stability = metric == "stability";
    const AnalysisResult res =
        stability ? robust_stability_margin(sys, ao) : worst_case_hinf(sys, ao);

    std::printf("metric: %s\n", to_string(res.metric));
    std::printf("bounds: [%.6g, %.6g], relative gap %.3g\n", res.lower, res.upper, res.gap());
    if (stability) {
        const double mu_up = res.lower > 0.0 ? 1.0 / res.lower : 0.0;
        const double mu_lo =
            std::isfinite(res.upper) && res.upper > 0.0 ? 1.0 / res.upper : 0.0;
        std::printf("structured-value peak: in [%.6g, %.6g] at %.6g rad/s\n", mu_lo, mu_up,
                    res.peak_frequency);
        if (res.lower >= 1.0)
            std::printf("verdict: robust stability CERTIFIED over the unit parameter box\n");
        else if (res.upper < 1.0)
            std::printf(
                "verdict: robust stability FAILS, destabilizing perturbation of size %.6g\n",
                res.upper);
        else
            std::printf("verdict: UNDECIDED over the unit box (bounds straddle 1)\n");
    } else {
        std::printf("worst-case gain peak near %.6g rad/s\n", res.peak_frequency);
    }
    if (res.error_channels_included)
        std::printf(
            "certification: discretization-error channels INCLUDED; bounds cover the "
            "certified error ball\n");
    else {
        std::printf("certification: discretization-error channels ABSENT\n");
        std::printf(
            "model-validity warning: results apply to the approximate discrete model only\n");
    }
    std::printf("gap %s within threshold %.3g (%s)\n", res.certified ? "closed" : "NOT closed",
                threshold, res.note.empty() ? "-" : res.note.c_str());

    std::filesystem::create_directories(out);
    json j;
    j["metric"] = to_string(res.metric);
    j["lower"] = res.lower;
    j["upper"] = std::isfinite(res.upper) ? json(res.upper) : json("inf");
    j["gap"] = res.gap();
    j["peak_frequency"] = res.peak_frequency;
    j["certified"] = res.certified;
    j["error_channels_included"] = res.error_channels_included;
    j["boxes"] = res.stats.boxes;
    j["note"] = res.note;
    j["critical"] = values_json(res.critical);
    json sweep = json::array();
    for (const auto& pt : res.sweep)
        sweep.push_back(json{{"omega", pt.omega}, {"lower", pt.lower}, {"upper", pt.upper}});
    j["sweep"] = std::move(sweep);
    std::ofstream f(out + "/analysis.json");
    f << j.dump(2) << "\n";
    std::printf("wrote %s/analysis.json\n", out.c_str());

    if (!res.certified && res.stats.budget_exhausted) {
        std::fprintf(stderr, "budget exhausted before reaching the requested gap\n");
        return 4;
    }
    return 0;
}

int cmd_bench(const std::string& out, const std::vector<std::string>& modes,
              bool skip_figures, const CommonArgs& g) {
    ReproduceOptions ro;
    ro.out_dir = out;
    ro.jobs = g.jobs;
    ro.seed = g.seed;
    ro.modes = modes;
    const BenchmarkReport rep = reproduce_tables({}, {}, ro);

    for (const auto& gate : rep.gates)
        std::printf("gate %-26s %10.4g in [%g, %g]  %s\n", gate.name.c_str(), gate.value,
                    gate.lo, gate.hi, gate.pass ? "pass" : "FAIL");
    for (const auto& s : rep.structures)
        std::printf("structure order %d: %d plant copies, eps %dx%d, bound %.4g (ref %.4g)\n",
                    s.order, s.plant_copies, s.eps_rows, s.eps_cols, s.bound, s.reference);
    for (const auto& r : rep.margins)
        std::printf("stability %-24s mu in [%.4g, %.4g] (ref [%.4g, %.4g])  %.1f s\n",
                    r.label.c_str(), r.mu_lower, r.mu_upper, r.ref_lower, r.ref_upper,
                    r.seconds);
    for (const auto& r : rep.gains)
        std::printf("gain      %-24s in [%.4g, %.4g] (ref [%.4g, %.4g])  %.1f s\n",
                    r.label.c_str(), r.lower, r.upper, r.ref_lower, r.ref_upper, r.seconds);

    if (!skip_figures && modes.empty()) {
        reproduce_figures({}, {}, ro);
        std::printf("wrote figure traces under %s/figs\n", out.c_str());
    }

    const json summary = json::parse(rep.summary_json);
    for (const auto& chk : summary.at("checks"))
        std::printf("check %-36s %s%s\n", chk.at("name").get<std::string>().c_str(),
                    chk.at("pass").get<bool>() ? "pass" : "FAIL",
                    chk.at("gated").get<bool>() ? "" : " (reported, not gated)");
    std::printf("summary: %s; wrote %s/summary.json\n", rep.pass ? "pass" : "FAIL",
                out.c_str());
    return rep.pass ? 0 : 5;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multirate LFT toolkit: certified discretization and robustness analysis"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);

    CommonArgs g;

    std::string model, out = "out";
    double period = 0.1;
    int order = 2;
    DiscretizationMethod method = DiscretizationMethod::RationalApprox;
    std::string delta_spec = "0", dist_spec = "step:1,5", metric = "stability";
    double horizon = 40.0, threshold = 0.05, budget = 120.0;
    int freq_points = 60;
    std::string suite = "satellite";
    std::vector<std::string> modes;
    bool skip_figures = false;

    std::function<int()> run;

    auto* disc = app.add_subcommand(
        "discretize", "discretize the uncertain plant, keeping certified error channels");
    disc->add_option("--model", model, "model file")->required();
    disc->add_option("--period", period, "sampling period, s")
        ->required()
        ->check(CLI::PositiveNumber);
    disc->add_option("--order", order, "approximation order")->check(CLI::Range(1, 2));
    disc->add_option("--method", method, "discretization method")
        ->transform(CLI::CheckedTransformer(method_map(), CLI::ignore_case));
    disc->add_option("--out", out, "output directory");
    add_common(disc, &g);
    disc->callback([&] { run = [&] { return cmd_discretize(model, period, order, method, out); }; });

    auto* asmb = app.add_subcommand(
        "assemble", "build the single-rate closed-loop LFT model at the slowest period");
    asmb->add_option("--model", model, "model file")->required();
    asmb->add_option("--order", order, "approximation order")->check(CLI::Range(1, 2));
    asmb->add_option("--method", method, "discretization method")
        ->transform(CLI::CheckedTransformer(method_map(), CLI::ignore_case));
    asmb->add_option("--out", out, "output directory");
    add_common(asmb, &g);
    asmb->callback([&] { run = [&] { return cmd_assemble(model, order, method, out); }; });

    auto* sim = app.add_subcommand("simulate",
                                   "simulate the hybrid loop or an assembled discrete model");
    sim->add_option("--model", model, "model file")->required();
    sim->add_option("--delta", delta_spec, "0 or comma list name=value (normalized)");
    sim->add_option("--horizon", horizon, "simulation horizon, s")->check(CLI::PositiveNumber);
    sim->add_option("--disturbance", dist_spec, "step:AMP[,DURATION]")
        ->check(check_disturbance);
    sim->add_option("--out", out, "output directory");
    add_common(sim, &g);
    sim->callback(
        [&] { run = [&] { return cmd_simulate(model, delta_spec, horizon, dist_spec, out); }; });

    auto* ana = app.add_subcommand("analyze", "robust stability margin or worst-case gain");
    ana->add_option("--model", model, "model file")->required();
    ana->add_option("--metric", metric, "stability | wc-hinf")
        ->check(CLI::IsMember({"stability", "wc-hinf"}));
    ana->add_option("--threshold", threshold, "target relative bound gap")
        ->check(CLI::PositiveNumber);
    ana->add_option("--budget", budget, "wall-clock budget, s")->check(CLI::PositiveNumber);
    ana->add_option("--order", order, "approximation order when assembling")
        ->check(CLI::Range(1, 2));
    ana->add_option("--method", method, "discretization method when assembling")
        ->transform(CLI::CheckedTransformer(method_map(), CLI::ignore_case));
    ana->add_option("--freq-points", freq_points, "base frequency-grid size")
        ->check(CLI::PositiveNumber);
    ana->add_option("--out", out, "output directory");
    add_common(ana, &g);
    ana->callback([&] {
        run = [&] {
            return cmd_analyze(model, metric, threshold, budget, order, method, freq_points,
                               out, g);
        };
    });

    auto* bench = app.add_subcommand("bench", "reproduce the benchmark tables and figures");
    bench->add_option("--suite", suite, "benchmark suite")
        ->check(CLI::IsMember({"satellite"}));
    bench->add_option("--modes", modes, "gain-table subset (MR, SR-HF)")
        ->delimiter(',')
        ->check(CLI::IsMember({"MR", "SR-HF"}));
    bench->add_flag("--skip-figures", skip_figures, "tables only");
    bench->add_option("--out", out, "output directory");
    add_common(bench, &g);
    bench->callback([&] { run = [&] { return cmd_bench(out, modes, skip_figures, g); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        return run();
    } catch (const ModelError& e) {
        std::fprintf(stderr, "model error: %s\n", e.what());
        return 2;
    } catch (const BudgetError& e) {
        std::fprintf(stderr, "budget error: %s\n", e.what());
        return 4;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    }
}
