#include "mrlft/analysis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "mrlft/errors.hpp"
#include "mrlft/parallel.hpp"

namespace mrlft {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double rcond_of(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    return s(0) > 0.0 ? s(s.size() - 1) / s(0) : 0.0;
}

// Log-spaced frequency grid from the closed-loop eigenvalues; discrete
// systems stop at the folding frequency pi/Ts.
std::vector<double> frequency_grid(const UncertainStateSpace& sys, int n) {
    const StateSpaceModel nom = sys.nominal();
    std::vector<double> freqs;
    if (nom.states() > 0) {
        const Eigen::VectorXcd eigs = nom.A.eigenvalues();
        for (int i = 0; i < eigs.size(); ++i) {
            double f;
            if (sys.is_discrete()) {
                if (std::abs(eigs(i)) < 1e-12) continue;
                f = std::abs(std::log(eigs(i))) / *sys.period();
            } else {
                f = std::abs(eigs(i));
            }
            if (f > 1e-9) freqs.push_back(f);
        }
    }
    double lo = 1e-2, hi = 1e2;
    if (!freqs.empty()) {
        const double fmin = *std::min_element(freqs.begin(), freqs.end());
        const double fmax = *std::max_element(freqs.begin(), freqs.end());
        lo = std::max(fmin / 30.0, fmax * 1e-5);
        hi = fmax * 30.0;
    }
    if (sys.is_discrete()) hi = M_PI / *sys.period();
    lo = std::min(lo, hi / 10.0);
    std::vector<double> grid{0.0};
    const int pts = std::max(n, 8);
    for (int i = 0; i < pts; ++i)
        grid.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (pts - 1)));
    return grid;
}

MuOptions fast_mu(const MuOptions& base) {
    MuOptions mo = base;
    mo.use_g_scaling = false;
    return mo;
}

struct Sweep {
    std::vector<double> omega;
    std::vector<double> upper;
    std::vector<double> lower;  // zero where not searched
};

// Upper-bound trace over the grid, parallel over frequencies.
Sweep sweep_upper(const UncertainStateSpace& sys, const std::vector<double>& grid,
                  const MuOptions& mo, int jobs) {
    Sweep s;
    s.omega = grid;
    std::vector<double> up = parallel_map<double>(
        static_cast<int>(grid.size()),
        [&](int i) { return mu_upper_bound(sys.uncertainty_transfer(grid[i]), sys.delta(), mo).value; },
        jobs);
    s.upper = std::move(up);
    s.lower.assign(grid.size(), 0.0);
    return s;
}

// Inserts midpoints where the trace varies sharply and around the peak.
void refine_sweep(const UncertainStateSpace& sys, Sweep& s, const MuOptions& mo, int jobs) {
    const double peak = *std::max_element(s.upper.begin(), s.upper.end());
    if (peak <= 0.0) return;
    std::set<double> fresh;
    int pk = static_cast<int>(std::max_element(s.upper.begin(), s.upper.end()) - s.upper.begin());
    for (int i = std::max(1, pk - 2); i <= std::min<int>(s.omega.size() - 1, pk + 2); ++i) {
        const double a = s.omega[i - 1], b = s.omega[i];
        if (a <= 0.0) continue;
        for (int j = 1; j <= 3; ++j) fresh.insert(a * std::pow(b / a, j / 4.0));
    }
    for (size_t i = 1; i < s.omega.size(); ++i) {
        if (std::abs(s.upper[i] - s.upper[i - 1]) > 0.08 * peak && s.omega[i - 1] > 0.0)
            fresh.insert(std::sqrt(s.omega[i - 1] * s.omega[i]));
    }
    std::vector<double> extra(fresh.begin(), fresh.end());
    if (extra.empty()) return;
    std::vector<double> vals = parallel_map<double>(
        static_cast<int>(extra.size()),
        [&](int i) { return mu_upper_bound(sys.uncertainty_transfer(extra[i]), sys.delta(), mo).value; },
        jobs);
    for (size_t i = 0; i < extra.size(); ++i) {
        auto it = std::upper_bound(s.omega.begin(), s.omega.end(), extra[i]);
        const auto pos = it - s.omega.begin();
        s.omega.insert(it, extra[i]);
        s.upper.insert(s.upper.begin() + pos, vals[i]);
        s.lower.insert(s.lower.begin() + pos, 0.0);
    }
}

std::vector<int> peak_candidates(const Sweep& s, int count) {
    std::vector<int> idx(s.omega.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (s.upper[a] != s.upper[b]) return s.upper[a] > s.upper[b];
        return a < b;
    });
    idx.resize(std::min<size_t>(idx.size(), count));
    std::sort(idx.begin(), idx.end());
    return idx;
}

double peak_of(const Sweep& s, double* at = nullptr) {
    double best = 0.0, w = 0.0;
    for (size_t i = 0; i < s.omega.size(); ++i)
        if (s.upper[i] > best) {
            best = s.upper[i];
            w = s.omega[i];
        }
    if (at) *at = w;
    return best;
}

// Performance channel z <- w of the closed system at a parameter point.
StateSpaceModel perf_channel(const UncertainStateSpace& sys, const DeltaValues& values) {
    const StateSpaceModel s = sys.eval_at(values);
    const ChannelMap& ch = sys.channels();
    return StateSpaceModel(s.A, s.B.leftCols(ch.n_w), s.C.topRows(ch.n_z),
                           s.D.topLeftCorner(ch.n_z, ch.n_w), s.Ts);
}

struct VertexHit {
    double size = kInf;
    std::vector<double> direction;
};

// Discretization-error channels carry params prefixed "eps".
bool carries_error_channels(const BlockStructure& delta) {
    for (const auto& b : delta.blocks())
        if (b.param.rfind("eps", 0) == 0) return true;
    return false;
}

DeltaValues scaled_values(const DeltaValues& v, double f) {
    DeltaValues out = v;
    for (auto& kv : out.scalars) kv.second *= f;
    for (auto& kv : out.matrices) kv.second *= f;
    return out;
}

double values_radius(const DeltaValues& v) {
    double r = 0.0;
    for (const auto& kv : v.scalars) r = std::max(r, std::abs(kv.second));
    for (const auto& kv : v.matrices)
        r = std::max(r, Eigen::JacobiSVD<Eigen::MatrixXcd>(kv.second).singularValues()(0));
    return r;
}

// Smallest uniform scaling of a parameter vertex that destabilizes the loop,
// found by eigenvalue bisection along the ray (full blocks held at zero).
VertexHit vertex_destabilization(const UncertainStateSpace& sys, double start, int jobs) {
    VertexHit hit;
    const std::vector<std::string> params = sys.delta().scalar_params();
    const int k = static_cast<int>(params.size());
    if (k == 0 || k > 10) return hit;

    auto measure = [&](const std::vector<double>& dir, double scale) {
        DeltaValues v;
        for (int i = 0; i < k; ++i) v.scalars[params[i]] = scale * dir[i];
        try {
            return sys.eval_at(v).stability_measure();
        } catch (const NumericError&) {
            return 1.0;  // ill-posed counts as destabilized
        }
    };

    std::vector<std::vector<double>> verts;
    for (int mask = 0; mask < (1 << k); ++mask) {
        std::vector<double> d(k);
        for (int i = 0; i < k; ++i) d[i] = (mask >> i) & 1 ? 1.0 : -1.0;
        verts.push_back(std::move(d));
    }

    std::vector<double> sizes = parallel_map<double>(
        static_cast<int>(verts.size()),
        [&](int vi) {
            const auto& dir = verts[static_cast<size_t>(vi)];
            double lo = 0.0, hi = std::max(start, 1e-6);
            int doublings = 0;
            while (measure(dir, hi) < 0.0 && doublings++ < 40) {
                lo = hi;
                hi *= 2.0;
            }
            if (doublings > 40 || measure(dir, hi) < 0.0) return kInf;
            for (int it = 0; it < 80 && (hi - lo) > 1e-9 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                (measure(dir, mid) < 0.0 ? lo : hi) = mid;
            }
            return hi;
        },
        jobs);
    for (size_t vi = 0; vi < verts.size(); ++vi)
        if (sizes[vi] < hit.size) {
            hit.size = sizes[vi];
            hit.direction = verts[vi];
        }
    return hit;
}

}  // namespace

const char* to_string(Metric m) {
    switch (m) {
        case Metric::StabilityMargin: return "stability-margin";
        case Metric::WorstCaseHinf: return "worst-case-hinf";
    }
    return "?";
}

double AnalysisResult::gap() const {
    if (!std::isfinite(upper)) return std::isfinite(lower) && lower > 0.0 ? kInf : 0.0;
    if (upper <= 0.0) return 0.0;
    return (upper - lower) / upper;
}

StateSpaceModel bilinear_to_continuous(const StateSpaceModel& sys, double k) {
    if (!sys.is_discrete()) throw ModelError("bilinear map expects a discrete system");
    if (k <= 0.0) throw ModelError("bilinear map parameter must be positive");
    const int n = sys.states();
    const Eigen::MatrixXd x = sys.A + Eigen::MatrixXd::Identity(n, n);
    if (rcond_of(x) < 1e-12)
        throw NumericError("bilinear map undefined: eigenvalue at z = -1");
    const auto lu = x.partialPivLu();
    const Eigen::MatrixXd xia = lu.solve(sys.A - Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd xib = lu.solve(sys.B);
    StateSpaceModel out;
    out.A = k * xia;
    out.B = std::sqrt(2.0 * k) * xib;
    out.C = std::sqrt(2.0 * k) * sys.C * lu.inverse();
    out.D = sys.D - sys.C * xib;
    return out;
}

UncertainStateSpace bilinear_to_continuous(const UncertainStateSpace& sys, double k) {
    return UncertainStateSpace(bilinear_to_continuous(sys.realization(), k), sys.delta(),
                               sys.channels());
}

HinfResult hinf_norm(const StateSpaceModel& sys, double tol) {
    if (sys.states() > 0 && !sys.is_stable()) return HinfResult{kInf, 0.0, false};
    if (sys.is_discrete()) {
        const double ts = *sys.Ts;
        const double k = 2.0 / ts;
        HinfResult r = hinf_norm(bilinear_to_continuous(sys, k), tol);
        r.peak_omega = (2.0 / ts) * std::atan(r.peak_omega / k);
        return r;
    }
    auto gain_at = [&](double w) {
        return Eigen::JacobiSVD<Eigen::MatrixXcd>(sys.transfer_at(w)).singularValues()(0);
    };
    if (sys.states() == 0 || sys.B.cols() == 0 || sys.C.rows() == 0) {
        const double d = sys.D.size() > 0 ? sys.D.jacobiSvd().singularValues()(0) : 0.0;
        return HinfResult{d, 0.0, true};
    }

    // Probe candidate frequencies, then close in with the imaginary-axis
    // Hamiltonian test (Boyd-Balakrishnan style midpoint refinement).
    std::vector<double> probes{0.0};
    const Eigen::VectorXcd eigs = sys.A.eigenvalues();
    for (int i = 0; i < eigs.size(); ++i) {
        const double mag = std::abs(eigs(i));
        if (mag > 1e-9) probes.push_back(mag);
        if (std::abs(eigs(i).imag()) > 1e-9) probes.push_back(std::abs(eigs(i).imag()));
    }
    double best = 0.0, peak = 0.0;
    for (double w : probes) {
        const double g = gain_at(w);
        if (g > best) {
            best = g;
            peak = w;
        }
    }
    const double sd = sys.D.size() > 0 ? sys.D.jacobiSvd().singularValues()(0) : 0.0;
    best = std::max(best, sd * (1.0 + 1e-12) + 1e-300);

    const int n = sys.states();
    const int mI = sys.inputs();
    for (int iter = 0; iter < 60; ++iter) {
        const double gamma = best * (1.0 + 2.0 * tol);
        const Eigen::MatrixXd r =
            gamma * gamma * Eigen::MatrixXd::Identity(mI, mI) - sys.D.transpose() * sys.D;
        const auto rlu = r.partialPivLu();
        const Eigen::MatrixXd rib = rlu.solve(sys.B.transpose());
        const Eigen::MatrixXd ridc = rlu.solve(sys.D.transpose() * sys.C);
        Eigen::MatrixXd h(2 * n, 2 * n);
        const Eigen::MatrixXd a1 = sys.A + sys.B * ridc;
        h.topLeftCorner(n, n) = a1;
        h.topRightCorner(n, n) = sys.B * rib;
        h.bottomLeftCorner(n, n) =
            -sys.C.transpose() * (Eigen::MatrixXd::Identity(sys.outputs(), sys.outputs()) +
                                  sys.D * rlu.solve(sys.D.transpose())) *
            sys.C;
        h.bottomRightCorner(n, n) = -a1.transpose();

        const Eigen::VectorXcd hev = h.eigenvalues();
        std::vector<double> crossings;
        for (int i = 0; i < hev.size(); ++i)
            if (std::abs(hev(i).real()) <= 1e-8 * (1.0 + std::abs(hev(i))) && hev(i).imag() > 0.0)
                crossings.push_back(hev(i).imag());
        if (crossings.empty()) return HinfResult{best * (1.0 + tol), peak, true};
        std::sort(crossings.begin(), crossings.end());
        crossings.erase(std::unique(crossings.begin(), crossings.end(),
                                    [](double a, double b) { return std::abs(a - b) < 1e-9 * (1 + a); }),
                        crossings.end());
        double improved = best;
        for (size_t i = 0; i + 1 <= crossings.size(); ++i) {
            const double wmid = i + 1 < crossings.size()
                                    ? 0.5 * (crossings[i] + crossings[i + 1])
                                    : crossings[i];
            const double g = gain_at(wmid);
            if (g > improved) {
                improved = g;
                peak = wmid;
            }
        }
        if (improved <= best * (1.0 + tol / 10.0)) {
            best = gamma;  // stalled: accept the certified level
            break;
        }
        best = improved;
    }
    return HinfResult{best, peak, true};
}

AnalysisResult robust_stability_margin(const UncertainStateSpace& sys,
                                       const AnalysisOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    AnalysisResult res;
    res.metric = Metric::StabilityMargin;
    res.error_channels_included = carries_error_channels(sys.delta());

    if (sys.delta().empty()) {
        res.lower = res.upper = kInf;
        res.certified = true;
        res.note = "no uncertainty channels; the margin is unbounded";
        return res;
    }
    if (!sys.nominal().is_stable()) {
        res.lower = res.upper = 0.0;
        res.certified = true;
        res.note = "nominal closed loop is unstable";
        return res;
    }

    const int jobs = default_jobs(opts.jobs);
    const MuOptions fast = fast_mu(opts.mu);
    std::vector<double> grid = frequency_grid(sys, opts.freq_points);
    Sweep sweep = sweep_upper(sys, grid, fast, jobs);
    refine_sweep(sys, sweep, fast, jobs);
    refine_sweep(sys, sweep, fast, jobs);
    int evals = static_cast<int>(sweep.omega.size());

    // Tighten the top of the trace with phase-aware scalings, then search for
    // worst-case points underneath it.
    const std::vector<int> cand = peak_candidates(sweep, std::max(1, opts.peak_candidates));
    MuOptions full = opts.mu;
    full.seed = opts.seed;
    const std::vector<double> tightened = parallel_map<double>(
        static_cast<int>(cand.size()),
        [&](int i) {
            return mu_upper_bound(sys.uncertainty_transfer(sweep.omega[cand[i]]), sys.delta(),
                                  full)
                .value;
        },
        jobs);
    const std::vector<MuLowerResult> lowers = parallel_map<MuLowerResult>(
        static_cast<int>(cand.size()),
        [&](int i) {
            return mu_lower_bound(sys.uncertainty_transfer(sweep.omega[cand[i]]), sys.delta(),
                                  full);
        },
        jobs);
    evals += 2 * static_cast<int>(cand.size());

    double mu_low = 0.0;
    DeltaValues low_witness;
    for (size_t i = 0; i < cand.size(); ++i) {
        sweep.upper[cand[i]] = std::min(sweep.upper[cand[i]], tightened[i]);
        sweep.lower[cand[i]] = lowers[i].value;
        if (lowers[i].value > mu_low && lowers[i].residual <= 1e-6) {
            mu_low = lowers[i].value;
            low_witness = lowers[i].delta;
        }
    }
    double peak_w = 0.0;
    const double mu_up = peak_of(sweep, &peak_w);

    // An upper-bound witness must actually destabilize the loop; a frequency
    // grid point can sit slightly off the true crossing, so allow a small
    // inflation before accepting.
    auto verify_destabilizing = [&](DeltaValues& values, double& size) {
        for (double f : {1.0, 1.0 + 1e-6, 1.001, 1.01, 1.05}) {
            const DeltaValues trial = scaled_values(values, f);
            double m;
            try {
                m = sys.eval_at(trial).stability_measure();
            } catch (const NumericError&) {
                m = 1.0;  // ill-posed closure counts as destabilized
            }
            if (m >= -1e-6) {
                values = trial;
                size *= f;
                return true;
            }
        }
        return false;
    };

    // Direct eigenvalue search along parameter vertices gives a destabilizing
    // point independent of the frequency grid.
    const double start = mu_up > 0.0 ? 1.0 / mu_up : 1.0;
    VertexHit hit = vertex_destabilization(sys, start, jobs);

    res.lower = mu_up > 0.0 ? 1.0 / mu_up : kInf;
    double upper = kInf;
    if (mu_low > 0.0) {
        DeltaValues wit = scaled_values(low_witness, 1.0 / mu_low);
        double size = 1.0 / mu_low;
        if (verify_destabilizing(wit, size)) {
            upper = size;
            res.critical = wit;
        }
    }
    if (hit.size < upper) {
        upper = hit.size;
        const auto params = sys.delta().scalar_params();
        res.critical = DeltaValues{};
        for (size_t i = 0; i < params.size(); ++i)
            res.critical.scalars[params[i]] = hit.size * hit.direction[i];
    }

    // Branch-and-bound tightening: bisect the scale k, certifying stability of
    // re-centered sub-boxes at each frequency or extracting a destabilizing
    // point inside the k-ball. Splitting only helps along scalar parameters.
    int boxes_used = 0, max_depth = 0;
    const bool splittable = !sys.delta().scalar_params().empty();
    double gap_now = std::isfinite(upper) ? (upper - res.lower) / upper : kInf;
    if (splittable && std::isfinite(res.lower) && gap_now > opts.threshold) {
        std::vector<double> cand_w;
        for (int ci : cand) cand_w.push_back(sweep.omega[ci]);
        const ParameterBox root = ParameterBox::unit(sys.delta().scalar_params());

        // 1 = stable for every point of the k-ball (grid heuristic), -1 =
        // destabilizing point found (witness set), 0 = budget ran out.
        auto certify_scale = [&](double k, DeltaValues* witness, double* wit_size) {
            const UncertainStateSpace scaled = sys.scale_uncertainty(k);
            std::vector<std::pair<ParameterBox, int>> queue{{root, 0}};
            while (!queue.empty()) {
                if (boxes_used >= opts.max_boxes || elapsed() > opts.max_seconds) return 0;
                auto [box, depth] = queue.front();
                queue.erase(queue.begin());
                ++boxes_used;
                max_depth = std::max(max_depth, depth);
                const UncertainStateSpace local = scaled.recenter(box);

                auto probe = [&](const std::vector<double>& ws) {
                    std::vector<double> vals = parallel_map<double>(
                        static_cast<int>(ws.size()),
                        [&](int i) {
                            return mu_upper_bound(local.uncertainty_transfer(ws[i]),
                                                  local.delta(), fast)
                                .value;
                        },
                        jobs);
                    double worst = 0.0, at = cand_w.empty() ? 0.0 : cand_w[0];
                    for (size_t i = 0; i < ws.size(); ++i)
                        if (vals[i] > worst) {
                            worst = vals[i];
                            at = ws[i];
                        }
                    return std::make_pair(worst, at);
                };

                auto [worst, at] = probe(cand_w);
                if (worst <= 1.0) {
                    const auto [gworst, gat] = probe(sweep.omega);
                    worst = gworst;
                    at = gat;
                }
                MuOptions retry = full;
                retry.early_exit_at = 1.0;
                if (worst > 1.0 &&
                    mu_upper_bound(local.uncertainty_transfer(at), local.delta(), retry).value <=
                        1.0)
                    worst = 1.0;
                if (worst <= 1.0) continue;  // box certified on the grid

                const MuLowerResult lo =
                    mu_lower_bound(local.uncertainty_transfer(at), local.delta(), full);
                if (lo.value > 1.0 && lo.residual <= 1e-6) {
                    // Map the local witness back to root coordinates.
                    DeltaValues wit = scaled_values(lo.delta, 1.0 / lo.value);
                    const auto c = box.center();
                    const auto r = box.radii();
                    const auto& names = root.params();
                    for (size_t p = 0; p < names.size(); ++p) {
                        auto it = wit.scalars.find(names[p].name);
                        const double v = it != wit.scalars.end() ? it->second : 0.0;
                        wit.scalars[names[p].name] = c[p] + r[p] * v;
                    }
                    wit = scaled_values(wit, k);
                    double size = k * values_radius(scaled_values(wit, 1.0 / k));
                    if (verify_destabilizing(wit, size)) {
                        *witness = wit;
                        *wit_size = values_radius(wit);
                        return -1;
                    }
                }
                const auto r = box.radii();
                int dim = 0;
                for (size_t p = 1; p < r.size(); ++p)
                    if (r[p] > r[dim]) dim = static_cast<int>(p);
                auto halves = box.split(dim);
                queue.emplace_back(halves.first, depth + 1);
                queue.emplace_back(halves.second, depth + 1);
            }
            return 1;
        };

        double lo_k = res.lower, hi_k = upper;
        for (int step = 0; step < 24; ++step) {
            const bool have_hi = std::isfinite(hi_k);
            if (have_hi && (hi_k - lo_k) <= opts.threshold * hi_k) break;
            if (boxes_used >= opts.max_boxes || elapsed() > opts.max_seconds) {
                res.stats.budget_exhausted = true;
                break;
            }
            const double k = have_hi ? std::sqrt(lo_k * hi_k) : 2.0 * lo_k;
            DeltaValues wit;
            double wsize = kInf;
            const int verdict = certify_scale(k, &wit, &wsize);
            if (verdict == 1) {
                lo_k = k;
            } else if (verdict == -1) {
                if (wsize < hi_k) {
                    hi_k = wsize;
                    res.critical = wit;
                }
                if (hi_k <= lo_k) lo_k = hi_k * (1.0 - 1e-12);
            } else {
                res.stats.budget_exhausted = true;
                break;
            }
            if (!have_hi && step >= 6) break;
        }
        res.lower = lo_k;
        upper = hi_k;
    }

    res.upper = upper;
    res.peak_frequency = peak_w;
    res.stats.boxes = boxes_used;
    res.stats.max_depth = max_depth;
    res.stats.wall_seconds = elapsed();
    if (elapsed() > opts.max_seconds) res.stats.budget_exhausted = true;
    res.certified = std::isfinite(res.upper) ? res.gap() <= opts.threshold
                                             : !std::isfinite(res.lower);
    for (size_t i = 0; i < sweep.omega.size(); ++i)
        res.sweep.push_back(MuPoint{sweep.omega[i], sweep.lower[i], sweep.upper[i]});
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "structured-value peak bounds [%.6g, %.6g] at w=%.6g over %zu frequencies, "
                  "%d boxes",
                  mu_low, mu_up, peak_w, sweep.omega.size(), boxes_used);
    res.note = buf;
    return res;
}

AnalysisResult worst_case_hinf(const UncertainStateSpace& sys, const AnalysisOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    AnalysisResult res;
    res.metric = Metric::WorstCaseHinf;
    res.error_channels_included = carries_error_channels(sys.delta());
    const ChannelMap& ch = sys.channels();
    if (ch.n_w == 0 || ch.n_z == 0)
        throw ModelError("worst-case gain needs performance inputs and outputs");
    if (!sys.nominal().is_stable())
        throw IllPosedError("nominal closed loop is unstable; no worst-case gain exists");

    const int jobs = default_jobs(opts.jobs);
    const MuOptions fast = fast_mu(opts.mu);

    if (sys.delta().empty()) {
        const HinfResult h = hinf_norm(perf_channel(sys, DeltaValues::zero()));
        res.lower = res.upper = h.value;
        res.peak_frequency = h.peak_omega;
        res.certified = true;
        res.note = "no uncertainty channels; nominal gain";
        return res;
    }

    // Robust stability over the unit box is a prerequisite.
    std::vector<double> grid = frequency_grid(sys, opts.freq_points);
    {
        Sweep s = sweep_upper(sys, grid, fast, jobs);
        refine_sweep(sys, s, fast, jobs);
        double pw = 0.0;
        double pk = peak_of(s, &pw);
        if (pk > 1.0) {
            MuOptions retry = opts.mu;
            retry.early_exit_at = 1.0;
            const double refined =
                mu_upper_bound(sys.uncertainty_transfer(pw), sys.delta(), retry).value;
            if (refined > 1.0) {
                const MuLowerResult lo =
                    mu_lower_bound(sys.uncertainty_transfer(pw), sys.delta(), opts.mu);
                char buf[200];
                if (lo.value > 1.0 && lo.residual <= 1e-6)
                    std::snprintf(buf, sizeof(buf),
                                  "loop is not robustly stable over the unit box "
                                  "(destabilizing size %.4g at w=%.4g); compute the stability "
                                  "margin and rescale first",
                                  1.0 / lo.value, pw);
                else
                    std::snprintf(buf, sizeof(buf),
                                  "robust stability over the unit box not certified "
                                  "(bound %.4g at w=%.4g); compute the stability margin and "
                                  "rescale first",
                                  refined, pw);
                throw IllPosedError(buf);
            }
        }
        grid = s.omega;  // reuse the refined grid for the gain test
    }

    // Augmented structure: performance channel appended as a complex block.
    BlockStructure aug = sys.delta();
    std::string perf_name = "perf";
    while (aug.index_of(perf_name) >= 0) perf_name += "_";
    aug.append(BlockSpec::complex_full(perf_name, ch.n_w, ch.n_z));

    const ParameterBox root = ParameterBox::unit(sys.delta().scalar_params());

    // Feasibility of a gain level: scaled test matrix stays below one at
    // every grid frequency; failures get one retry with the full scalings.
    auto feasible = [&](const UncertainStateSpace& s, double gamma) {
        std::vector<int> bad;
        std::vector<double> fastvals = parallel_map<double>(
            static_cast<int>(grid.size()),
            [&](int i) {
                Eigen::MatrixXcd t = s.uncertainty_transfer(grid[i], true);
                t.bottomRows(ch.n_z) /= gamma;
                return mu_upper_bound(t, aug, fast).value;
            },
            jobs);
        for (size_t i = 0; i < grid.size(); ++i)
            if (fastvals[i] > 1.0) bad.push_back(static_cast<int>(i));
        MuOptions retry = opts.mu;
        retry.early_exit_at = 1.0;  // only the side of 1 matters here
        for (int i : bad) {
            Eigen::MatrixXcd t = s.uncertainty_transfer(grid[i], true);
            t.bottomRows(ch.n_z) /= gamma;
            if (mu_upper_bound(t, aug, retry).value > 1.0) return false;
        }
        return true;
    };

    auto box_vertices = [&](const ParameterBox& box) {
        std::vector<std::vector<double>> pts = box.vertices();
        if (pts.size() > 64) pts.resize(64);
        pts.push_back(box.center());
        return pts;
    };

    auto best_vertex_gain = [&](const ParameterBox& box, DeltaValues* witness) {
        const auto pts = box_vertices(box);
        const std::vector<double> gains = parallel_map<double>(
            static_cast<int>(pts.size()),
            [&](int i) {
                const HinfResult h =
                    hinf_norm(perf_channel(sys, bind_box_values(root, pts[static_cast<size_t>(i)])));
                return h.finite ? h.value : kInf;
            },
            jobs);
        double best = 0.0;
        size_t at = 0;
        for (size_t i = 0; i < pts.size(); ++i)
            if (gains[i] > best && std::isfinite(gains[i])) {
                best = gains[i];
                at = i;
            }
        if (witness) *witness = bind_box_values(root, pts[at]);
        return best;
    };

    const double nominal_gain = hinf_norm(perf_channel(sys, DeltaValues::zero())).value;

    auto is_unit = [](const ParameterBox& box) {
        for (const auto& p : box.params())
            if (p.lo != -1.0 || p.hi != 1.0) return false;
        return true;
    };
    auto evaluate = [&](const ParameterBox& box) {
        BoxEvaluation ev;
        DeltaValues wit;
        ev.lower = best_vertex_gain(box, &wit);
        ev.witness = wit;
        const UncertainStateSpace local = is_unit(box) ? sys : sys.recenter(box);
        double hi = std::max({2.0 * nominal_gain, 1.05 * ev.lower, 1e-6});
        int grow = 0;
        while (!feasible(local, hi) && grow++ < 40) hi *= 1.7;
        if (grow > 40) {
            ev.upper = kInf;
            return ev;
        }
        double lo = std::max(ev.lower, hi / 100.0);
        const double resolution = std::min(opts.threshold * 0.5, 0.02);
        for (int it = 0; it < 20 && hi / lo > 1.0 + resolution; ++it) {
            const double mid = std::sqrt(hi * lo);
            if (feasible(local, mid))
                hi = mid;
            else
                lo = mid;
        }
        ev.upper = hi;
        return ev;
    };

    BnbOptions bo;
    bo.threshold = opts.threshold;
    bo.max_boxes = opts.max_boxes;
    bo.max_seconds = opts.max_seconds;
    bo.jobs = opts.jobs;
    const BnbResult bnb = branch_and_bound(root, evaluate, bo);

    res.lower = bnb.lower;
    res.upper = bnb.upper;
    res.critical = bnb.witness;
    res.stats = bnb.stats;
    res.stats.wall_seconds = elapsed();
    res.certified = res.gap() <= opts.threshold && !bnb.stats.budget_exhausted;
    const HinfResult hw = hinf_norm(perf_channel(sys, bnb.witness));
    res.peak_frequency = hw.peak_omega;
    for (double w : grid) {
        Eigen::MatrixXcd t = sys.uncertainty_transfer(w, true);
        t.bottomRows(ch.n_z) /= std::max(res.upper, 1e-300);
        res.sweep.push_back(MuPoint{w, 0.0, mu_upper_bound(t, aug, fast).value});
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "gain bounds [%.6g, %.6g] over %zu frequencies, %d boxes", res.lower,
                  res.upper, grid.size(), res.stats.boxes);
    res.note = buf;
    return res;
}

}  // namespace mrlft
