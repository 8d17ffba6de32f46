#include "mrlft/mu.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <tuple>

#include "mrlft/errors.hpp"

namespace mrlft {
namespace {

struct GroupView {
    std::vector<MuGroup> groups;
    std::vector<int> w_group;  // group index per w channel (M columns)
    std::vector<int> z_group;  // group index per z channel (M rows)
    bool square = true;        // every block square and aligned
    int zn = 0, wn = 0;
};

GroupView build_view(const BlockStructure& s) {
    GroupView v;
    v.groups = coalesce_groups(s);
    v.wn = s.total_rows();
    v.zn = s.total_cols();
    v.w_group.assign(v.wn, -1);
    v.z_group.assign(v.zn, -1);
    for (size_t gi = 0; gi < v.groups.size(); ++gi) {
        const MuGroup& g = v.groups[gi];
        if (g.rows != g.cols) v.square = false;
        for (size_t si = 0; si < g.row_segments.size(); ++si) {
            if (g.row_segments[si] != g.col_segments[si]) v.square = false;
            for (int k = 0; k < g.rows; ++k) v.w_group[g.row_segments[si] + k] = static_cast<int>(gi);
            for (int k = 0; k < g.cols; ++k) v.z_group[g.col_segments[si] + k] = static_cast<int>(gi);
        }
    }
    return v;
}

// S = D_z M D_w^-1 with d = exp(log_d) per group on its channels.
Eigen::MatrixXcd scale_matrix(const Eigen::MatrixXcd& m, const GroupView& v,
                              const Eigen::VectorXd& log_d) {
    Eigen::MatrixXcd s = m;
    for (int i = 0; i < v.zn; ++i) s.row(i) *= std::exp(log_d(v.z_group[i]));
    for (int j = 0; j < v.wn; ++j) s.col(j) *= std::exp(-log_d(v.w_group[j]));
    return s;
}

double sigma_max(const Eigen::MatrixXcd& m) {
    return Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues()(0);
}

// Young-style scaled test matrix (I+GG*)^(-1/4) (S/beta - jG) (I+G*G)^(-1/4)
// with G real, supported on the diagonals of the real scalar blocks. Norm
// <= 1 certifies mu <= beta for the current scalings; non-square trailing
// full blocks simply carry G = 0 (equivalent to zero-padding M to square).
double phi_norm(const Eigen::MatrixXcd& s, const GroupView& v, const Eigen::VectorXd& g,
                double beta) {
    Eigen::VectorXd gl = Eigen::VectorXd::Zero(v.zn);
    Eigen::VectorXd gr = Eigen::VectorXd::Zero(v.wn);
    Eigen::MatrixXcd phi = s / beta;
    const std::complex<double> jay(0.0, 1.0);
    for (size_t gi = 0; gi < v.groups.size(); ++gi) {
        const MuGroup& grp = v.groups[gi];
        if (grp.kind != BlockKind::RealRepeatedScalar) continue;
        for (size_t si = 0; si < grp.row_segments.size(); ++si)
            for (int kk = 0; kk < grp.rows; ++kk) {
                const int zi = grp.col_segments[si] + kk;
                const int wj = grp.row_segments[si] + kk;
                phi(zi, wj) -= jay * g(static_cast<int>(gi));
                gl(zi) = g(static_cast<int>(gi));
                gr(wj) = g(static_cast<int>(gi));
            }
    }
    const Eigen::VectorXd cl = (gl.array().square() + 1.0).pow(-0.25);
    const Eigen::VectorXd cr = (gr.array().square() + 1.0).pow(-0.25);
    for (int i = 0; i < v.zn; ++i) phi.row(i) *= cl(i);
    for (int j = 0; j < v.wn; ++j) phi.col(j) *= cr(j);
    return sigma_max(phi);
}

// Osborne balancing: equalize Frobenius norms of each group's rows and cols.
Eigen::VectorXd osborne(const Eigen::MatrixXcd& m, const GroupView& v) {
    const int ng = static_cast<int>(v.groups.size());
    Eigen::VectorXd log_d = Eigen::VectorXd::Zero(ng);
    for (int sweep = 0; sweep < 20; ++sweep) {
        Eigen::MatrixXcd s = scale_matrix(m, v, log_d);
        double shift = 0.0;
        for (int gi = 0; gi < ng; ++gi) {
            double rn = 0.0, cn = 0.0;
            for (int i = 0; i < v.zn; ++i)
                if (v.z_group[i] == gi) rn += s.row(i).squaredNorm();
            for (int j = 0; j < v.wn; ++j)
                if (v.w_group[j] == gi) cn += s.col(j).squaredNorm();
            if (rn > 0.0 && cn > 0.0) {
                const double step = 0.25 * std::log(cn / rn);
                log_d(gi) += step;
                shift = std::max(shift, std::abs(step));
            }
        }
        if (shift < 1e-10) break;
    }
    return log_d;
}

// Subgradient polish of sigma_max(D M D^-1) over log_d: at the optimum each
// group's left and right singular-vector masses agree.
void fan_polish(const Eigen::MatrixXcd& m, const GroupView& v, Eigen::VectorXd& log_d,
                int iters) {
    const int ng = static_cast<int>(v.groups.size());
    double best = sigma_max(scale_matrix(m, v, log_d));
    double step = 0.5;
    for (int it = 0; it < iters; ++it) {
        Eigen::MatrixXcd s = scale_matrix(m, v, log_d);
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXcd u = svd.matrixU().col(0);
        const Eigen::VectorXcd w = svd.matrixV().col(0);
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(ng);
        for (int i = 0; i < v.zn; ++i) grad(v.z_group[i]) += std::norm(u(i));
        for (int j = 0; j < v.wn; ++j) grad(v.w_group[j]) -= std::norm(w(j));
        if (grad.norm() < 1e-12) break;
        bool improved = false;
        while (step > 1e-6) {
            Eigen::VectorXd trial = log_d - step * grad;
            trial.array() -= trial.mean();  // scalings are projective
            const double val = sigma_max(scale_matrix(m, v, trial));
            if (val < best - 1e-14 * best) {
                log_d = trial;
                best = val;
                improved = true;
                step *= 1.3;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;
    }
}

bool has_real_groups(const GroupView& v) {
    return std::any_of(v.groups.begin(), v.groups.end(), [](const MuGroup& g) {
        return g.kind == BlockKind::RealRepeatedScalar;
    });
}

// Minimize phi_norm over the real-channel G by coordinate descent with
// numeric line probes; returns the best value found (certified by direct
// evaluation of the expression).
double optimize_g(const Eigen::MatrixXcd& s, const GroupView& v, Eigen::VectorXd& g,
                  double beta, int iters) {
    const int ng = static_cast<int>(v.groups.size());
    double best = phi_norm(s, v, g, beta);
    double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    for (int it = 0; it < iters; ++it) {
        bool improved = false;
        for (int gi = 0; gi < ng; ++gi) {
            if (v.groups[gi].kind != BlockKind::RealRepeatedScalar) continue;
            for (double h : {0.5 * scale, 0.1 * scale, 0.02 * scale}) {
                for (double sgn : {1.0, -1.0}) {
                    Eigen::VectorXd trial = g;
                    trial(gi) += sgn * h;
                    const double val = phi_norm(s, v, trial, beta);
                    if (val < best - 1e-12) {
                        g = trial;
                        best = val;
                        improved = true;
                    }
                }
            }
        }
        if (!improved) scale *= 0.4;
        if (scale < 1e-6) break;
    }
    return best;
}

Eigen::MatrixXcd delta_mask(const GroupView& v, int gi) {
    Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(v.wn, v.zn);
    const MuGroup& g = v.groups[gi];
    for (size_t si = 0; si < g.row_segments.size(); ++si)
        for (int k = 0; k < std::min(g.rows, g.cols); ++k)
            e(g.row_segments[si] + k, g.col_segments[si] + k) = 1.0;
    return e;
}

}  // namespace

std::vector<MuGroup> coalesce_groups(const BlockStructure& structure) {
    std::vector<MuGroup> groups;
    for (int i = 0; i < structure.size(); ++i) {
        const BlockSpec& b = structure.blocks()[i];
        MuGroup* g = nullptr;
        for (auto& cand : groups)
            if (cand.param == b.param) g = &cand;
        if (g) {
            if (g->kind != b.kind || g->rows != b.rows || g->cols != b.cols)
                throw ModelError("blocks sharing param " + b.param + " must share kind and size");
        } else {
            groups.push_back(MuGroup{b.param, b.kind, {}, {}, b.rows, b.cols});
            g = &groups.back();
        }
        g->row_segments.push_back(structure.row_offset(i));
        g->col_segments.push_back(structure.col_offset(i));
    }
    return groups;
}

MuUpperResult mu_upper_bound(const Eigen::MatrixXcd& m, const BlockStructure& structure,
                             const MuOptions& opts) {
    MuUpperResult res;
    if (structure.empty()) {
        if (m.size() != 0) throw ModelError("matrix/structure size mismatch");
        return res;
    }
    GroupView v = build_view(structure);
    if (m.rows() != v.zn || m.cols() != v.wn)
        throw ModelError("matrix does not match the uncertainty structure");

    res.scalings.log_d = Eigen::VectorXd::Zero(static_cast<int>(v.groups.size()));
    res.scalings.g = Eigen::VectorXd::Zero(static_cast<int>(v.groups.size()));

    if (v.groups.size() == 1 && v.groups[0].kind == BlockKind::ComplexFull &&
        v.groups[0].row_segments.size() == 1) {
        res.value = sigma_max(m);
        return res;
    }

    Eigen::VectorXd log_d = osborne(m, v);
    fan_polish(m, v, log_d, opts.max_iterations);
    double beta = sigma_max(scale_matrix(m, v, log_d));
    res.scalings.log_d = log_d;
    res.value = beta;

    if (!opts.use_g_scaling || !has_real_groups(v) || beta <= 1e-300) return res;
    const double exit_at = opts.early_exit_at;
    if (exit_at > 0.0 && beta <= exit_at) return res;

    // Beta-bisection with G refinement; every accepted beta is verified by a
    // direct phi evaluation, so the result is a bound regardless of how well
    // the inner descent converged.
    const Eigen::MatrixXcd s = scale_matrix(m, v, log_d);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<int>(v.groups.size()));
    double hi = beta;            // feasible (g = 0 gives phi = 1)
    double lo = 0.2 * beta;
    Eigen::VectorXd g_hi = g;
    for (int it = 0; it < opts.bisection_steps && hi / lo > 1.004; ++it) {
        // Caller only needs to know which side of exit_at the bound falls on.
        if (exit_at > 0.0 && (hi <= exit_at || lo > exit_at)) break;
        const double mid = std::sqrt(hi * lo);
        Eigen::VectorXd gtry = g_hi;
        const double val = optimize_g(s, v, gtry, mid, opts.max_iterations);
        if (val <= 1.0) {
            hi = mid;
            g_hi = gtry;
        } else {
            lo = mid;
        }
        ++res.iterations;
    }
    res.value = hi;
    res.scalings.g = g_hi;
    res.converged = true;
    return res;
}

MuLowerResult mu_lower_bound(const Eigen::MatrixXcd& m, const BlockStructure& structure,
                             const MuOptions& opts) {
    MuLowerResult res;
    if (structure.empty()) return res;
    GroupView v = build_view(structure);
    if (m.rows() != v.zn || m.cols() != v.wn)
        throw ModelError("matrix does not match the uncertainty structure");

    // Single complex full block: exact via the dominant singular pair.
    if (v.groups.size() == 1 && v.groups[0].kind == BlockKind::ComplexFull &&
        v.groups[0].row_segments.size() == 1) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const double s1 = svd.singularValues()(0);
        res.value = s1;
        if (s1 > 0.0) {
            res.delta.matrices[v.groups[0].param] =
                svd.matrixV().col(0) * svd.matrixU().col(0).adjoint();
            Eigen::MatrixXcd x = Eigen::MatrixXcd::Identity(v.zn, v.zn) -
                                 m * res.delta.matrices[v.groups[0].param] / s1;
            Eigen::JacobiSVD<Eigen::MatrixXcd> chk(x);
            res.residual = chk.singularValues()(v.zn - 1) /
                           std::max(chk.singularValues()(0), 1e-300);
        }
        return res;
    }

    // General search: real scalars move by projected gradient descent on
    // sigma_min(I - M Delta); full blocks are re-aligned each round to the
    // dominant singular pair (saturated at the current radius).
    std::vector<int> real_idx, full_idx;
    for (size_t gi = 0; gi < v.groups.size(); ++gi) {
        if (v.groups[gi].kind == BlockKind::RealRepeatedScalar)
            real_idx.push_back(static_cast<int>(gi));
        else
            full_idx.push_back(static_cast<int>(gi));
    }
    const int k = static_cast<int>(real_idx.size());
    const int nf = static_cast<int>(full_idx.size());

    std::vector<Eigen::MatrixXcd> masks;
    for (int gi : real_idx) masks.push_back(delta_mask(v, gi));

    using FullDirs = std::vector<Eigen::MatrixXcd>;  // unit-norm direction per full group
    auto zero_dirs = [&] {
        FullDirs fd;
        for (int gi : full_idx)
            fd.push_back(Eigen::MatrixXcd::Zero(v.groups[gi].rows, v.groups[gi].cols));
        return fd;
    };

    auto build_x = [&](const Eigen::VectorXd& d, const FullDirs& fd, double t) {
        Eigen::MatrixXcd delta = Eigen::MatrixXcd::Zero(v.wn, v.zn);
        for (int i = 0; i < k; ++i) delta += d(i) * masks[i];
        for (int fi = 0; fi < nf; ++fi) {
            const MuGroup& g = v.groups[full_idx[fi]];
            for (size_t si = 0; si < g.row_segments.size(); ++si)
                delta.block(g.row_segments[si], g.col_segments[si], g.rows, g.cols) +=
                    t * fd[fi];
        }
        return (Eigen::MatrixXcd::Identity(v.zn, v.zn) - m * delta).eval();
    };
    auto fval = [&](const Eigen::VectorXd& d, const FullDirs& fd, double t,
                    Eigen::VectorXcd* u = nullptr, Eigen::VectorXcd* w = nullptr) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(build_x(d, fd, t),
                                               Eigen::ComputeThinU | Eigen::ComputeThinV);
        const int last = static_cast<int>(svd.singularValues().size()) - 1;
        if (u) *u = svd.matrixU().col(last);
        if (w) *w = svd.matrixV().col(last);
        return svd.singularValues()(last);
    };

    // Choose each full direction to maximize the first-order decrease of
    // sigma_min: Delta_f = V U^H from the SVD of sum_seg w_seg q_seg.
    auto align_fulls = [&](const Eigen::VectorXd& d, FullDirs& fd, double t) {
        Eigen::VectorXcd u, w;
        fval(d, fd, t, &u, &w);
        const Eigen::RowVectorXcd q = u.adjoint() * m;
        for (int fi = 0; fi < nf; ++fi) {
            const MuGroup& g = v.groups[full_idx[fi]];
            Eigen::MatrixXcd kmat = Eigen::MatrixXcd::Zero(g.cols, g.rows);
            for (size_t si = 0; si < g.row_segments.size(); ++si)
                kmat += w.segment(g.col_segments[si], g.cols) *
                        q.segment(g.row_segments[si], g.rows);
            if (kmat.norm() < 1e-300) continue;
            if (g.kind == BlockKind::RealFull) {
                Eigen::JacobiSVD<Eigen::MatrixXd> svd(kmat.real(),
                                                      Eigen::ComputeThinU | Eigen::ComputeThinV);
                fd[fi] = (svd.matrixV() * svd.matrixU().transpose()).cast<std::complex<double>>();
            } else {
                Eigen::JacobiSVD<Eigen::MatrixXcd> svd(kmat,
                                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
                fd[fi] = svd.matrixV() * svd.matrixU().adjoint();
            }
        }
    };

    // Descent within radius t: real coordinates clipped to [-t, t], full
    // directions saturated at norm t.
    auto descend = [&](Eigen::VectorXd d, FullDirs fd, double t) {
        double f = fval(d, fd, t);
        const int rounds = nf > 0 ? 6 : 1;
        const int budget = std::max(40, 10 * opts.ascent_sweeps) / rounds;
        for (int round = 0; round < rounds && f > 1e-13; ++round) {
            if (nf > 0) {
                align_fulls(d, fd, t);
                f = fval(d, fd, t);
            }
            double step = 0.25 * t;
            for (int it = 0; it < budget && f > 1e-13 && k > 0; ++it) {
                Eigen::VectorXcd u, w;
                f = fval(d, fd, t, &u, &w);
                const Eigen::RowVectorXcd q = u.adjoint() * m;
                Eigen::VectorXd grad = Eigen::VectorXd::Zero(k);
                for (int i = 0; i < k; ++i) {
                    const MuGroup& g = v.groups[real_idx[i]];
                    for (size_t si = 0; si < g.row_segments.size(); ++si)
                        for (int kk = 0; kk < g.rows; ++kk)
                            grad(i) -=
                                (q(g.row_segments[si] + kk) * w(g.col_segments[si] + kk)).real();
                }
                if (grad.norm() < 1e-15) break;
                bool moved = false;
                while (step > 1e-9 * t) {
                    Eigen::VectorXd trial = d - step * grad / grad.norm();
                    trial = trial.cwiseMax(-t).cwiseMin(t);
                    const double ft = fval(trial, fd, t);
                    if (ft < f - 1e-16) {
                        d = trial;
                        f = ft;
                        moved = true;
                        step *= 1.4;
                        break;
                    }
                    step *= 0.5;
                }
                if (!moved) break;
            }
        }
        return std::make_tuple(d, fd, f);
    };

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const double xnorm = std::max(sigma_max(m), 1e-12);
    auto radius_of = [&](const Eigen::VectorXd& d, double t) {
        const double dr = k > 0 ? d.cwiseAbs().maxCoeff() : 0.0;
        return std::max(nf > 0 ? t : 0.0, std::max(dr, 1e-12));
    };

    // Seed points: vertices (when few) plus random interior points.
    std::vector<Eigen::VectorXd> seeds;
    if (k <= 10) {
        for (int mask = 0; mask < (1 << k); ++mask) {
            Eigen::VectorXd d(k);
            for (int i = 0; i < k; ++i) d(i) = (mask >> i) & 1 ? 1.0 : -1.0;
            seeds.push_back(d);
        }
    }
    for (int rseed = 0; rseed < opts.restarts * 4; ++rseed) {
        Eigen::VectorXd d(k);
        for (int i = 0; i < k; ++i) d(i) = unif(rng);
        seeds.push_back(d);
    }

    // Expand the search radius until a singularity is found, then shrink.
    double best_t = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_d = Eigen::VectorXd::Zero(k);
    FullDirs best_fd = zero_dirs();
    double t = 1.0 / xnorm;
    for (int expand = 0; expand < 40 && best_t == std::numeric_limits<double>::infinity();
         ++expand) {
        for (const auto& s0 : seeds) {
            auto [d, fd, f] = descend(s0 * t, zero_dirs(), t);
            if (f <= 1e-10 * xnorm) {
                const double tn = radius_of(d, t);
                if (tn < best_t) {
                    best_t = tn;
                    best_d = d;
                    best_fd = fd;
                }
            }
        }
        t *= 1.6;
        if (t > 1e8 / xnorm) break;
    }
    if (!std::isfinite(best_t)) return res;  // 0 is always a valid lower bound

    // Shrink rounds: look for a singular point strictly inside the best radius.
    for (int round = 0; round < 40; ++round) {
        const double target = best_t * 0.985;
        bool found = false;
        auto [d, fd, f] =
            descend(best_d.cwiseMax(-target).cwiseMin(target), best_fd, target);
        if (f <= 1e-10 * xnorm) {
            best_t = radius_of(d, target);
            best_d = d;
            best_fd = fd;
            found = true;
        }
        for (int r = 0; r < 2 && !found; ++r) {
            Eigen::VectorXd s0(k);
            for (int i = 0; i < k; ++i) s0(i) = unif(rng) * target;
            auto [d2, fd2, f2] = descend(s0, best_fd, target);
            if (f2 <= 1e-10 * xnorm) {
                best_t = radius_of(d2, target);
                best_d = d2;
                best_fd = fd2;
                found = true;
            }
        }
        if (!found) break;
    }

    res.value = 1.0 / best_t;
    for (int i = 0; i < k; ++i)
        res.delta.scalars[v.groups[real_idx[i]].param] = best_d(i) / best_t;
    for (int fi = 0; fi < nf; ++fi)
        res.delta.matrices[v.groups[full_idx[fi]].param] = best_fd[fi];
    {
        Eigen::JacobiSVD<Eigen::MatrixXcd> chk(build_x(best_d, best_fd, best_t));
        res.residual = chk.singularValues()(v.zn - 1) /
                       std::max(chk.singularValues()(0), 1e-300);
    }
    return res;
}

std::vector<double> mu_sensitivities(const Eigen::MatrixXcd& m, const BlockStructure& structure,
                                     const MuScalings& scalings) {
    GroupView v = build_view(structure);
    if (m.rows() != v.zn || m.cols() != v.wn)
        throw ModelError("matrix does not match the uncertainty structure");
    const int ng = static_cast<int>(v.groups.size());
    Eigen::VectorXd log_d = scalings.log_d.size() == ng ? scalings.log_d
                                                        : Eigen::VectorXd::Zero(ng);
    const Eigen::MatrixXcd s = scale_matrix(m, v, log_d);
    const double base = sigma_max(s);
    const double h = 0.05;
    std::vector<double> sens(ng, 0.0);
    for (int gi = 0; gi < ng; ++gi) {
        Eigen::MatrixXcd ms = s;
        for (int j = 0; j < v.wn; ++j)
            if (v.w_group[j] == gi) ms.col(j) *= (1.0 - h);
        sens[gi] = std::max(0.0, (base - sigma_max(ms)) / h);
    }
    return sens;
}

}  // namespace mrlft
