#include "mrlft/branch_and_bound.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>

#include "mrlft/errors.hpp"
#include "mrlft/parallel.hpp"

namespace mrlft {
namespace {

struct Node {
    ParameterBox box;
    BoxEvaluation eval;
    int depth = 0;
    long order = 0;  // creation index, deterministic tie-break
};

int widest_dim(const ParameterBox& box) {
    int dim = 0;
    double best = -1.0;
    const auto r = box.radii();
    for (int i = 0; i < box.size(); ++i)
        if (r[i] > best) {
            best = r[i];
            dim = i;
        }
    return dim;
}

}  // namespace

BnbResult branch_and_bound(const ParameterBox& root, const BoxEvaluator& evaluate,
                           const BnbOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    BnbResult res;
    res.best_box = root;
    Node first{root, evaluate(root), 0, 0};
    res.stats.boxes = 1;
    res.lower = first.eval.lower;
    res.upper = first.eval.upper;
    res.witness = first.eval.witness;
    if (res.upper < res.lower) res.upper = res.lower;

    std::vector<Node> frontier{std::move(first)};
    long next_order = 1;
    const int jobs = default_jobs(opts.jobs);

    auto gap_ok = [&] {
        return res.upper <= 0.0 || (res.upper - res.lower) <= opts.threshold * res.upper;
    };

    while (!gap_ok() && !root.empty()) {
        if (res.stats.boxes >= opts.max_boxes || elapsed() > opts.max_seconds) {
            res.stats.budget_exhausted = true;
            break;
        }
        // Pop the box with the largest upper bound; earliest creation wins ties.
        auto best_it = std::max_element(
            frontier.begin(), frontier.end(), [](const Node& a, const Node& b) {
                if (a.eval.upper != b.eval.upper) return a.eval.upper < b.eval.upper;
                return a.order > b.order;
            });
        if (best_it == frontier.end()) break;
        Node parent = std::move(*best_it);
        frontier.erase(best_it);

        int dim = parent.eval.split_dim_hint;
        if (dim < 0 || dim >= parent.box.size()) dim = widest_dim(parent.box);
        auto [left, right] = parent.box.split(dim);
        const std::array<ParameterBox, 2> children{left, right};

        std::vector<BoxEvaluation> evals = parallel_map<BoxEvaluation>(
            2, [&](int i) { return evaluate(children[static_cast<size_t>(i)]); },
            std::min(jobs, 2));
        res.stats.boxes += 2;
        res.stats.max_depth = std::max(res.stats.max_depth, parent.depth + 1);

        for (int i = 0; i < 2; ++i) {
            Node child{children[static_cast<size_t>(i)], evals[static_cast<size_t>(i)],
                       parent.depth + 1, next_order++};
            // Bounds cannot loosen under refinement: inherit the parent cap.
            child.eval.upper = std::min(child.eval.upper, parent.eval.upper);
            if (child.eval.lower > res.lower) {
                res.lower = child.eval.lower;
                res.witness = child.eval.witness;
                res.best_box = child.box;
            }
            frontier.push_back(std::move(child));
        }
        // Prune boxes that cannot beat the incumbent.
        frontier.erase(std::remove_if(frontier.begin(), frontier.end(),
                                      [&](const Node& n) { return n.eval.upper <= res.lower; }),
                       frontier.end());
        double up = res.lower;
        for (const Node& n : frontier) up = std::max(up, n.eval.upper);
        res.upper = up;
    }

    res.stats.wall_seconds = elapsed();
    return res;
}

}  // namespace mrlft
