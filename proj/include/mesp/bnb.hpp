#pragma once

// Exact MESP solver: best-first branch-and-bound with pluggable bound
// evaluators, Schur-complement node reduction, rounding/greedy incumbents,
// and parameter inheritance from parent nodes (children reuse the parent's
// MixParams; a retune happens every retune_depth levels).

#include <chrono>
#include <cmath>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "mesp/bqp.hpp"
#include "mesp/instance.hpp"
#include "mesp/linx.hpp"
#include "mesp/nlp.hpp"
#include "mesp/report.hpp"
#include "mesp/tuner.hpp"

namespace mesp {

struct Node {
    long long id = 0;
    int depth = 0;
    std::vector<int> fixed_in;     // original 1-based labels
    std::vector<int> fixed_out;    // original 1-based labels
    std::vector<int> free_labels;  // original labels of the reduced indices
    std::optional<CovarianceInstance> reduced;
    double shift = 0.0; // accumulated log-determinant of fixed_in via Schur pivots
    int residual_s = 0;
    MixParams inherited;
    double bound = std::numeric_limits<double>::infinity();
    Vec relax_x; // bound-relaxation optimizer, reduced coordinates
};

inline Node make_root_node(const CovarianceInstance& inst, int s) {
    Node root;
    root.residual_s = s;
    root.reduced = inst;
    root.free_labels.resize(inst.n());
    for (int i = 0; i < inst.n(); ++i) root.free_labels[i] = i + 1;
    return root;
}

namespace detail {

inline int reduced_index_of(const Node& node, int label) {
    for (int i = 0; i < static_cast<int>(node.free_labels.size()); ++i)
        if (node.free_labels[i] == label) return i;
    return -1;
}

} // namespace detail

// Delete row/column `label` (original 1-based label) from the node.
inline Node fix_out(const Node& node, int label) {
    const int pos = detail::reduced_index_of(node, label);
    if (pos < 0) throw IndexNotFree("fix_out: index not free");
    const CovarianceInstance& inst = *node.reduced;
    const int m = inst.n();
    if (m <= 1) throw InvalidParam("fix_out: node has no room to shrink");

    Node child = node;
    child.fixed_out.push_back(label);
    std::sort(child.fixed_out.begin(), child.fixed_out.end());
    child.free_labels.erase(child.free_labels.begin() + pos);
    child.depth = node.depth + 1;

    SymMatrix sub(m - 1);
    for (int i = 0, a = 0; i < m; ++i) {
        if (i == pos) continue;
        for (int j = i, b = a; j < m; ++j) {
            if (j == pos) continue;
            sub.set(a, b, inst.C()(i, j));
            ++b;
        }
        ++a;
    }
    child.reduced = CovarianceInstance(sub, inst.label() + "/out" + std::to_string(label));
    child.relax_x.clear();
    return child;
}

// Fix `label` into the selection: shift accumulates log C_ii and the rest is
// replaced by the Schur complement C[R,R] - C[R,i] C[i,R] / C_ii.
inline Node fix_in(const Node& node, int label) {
    const int pos = detail::reduced_index_of(node, label);
    if (pos < 0) throw IndexNotFree("fix_in: index not free");
    if (node.residual_s < 1) throw InvalidParam("fix_in: no selection slots left");
    const CovarianceInstance& inst = *node.reduced;
    const int m = inst.n();
    const double pivot = inst.C()(pos, pos);
    if (!(pivot > 0.0)) throw NotPositiveDefinite("fix_in: nonpositive pivot");

    Node child = node;
    child.fixed_in.push_back(label);
    std::sort(child.fixed_in.begin(), child.fixed_in.end());
    child.free_labels.erase(child.free_labels.begin() + pos);
    child.depth = node.depth + 1;
    child.shift = node.shift + std::log(pivot);
    child.residual_s = node.residual_s - 1;

    if (m > 1) {
        SymMatrix sub(m - 1);
        for (int i = 0, a = 0; i < m; ++i) {
            if (i == pos) continue;
            for (int j = i, b = a; j < m; ++j) {
                if (j == pos) continue;
                sub.set(a, b, inst.C()(i, j) - inst.C()(i, pos) * inst.C()(pos, j) / pivot);
                ++b;
            }
            ++a;
        }
        child.reduced = CovarianceInstance(sub, inst.label() + "/in" + std::to_string(label));
    } else {
        child.reduced.reset();
        child.free_labels.clear();
    }
    child.relax_x.clear();
    return child;
}

// Most fractional coordinate of the relaxation optimizer; 1-based position,
// smallest index on ties. Throws NoFreeIndex when x is already binary.
inline int branch_select(const Node& node, const BoundReport& report) {
    (void)node;
    const Vec& x = report.optimizer_x;
    if (x.empty()) throw NoFreeIndex("branch_select: no relaxation optimizer");
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(x.size()); ++i) {
        double dist = std::fabs(x[i] - 0.5);
        if (dist < best_dist - 1e-15) {
            best_dist = dist;
            best = i;
        }
    }
    if (best < 0 || best_dist > 0.5 - 1e-6) throw NoFreeIndex("branch_select: optimizer is binary");
    return best + 1;
}

struct BnbOptions {
    BoundKind bound = BoundKind::linx;
    int retune_depth = 3;
    double tol = 1e-7;
    double prune_tol = 1e-8;
    int tune_budget = 25;      // mbqp alternate_tune budget at retune nodes
    int gamma_grid_count = 30; // nlp retune grid size
    long long max_nodes = 200000;
    MixParams init{0.5, 0.0, 0.0}; // root parameters; children inherit
};

struct BnbStats {
    long long nodes_created = 0;
    long long nodes_expanded = 0;
    long long bound_evals = 0;
    long long incumbent_updates = 0;
    double root_bound = 0.0;
    double wall_time_sec = 0.0;
};

struct MespSolution {
    double z = 0.0;
    SubsetSelection best;
    BnbStats stats;
};

namespace detail {

// Bound evaluation on the reduced instance; value is shifted to the original
// problem. On retune nodes the tuned parameters replace node.inherited so
// children inherit them.
inline BoundReport evaluate_node_bound(Node& node, const BnbOptions& opt, bool retune) {
    const CovarianceInstance& inst = *node.reduced;
    const int rs = node.residual_s;
    BoundReport rep;
    switch (opt.bound) {
        case BoundKind::linx: {
            if (retune) {
                auto tuned = tune_linx_gamma(inst, rs, node.inherited.psi1, 1e-6, 30);
                node.inherited.psi1 = tuned.psi;
                rep = tuned.last_report;
            } else {
                LinxOptions lo;
                lo.tol = opt.tol;
                rep = solve_linx(inst, rs, std::exp(node.inherited.psi1), lo);
            }
            break;
        }
        case BoundKind::bqp: {
            if (retune) {
                auto [psi, value] = tune_bqp_psi_endpoint(inst, rs, false, node.inherited.psi1);
                node.inherited.psi1 = psi;
            }
            MixParams mp{0.0, node.inherited.psi1, 0.0};
            rep = solve_mbqp(inst, rs, mp).report;
            break;
        }
        case BoundKind::cbqp: {
            if (retune) {
                auto [psi, value] = tune_bqp_psi_endpoint(inst, rs, true, node.inherited.psi2);
                node.inherited.psi2 = psi;
            }
            MixParams mp{1.0, 0.0, node.inherited.psi2};
            rep = solve_mbqp(inst, rs, mp).report;
            break;
        }
        case BoundKind::mbqp: {
            if (retune) {
                AlternateTuneOptions topt;
                topt.budget = opt.tune_budget;
                topt.rounds = 2;
                auto tuned = alternate_tune(inst, rs, node.inherited, topt);
                node.inherited = tuned.params;
                rep = tuned.report;
            } else {
                rep = solve_mbqp(inst, rs, node.inherited).report;
            }
            break;
        }
        case BoundKind::nlp: {
            NlpParams par = nlp_trace_params(inst);
            double gamma = std::exp(node.inherited.psi1);
            if (retune) {
                auto grid = gamma_grid(inst, rs, par, opt.gamma_grid_count, opt.tol);
                gamma = grid.gamma;
                node.inherited.psi1 = std::log(gamma);
            }
            rep = solve_nlp(inst, rs, par, gamma);
            break;
        }
        case BoundKind::cnlp: {
            auto [comp, shift] = complement(inst);
            NlpParams par = nlp_trace_params(comp);
            double gamma = std::exp(node.inherited.psi2);
            if (retune) {
                auto grid = gamma_grid(comp, inst.n() - rs, par, opt.gamma_grid_count, opt.tol);
                gamma = grid.gamma;
                node.inherited.psi2 = std::log(gamma);
            }
            rep = solve_nlp(comp, inst.n() - rs, par, gamma);
            rep.value += shift;
            rep.primal_value += shift;
            rep.dual_value += shift;
            // optimizer back in selection coordinates
            for (double& v : rep.optimizer_x) v = 1.0 - v;
            break;
        }
        default:
            throw InvalidParam("unsupported bound kind for branch-and-bound");
    }
    rep.value += node.shift;
    rep.primal_value += node.shift;
    rep.dual_value += node.shift;
    return rep;
}

} // namespace detail

inline MespSolution solve_mesp(const CovarianceInstance& inst, int s, const BnbOptions& opt = {}) {
    const int n = inst.n();
    if (s < 1 || s > n) throw InvalidParam("solve_mesp: need 1 <= s <= n");
    const auto t0 = std::chrono::steady_clock::now();

    MespSolution sol;
    BnbStats& stats = sol.stats;

    // Heuristic incumbent.
    auto [lb, incumbent] = greedy_heuristic(inst, s);
    double inc_value = lb;
    std::vector<int> inc_set = incumbent.indices;
    ++stats.incumbent_updates;

    auto offer_incumbent = [&](double value, std::vector<int> set) {
        if (value > inc_value + 1e-12) {
            inc_value = value;
            std::sort(set.begin(), set.end());
            inc_set = std::move(set);
            ++stats.incumbent_updates;
        }
    };

    // node arena + best-first heap keyed (bound desc, id asc)
    std::vector<Node> arena;
    using HeapItem = std::pair<double, long long>;
    auto cmp = [](const HeapItem& a, const HeapItem& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second > b.second;
    };
    std::priority_queue<HeapItem, std::vector<HeapItem>, decltype(cmp)> heap(cmp);

    auto candidate_from_rounding = [&](const Node& node, const Vec& x) {
        if (node.residual_s < 1 || x.empty()) return;
        std::vector<int> order(x.size());
        for (size_t i = 0; i < x.size(); ++i) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (x[a] != x[b]) return x[a] > x[b];
            return a < b;
        });
        std::vector<int> T(order.begin(), order.begin() + node.residual_s);
        std::vector<int> T1;
        for (int t : T) T1.push_back(t + 1);
        double val = node.shift + entropy(*node.reduced, T1);
        std::vector<int> full = node.fixed_in;
        for (int t : T) full.push_back(node.free_labels[t]);
        offer_incumbent(val, std::move(full));
    };

    auto admit = [&](Node&& node) {
        // terminal nodes resolve to incumbent candidates immediately
        if (node.residual_s == 0) {
            offer_incumbent(node.shift, node.fixed_in);
            return;
        }
        const int order = node.reduced ? node.reduced->n() : 0;
        if (node.residual_s == order) {
            double val = node.shift + (order ? node.reduced->ldetC() : 0.0);
            std::vector<int> full = node.fixed_in;
            for (int lbl : node.free_labels) full.push_back(lbl);
            offer_incumbent(val, std::move(full));
            return;
        }
        bool retune = (node.depth % opt.retune_depth) == 0;
        BoundReport rep;
        try {
            rep = detail::evaluate_node_bound(node, opt, retune);
        } catch (const Error& e) {
            throw BoundFailure(std::string("bound evaluation failed at node ") +
                               std::to_string(node.id) + ": " + e.what() +
                               " (incumbent " + std::to_string(inc_value) + ")");
        }
        ++stats.bound_evals;
        node.bound = rep.value;
        node.relax_x = rep.optimizer_x;
        candidate_from_rounding(node, rep.optimizer_x);
        if (stats.bound_evals == 1) stats.root_bound = rep.value;
        if (node.bound <= inc_value + opt.prune_tol) return; // fathomed
        node.id = static_cast<long long>(arena.size());
        heap.push({node.bound, node.id});
        arena.push_back(std::move(node));
        ++stats.nodes_created;
    };

    {
        Node root = make_root_node(inst, s);
        root.inherited = opt.init;
        admit(std::move(root));
    }

    while (!heap.empty()) {
        auto [bound, id] = heap.top();
        heap.pop();
        if (bound <= inc_value + opt.prune_tol) break; // best-first: everything left is fathomed
        Node node = arena[id];
        ++stats.nodes_expanded;
        if (stats.nodes_expanded > opt.max_nodes)
            throw BoundFailure("node budget exhausted (incumbent " + std::to_string(inc_value) +
                               ", bound " + std::to_string(bound) + ")");

        int pick;
        try {
            BoundReport fake;
            fake.optimizer_x = node.relax_x;
            pick = branch_select(node, fake);
        } catch (const NoFreeIndex&) {
            // integral relaxation: the rounding pass already captured it
            continue;
        }
        const int label = node.free_labels[pick - 1];
        admit(fix_in(node, label));
        admit(fix_out(node, label));
    }

    sol.z = inc_value;
    sol.best.indices = inc_set;
    sol.best.s = s;
    sol.best.entropy = inc_value;
    stats.wall_time_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sol;
}

} // namespace mesp
