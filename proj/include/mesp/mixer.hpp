#pragma once

// Lagrangian-decomposition mixing of two bounds with duplicated selection
// variables linked by x + y = e:
//   min_pi  pi'e + max{ alpha f_A(x,.) - pi'x : P } + max{ (1-alpha) f_B(y,.) - pi'y : Q },
// optimized over pi by subgradient descent. Every pi yields a valid upper
// bound (weak duality). The A-side lives on cardinality s, the B-side on
// cardinality n-s; plain bounds are exposed on the opposite side through the
// substitution y = e - x.

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mesp/bqp.hpp"
#include "mesp/instance.hpp"
#include "mesp/linx.hpp"
#include "mesp/nlp.hpp"

namespace mesp {

struct DualTilt {
    Vec pi;
    double alpha = 0.5;
};

// A bound participating in a mix, with its own scaling parameters. For the
// complementary kinds, gamma and nlp refer to the complement instance.
struct BoundSpec {
    BoundKind kind = BoundKind::linx;
    double gamma = 1.0;
    std::optional<NlpParams> nlp;
};

struct TiltedBoundQuery {
    BoundSpec bound;
    double weight = 1.0;
    Vec tilt;
};

struct TiltedSolution {
    double value = 0.0;
    Vec x; // maximizer in the bound's own variable space
};

inline bool is_complementary(BoundKind k) { return k == BoundKind::cbqp || k == BoundKind::cnlp; }

namespace detail {

// max{ weight f(x,.) - tilt'x } for a plain bound on (inst, s).
inline TiltedSolution solve_tilted_plain(const CovarianceInstance& inst, int s,
                                         const BoundSpec& spec, double weight, const Vec& tilt,
                                         double tol) {
    TiltedSolution out;
    switch (spec.kind) {
        case BoundKind::linx: {
            LinxOptions o;
            o.tol = tol;
            o.weight = weight;
            o.tilt = tilt;
            BoundReport rep = solve_linx(inst, s, spec.gamma, o);
            out.value = rep.value;
            out.x = rep.optimizer_x;
            return out;
        }
        case BoundKind::bqp: {
            MbqpOptions o;
            o.tol = tol;
            o.weight = weight;
            o.tilt = tilt;
            MbqpResult res = solve_bqp(inst, s, spec.gamma, o);
            out.value = res.report.value;
            out.x = res.point.x;
            return out;
        }
        case BoundKind::nlp: {
            NlpParams par = spec.nlp ? *spec.nlp : nlp_trace_params(inst);
            double gamma = spec.gamma;
            NlpOptions o;
            o.tol = tol;
            o.weight = weight;
            o.tilt = tilt;
            BoundReport rep = solve_nlp(inst, s, par, gamma, o);
            out.value = rep.value;
            out.x = rep.optimizer_x;
            return out;
        }
        default:
            throw InvalidParam("tilted solve: unsupported bound kind");
    }
}

inline BoundKind plain_kind_of(BoundKind k) {
    if (k == BoundKind::cbqp) return BoundKind::bqp;
    if (k == BoundKind::cnlp) return BoundKind::nlp;
    return k;
}

} // namespace detail

// max{ weight f(vars) - tilt'vars } over the bound's own feasible set; for
// complementary bounds the variable is the complement-side y and the value
// includes the weighted ldet C shift.
inline TiltedSolution solve_tilted(const CovarianceInstance& inst, int s,
                                   const TiltedBoundQuery& query, double tol = 1e-7) {
    if (query.weight < 0.0) throw InvalidParam("tilted solve: weight must be nonnegative");
    const Vec tilt = query.tilt.empty() ? Vec(inst.n(), 0.0) : query.tilt;
    if (!is_complementary(query.bound.kind))
        return detail::solve_tilted_plain(inst, s, query.bound, query.weight, tilt, tol);

    auto [comp, shift] = complement(inst);
    BoundSpec sub = query.bound;
    sub.kind = detail::plain_kind_of(query.bound.kind);
    TiltedSolution out = detail::solve_tilted_plain(comp, inst.n() - s, sub, query.weight, tilt, tol);
    out.value += query.weight * shift;
    return out;
}

namespace detail {

// Subproblem in x-view (cardinality s): max{ w f(x) - tilt'x }.
inline TiltedSolution tilted_x_view(const CovarianceInstance& inst, int s, const BoundSpec& spec,
                                    double w, const Vec& tilt, double tol) {
    const int n = inst.n();
    if (!is_complementary(spec.kind)) {
        TiltedBoundQuery q{spec, w, tilt};
        return solve_tilted(inst, s, q, tol);
    }
    // comp bound viewed through x = e - y
    Vec neg(n);
    for (int i = 0; i < n; ++i) neg[i] = -tilt[i];
    TiltedBoundQuery q{spec, w, neg};
    TiltedSolution sub = solve_tilted(inst, s, q, tol); // y-space, shift included
    TiltedSolution out;
    double te = 0.0;
    for (double t : tilt) te += t;
    out.value = sub.value - te;
    out.x.resize(n);
    for (int i = 0; i < n; ++i) out.x[i] = 1.0 - sub.x[i];
    return out;
}

// Subproblem in y-view (cardinality n-s): max{ w f_B(y) - tilt'y }.
inline TiltedSolution tilted_y_view(const CovarianceInstance& inst, int s, const BoundSpec& spec,
                                    double w, const Vec& tilt, double tol) {
    const int n = inst.n();
    if (is_complementary(spec.kind)) {
        TiltedBoundQuery q{spec, w, tilt};
        return solve_tilted(inst, s, q, tol); // already in y coordinates
    }
    Vec neg(n);
    for (int i = 0; i < n; ++i) neg[i] = -tilt[i];
    TiltedBoundQuery q{spec, w, neg};
    TiltedSolution sub = solve_tilted(inst, s, q, tol); // x-space
    TiltedSolution out;
    double te = 0.0;
    for (double t : tilt) te += t;
    out.value = sub.value - te;
    out.x.resize(n);
    for (int i = 0; i < n; ++i) out.x[i] = 1.0 - sub.x[i];
    return out;
}

} // namespace detail

struct DualEvaluation {
    double value = 0.0;
    Vec subgradient; // e - x* - y*
    Vec x_a, y_b;
    double sub_a = 0.0, sub_b = 0.0;
};

// Lagrangian dual value at multiplier pi with weights (alpha, 1-alpha).
inline DualEvaluation dual_eval(const CovarianceInstance& inst, int s, const DualTilt& dt,
                                const BoundSpec& boundA, const BoundSpec& boundB,
                                double tol = 1e-7) {
    if (dt.alpha < 0.0 || dt.alpha > 1.0) throw InvalidParam("mix weight must lie in [0,1]");
    const int n = inst.n();
    const Vec pi = dt.pi.empty() ? Vec(n, 0.0) : dt.pi;

    TiltedSolution a = detail::tilted_x_view(inst, s, boundA, dt.alpha, pi, tol);
    TiltedSolution b = detail::tilted_y_view(inst, s, boundB, 1.0 - dt.alpha, pi, tol);

    DualEvaluation out;
    double pie = 0.0;
    for (double v : pi) pie += v;
    out.value = pie + a.value + b.value;
    out.sub_a = a.value;
    out.sub_b = b.value;
    out.x_a = a.x;
    out.y_b = b.x;
    out.subgradient.resize(n);
    for (int i = 0; i < n; ++i) out.subgradient[i] = 1.0 - a.x[i] - b.x[i];
    return out;
}

struct MixTraceRow {
    int t;
    double dual;
    double g_norm;
    double step;
};

struct SubgradientResult {
    BoundReport report; // best (lowest) dual value
    Vec pi;             // multiplier achieving it
    double value_at_zero = 0.0;
    std::vector<MixTraceRow> trace;
};

// Projected subgradient descent on pi with Polyak-style initial step and
// 1/sqrt(t) decay; the best (lowest) certified dual value is returned.
inline SubgradientResult subgradient_optimize(const CovarianceInstance& inst, int s, double alpha,
                                              const BoundSpec& boundA, const BoundSpec& boundB,
                                              int iters = 200, double tol = 1e-7) {
    if (iters < 1) throw InvalidParam("subgradient_optimize: iters must be >= 1");
    const int n = inst.n();
    const auto t0 = std::chrono::steady_clock::now();

    const double lb = greedy_heuristic(inst, s).first;

    DualTilt dt;
    dt.pi.assign(n, 0.0);
    dt.alpha = alpha;
    DualEvaluation cur = dual_eval(inst, s, dt, boundA, boundB, tol);

    SubgradientResult out;
    out.value_at_zero = cur.value;
    out.pi = dt.pi;
    double best = cur.value;
    Vec best_x = cur.x_a;
    out.trace.push_back({0, cur.value, inf_norm(cur.subgradient), 0.0});

    double g2 = dot(cur.subgradient, cur.subgradient);
    if (g2 > 1e-24) {
        double eta0 = (cur.value - lb) / g2;
        if (!(eta0 > 0.0) || !std::isfinite(eta0)) eta0 = 1e-3;
        for (int t = 0; t < iters; ++t) {
            const double eta = eta0 / std::sqrt(static_cast<double>(t + 1));
            for (int i = 0; i < n; ++i) dt.pi[i] -= eta * cur.subgradient[i];
            cur = dual_eval(inst, s, dt, boundA, boundB, tol);
            out.trace.push_back({t + 1, cur.value, inf_norm(cur.subgradient), eta});
            if (cur.value < best) {
                best = cur.value;
                out.pi = dt.pi;
                best_x = cur.x_a;
            }
            if (dot(cur.subgradient, cur.subgradient) <= 1e-24) break; // linkage satisfied
        }
    }

    out.report.value = best;
    out.report.primal_value = best;
    out.report.dual_value = best;
    out.report.optimizer_x = best_x;
    out.report.params.alpha = alpha;
    out.report.iterations = static_cast<int>(out.trace.size()) - 1;
    out.report.kkt_residual = out.trace.back().g_norm;
    out.report.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

} // namespace mesp
