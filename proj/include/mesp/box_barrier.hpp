#pragma once

// Logarithmic-barrier path following for concave maximization over the
// box-capped simplex slice { 0 <= x <= e, e'x = s }. The single equality is
// kept in the Newton KKT system; bound constraints enter through barrier
// terms mu*(log x_i + log(1 - x_i)). Used by the linx and NLP bounds.

#include <cmath>
#include <functional>
#include <optional>

#include "mesp/errors.hpp"
#include "mesp/linalg.hpp"
#include "mesp/report.hpp"

namespace mesp {

// Feasibility gate for the slice { 0 <= x <= e, e'x = s }.
inline void check_box_simplex(const Vec& x, int n, double s, double tol = 1e-7) {
    if (static_cast<int>(x.size()) != n) throw DimensionMismatch("x has wrong length");
    double sum = 0.0;
    for (double xi : x) {
        if (xi < -tol || xi > 1.0 + tol) throw Infeasible("x leaves the unit box");
        sum += xi;
    }
    if (std::fabs(sum - s) > tol) throw Infeasible("e'x != s");
}

struct BoxBarrierProblem {
    int n = 0;
    double s = 0.0;
    // Objective value at strictly interior x; nullopt when x leaves the
    // objective's domain (e.g. a log-det argument loses definiteness).
    std::function<std::optional<double>(const Vec&)> value;
    // Gradient and Hessian of the objective (barrier excluded).
    std::function<void(const Vec&, Vec&, Matrix&)> derivatives;
};

struct BoxBarrierOptions {
    double mu0 = 1.0;
    double mu_factor = 0.1;
    double mu_end = 1e-9;
    double tol = 1e-7;                // target KKT residual
    int max_inner = 40;               // Newton steps per barrier stage
    double boundary_fraction = 0.99;  // fraction-to-boundary step cap
    bool monitor_concavity = false;   // throw ConcavityViolation on indefinite Newton systems
    Vec x0;                           // optional strictly feasible start
};

struct BoxBarrierResult {
    Vec x;
    double objective = 0.0;  // barrier-free objective at x
    double gap_margin = 0.0; // certified distance to the constrained supremum
    int iterations = 0;
    double kkt_residual = 0.0;
    bool hit_iteration_cap = false;
};

namespace detail {

inline double barrier_value(const Vec& x, double mu) {
    double b = 0.0;
    for (double xi : x) b += std::log(xi) + std::log(1.0 - xi);
    return mu * b;
}

} // namespace detail

inline BoxBarrierResult solve_box_barrier(const BoxBarrierProblem& prob, BoxBarrierOptions opt) {
    const int n = prob.n;
    const double s = prob.s;
    if (n < 1 || s <= 0.0 || s >= static_cast<double>(n))
        throw InvalidParam("box barrier: need n >= 1 and 0 < s < n");

    // mu_end small enough that the certified gap 2 n mu stays under tol/2.
    opt.mu_end = std::min(opt.mu_end, opt.tol / (8.0 * n));

    Vec x = opt.x0.empty() ? Vec(n, s / n) : opt.x0;
    for (double xi : x)
        if (!(xi > 0.0 && xi < 1.0)) throw InvalidParam("box barrier: start not strictly interior");

    // Newton runs on the slice { e'delta = 0 }: reducing by V keeps the
    // system positive definite whenever the objective is concave on the
    // feasible affine subspace (it need not be concave on the whole box).
    const Matrix V = e_orthobasis(n);
    Vec g(n), gphi(n), delta(n), gr(n - 1), u(n - 1);
    Matrix H(n, n);
    int total_iters = 0;
    double kkt = std::numeric_limits<double>::infinity();
    bool capped = false;

    auto phi_value = [&](const Vec& xx, double mu) -> std::optional<double> {
        auto v = prob.value(xx);
        if (!v) return std::nullopt;
        return *v + detail::barrier_value(xx, mu);
    };

    double mu = opt.mu0;
    bool last_stage = false;
    while (true) {
        if (mu <= opt.mu_end * (1.0 + 1e-12)) {
            mu = opt.mu_end;
            last_stage = true;
        }
        const int inner_cap = last_stage ? opt.max_inner : std::max(6, opt.max_inner / 4);
        for (int it = 0; it < inner_cap; ++it) {
            prob.derivatives(x, g, H);
            // A = -(H_f + H_barrier), reduced onto the slice as V'AV.
            Matrix A(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) A(i, j) = -H(i, j);
            for (int i = 0; i < n; ++i)
                A(i, i) += mu / (x[i] * x[i]) + mu / ((1.0 - x[i]) * (1.0 - x[i]));
            for (int i = 0; i < n; ++i) gphi[i] = g[i] + mu / x[i] - mu / (1.0 - x[i]);

            Matrix Ar = matmul(transpose(V), matmul(A, V));
            auto L = try_cholesky(SymMatrix::from_matrix(Ar, 1e-6));
            if (!L) {
                // Escalating ridge at round-off scale: absorbs the
                // conditioning loss near active bounds (pivot noise is
                // eps*maxdiag) without masking real positive curvature,
                // which surfaces in the early barrier stages.
                double dmax = 1.0;
                for (int k = 0; k < n - 1; ++k) dmax = std::max(dmax, Ar(k, k));
                for (double rho : {1e-15, 1e-13, 1e-11}) {
                    Matrix Areg = Ar;
                    for (int k = 0; k < n - 1; ++k) Areg(k, k) += rho * dmax;
                    L = try_cholesky(SymMatrix::from_matrix(Areg, 1e-6));
                    if (L) break;
                }
                if (!L) {
                    if (opt.monitor_concavity) throw ConcavityViolation();
                    throw Error("box barrier: reduced Newton system not positive definite");
                }
            }
            for (int k = 0; k < n - 1; ++k) {
                double t = 0.0;
                for (int i = 0; i < n; ++i) t += V(i, k) * gphi[i];
                gr[k] = t;
            }
            u = chol_solve(*L, gr);
            for (int i = 0; i < n; ++i) {
                double t = 0.0;
                for (int k = 0; k < n - 1; ++k) t += V(i, k) * u[k];
                delta[i] = t;
            }

            // Newton decrement: affine-invariant optimality measure of the
            // barrier subproblem; lambda^2 bounds the subproblem gap.
            double decrement2 = 0.0;
            for (int k = 0; k < n - 1; ++k) decrement2 += u[k] * gr[k];
            decrement2 = std::max(decrement2, 0.0);
            kkt = decrement2; // certified suboptimality of the barrier subproblem

            const double stage_stop2 = last_stage ? 0.01 * mu : 0.01;
            if (decrement2 <= stage_stop2) break;

            // Fraction-to-boundary cap, then backtrack on the merit value.
            double theta = 1.0;
            for (int i = 0; i < n; ++i) {
                if (delta[i] < 0.0) theta = std::min(theta, -opt.boundary_fraction * x[i] / delta[i]);
                if (delta[i] > 0.0)
                    theta = std::min(theta, opt.boundary_fraction * (1.0 - x[i]) / delta[i]);
            }
            auto phi0 = phi_value(x, mu);
            Vec trial(n);
            bool moved = false;
            for (int bt = 0; bt < 60 && !moved; ++bt) {
                for (int i = 0; i < n; ++i) trial[i] = x[i] + theta * delta[i];
                auto phi1 = phi_value(trial, mu);
                // Armijo ascent with a floor for log-det evaluation noise.
                if (phi1 && (!phi0 || *phi1 >= *phi0 + 0.01 * theta * decrement2 -
                                          1e-10 * (1.0 + std::fabs(*phi0)))) {
                    x = trial;
                    moved = true;
                } else {
                    theta *= 0.5;
                }
            }
            ++total_iters;
            if (!moved) break; // stalled; kkt reflects the residual reached
            if (it + 1 == inner_cap && last_stage) capped = true;
        }
        if (last_stage) break;
        mu *= opt.mu_factor;
    }

    BoxBarrierResult res;
    res.x = x;
    res.objective = *prob.value(x);
    res.gap_margin = 2.0 * (2.0 * n) * opt.mu_end; // 2n log terms, factor-2 slack
    res.iterations = total_iters;
    res.kkt_residual = std::max(kkt, 2.0 * n * opt.mu_end);
    res.hit_iteration_cap = capped && kkt > 0.01 * opt.mu_end;
    return res;
}

} // namespace mesp
