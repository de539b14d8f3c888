#pragma once

// The linx bound: maximize (1/2)(ldet F(gamma,x) - s log gamma) with
// F(gamma,x) = gamma C diag(x) C + I - diag(x) over { e'x = s, 0 <= x <= e },
// plus Newton tuning of psi = log gamma along the convex H(psi).

#include <chrono>
#include <cmath>
#include <optional>
#include <vector>

#include "mesp/box_barrier.hpp"
#include "mesp/errors.hpp"
#include "mesp/instance.hpp"
#include "mesp/report.hpp"

namespace mesp {

// ---------------------------------------------------------------------------
// Objective pieces.
// ---------------------------------------------------------------------------

inline SymMatrix linx_F(const CovarianceInstance& inst, double gamma, const Vec& x) {
    const int n = inst.n();
    const SymMatrix& C = inst.C();
    Matrix CD = C.to_matrix(); // C diag(x)
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) CD(i, j) *= x[j];
    Matrix F = matmul(CD, C.to_matrix());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) F(i, j) *= gamma;
    for (int i = 0; i < n; ++i) F(i, i) += 1.0 - x[i];
    return SymMatrix::from_matrix(F, 1e-6);
}

inline double linx_objective(const CovarianceInstance& inst, int s, double gamma, const Vec& x) {
    if (!(gamma > 0.0)) throw InvalidParam("gamma must be positive");
    check_box_simplex(x, inst.n(), static_cast<double>(s));
    return 0.5 * (ldet(linx_F(inst, gamma, x)) - s * std::log(gamma));
}

// g_i = (1/2) (gamma (C F^{-1} C)_{ii} - (F^{-1})_{ii}), the derivative of the
// linx objective in x.
inline Vec linx_gradient(const CovarianceInstance& inst, int s, double gamma, const Vec& x) {
    if (!(gamma > 0.0)) throw InvalidParam("gamma must be positive");
    check_box_simplex(x, inst.n(), static_cast<double>(s));
    const int n = inst.n();
    SymMatrix F = linx_F(inst, gamma, x);
    SymMatrix M = inverse_spd(F);
    Matrix MC = matmul(M.to_matrix(), inst.C().to_matrix());
    Vec g(n);
    for (int i = 0; i < n; ++i) {
        double cmc = 0.0;
        for (int k = 0; k < n; ++k) cmc += inst.C()(i, k) * MC(k, i);
        g[i] = 0.5 * (gamma * cmc - M(i, i));
    }
    return g;
}

// A validated snapshot of the linx relaxation at (gamma, x): the matrix
// F(gamma, x), the bound value, and its gradient.
struct LinxState {
    Vec x;
    double gamma = 1.0;
    double value = 0.0;
    Vec gradient;
    SymMatrix F;
};

inline LinxState make_linx_state(const CovarianceInstance& inst, int s, double gamma,
                                 const Vec& x) {
    LinxState st;
    st.x = x;
    st.gamma = gamma;
    st.F = linx_F(inst, gamma, x);
    st.value = linx_objective(inst, s, gamma, x); // validates the box/simplex slice
    st.gradient = linx_gradient(inst, s, gamma, x);
    if (!try_cholesky(st.F)) throw NotPositiveDefinite("linx state: F not positive definite");
    return st;
}

// ---------------------------------------------------------------------------
// Solver. `weight` scales the concave objective and `tilt` subtracts a linear
// term tilt'x; both default to the plain bound.
// ---------------------------------------------------------------------------

struct LinxOptions {
    double tol = 1e-7;
    double weight = 1.0;
    Vec tilt;    // empty means zero
    Vec x0;      // optional strictly feasible start
};

inline BoundReport solve_linx(const CovarianceInstance& inst, int s, double gamma,
                              const LinxOptions& opt = {}) {
    if (!(gamma > 0.0)) throw InvalidParam("gamma must be positive");
    if (opt.weight < 0.0) throw InvalidParam("weight must be nonnegative");
    const int n = inst.n();
    if (s < 0 || s > n) throw InvalidParam("s out of range");
    const auto t0 = std::chrono::steady_clock::now();

    BoundReport rep;
    rep.params.psi1 = std::log(gamma);

    const Vec tilt = opt.tilt.empty() ? Vec(n, 0.0) : opt.tilt;
    auto tilt_term = [&](const Vec& x) {
        double t = 0.0;
        for (int i = 0; i < n; ++i) t -= tilt[i] * x[i];
        return t;
    };

    // s = 0 and s = n have a single feasible point.
    if (s == 0 || s == n) {
        Vec x(n, s == 0 ? 0.0 : 1.0);
        rep.optimizer_x = x;
        rep.primal_value = opt.weight * (s == 0 ? 0.0 : inst.ldetC()) + tilt_term(x);
        rep.value = rep.dual_value = rep.primal_value;
        rep.kkt_residual = 0.0;
        return rep;
    }

    const SymMatrix& C = inst.C();
    const double w = opt.weight;

    BoxBarrierProblem prob;
    prob.n = n;
    prob.s = static_cast<double>(s);
    prob.value = [&](const Vec& x) -> std::optional<double> {
        auto L = try_cholesky(linx_F(inst, gamma, x));
        if (!L) return std::nullopt;
        return w * 0.5 * (ldet_from_factor(*L) - s * std::log(gamma)) + tilt_term(x);
    };
    prob.derivatives = [&](const Vec& x, Vec& g, Matrix& H) {
        SymMatrix F = linx_F(inst, gamma, x);
        SymMatrix M = inverse_spd(F);
        Matrix Q = matmul(C.to_matrix(), M.to_matrix());           // C F^{-1}
        Matrix P = matmul(Q, C.to_matrix());                       // C F^{-1} C
        for (int i = 0; i < n; ++i) g[i] = w * 0.5 * (gamma * P(i, i) - M(i, i)) - tilt[i];
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                double t = gamma * gamma * P(i, j) * P(i, j) -
                           gamma * (Q(i, j) * Q(i, j) + Q(j, i) * Q(j, i)) + M(i, j) * M(i, j);
                H(i, j) = -w * 0.5 * t;
            }
        }
    };

    BoxBarrierOptions bopt;
    bopt.tol = opt.tol;
    bopt.mu_factor = 0.1; // mu <- mu/10 from 1 toward 1e-9
    bopt.x0 = opt.x0;
    BoxBarrierResult sol = solve_box_barrier(prob, bopt);

    rep.optimizer_x = sol.x;
    rep.primal_value = sol.objective;
    rep.value = sol.objective + sol.gap_margin;
    rep.dual_value = rep.value;
    rep.iterations = sol.iterations;
    rep.kkt_residual = sol.kkt_residual;
    if (sol.hit_iteration_cap) rep.flags.insert(SolveFlag::max_iterations);
    rep.wall_time_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// ---------------------------------------------------------------------------
// Newton tuning of psi = log gamma. G and H_G are the first and second
// derivatives of v(exp(psi), x*) in psi with x* held fixed; the minimized
// H(psi) is convex, and steps are damped because x*(psi) re-solves are noisy.
// ---------------------------------------------------------------------------

inline double linx_psi_residual(const CovarianceInstance& inst, int s, double psi, const Vec& xstar) {
    SymMatrix F = linx_F(inst, std::exp(psi), xstar);
    SymMatrix M = inverse_spd(F);
    double dot_ = 0.0; // F^{-1} . (I - diag(x*))
    for (int i = 0; i < inst.n(); ++i) dot_ += M(i, i) * (1.0 - xstar[i]);
    return static_cast<double>(inst.n() - s) - dot_;
}

inline double linx_psi_curvature(const CovarianceInstance& inst, int s, double psi, const Vec& xstar) {
    (void)s;
    const int n = inst.n();
    const double gamma = std::exp(psi);
    SymMatrix F = linx_F(inst, gamma, xstar);
    SymMatrix M = inverse_spd(F);
    Matrix CD = inst.C().to_matrix(); // C diag(x*) C
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) CD(i, j) *= xstar[j];
    Matrix K = matmul(CD, inst.C().to_matrix());
    Matrix MKM = matmul(M.to_matrix(), matmul(K, M.to_matrix()));
    double h = 0.0;
    for (int i = 0; i < n; ++i) h += (1.0 - xstar[i]) * MKM(i, i);
    return gamma * h;
}

struct LinxTuneResult {
    double psi = 0.0;
    double value = 0.0;      // linx bound value at psi
    double g_residual = 0.0; // |G(psi)| at the returned point
    int iterations = 0;
    std::set<SolveFlag> flags;
    BoundReport last_report;
    std::vector<std::pair<double, double>> trail; // (psi, value)
};

inline LinxTuneResult tune_linx_gamma(const CovarianceInstance& inst, int s, double psi0,
                                      double tol = 1e-6, int max_outer = 30) {
    if (!std::isfinite(psi0)) throw InvalidParam("psi0 must be finite");
    LinxTuneResult out;
    LinxOptions lopt;
    lopt.tol = std::min(1e-8, tol);

    double psi = psi0;
    BoundReport rep = solve_linx(inst, s, std::exp(psi), lopt);
    double value = rep.value;
    out.trail.push_back({psi, value});

    double G = linx_psi_residual(inst, s, psi, rep.optimizer_x);
    for (int k = 0; k < max_outer; ++k) {
        if (std::fabs(G) <= tol) break;
        double Hg = linx_psi_curvature(inst, s, psi, rep.optimizer_x);
        double step = (Hg > 1e-14) ? -G / Hg : -((G > 0.0) ? 1.0 : -1.0);
        if (!std::isfinite(step)) throw NonfiniteStep();
        step = std::clamp(step, -10.0, 10.0);

        // Damped step: halve until the tuned value does not increase.
        double theta = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 25; ++bt) {
            double trial_psi = psi + theta * step;
            BoundReport trial = solve_linx(inst, s, std::exp(trial_psi), lopt);
            if (trial.value <= value + 1e-12 * (1.0 + std::fabs(value))) {
                psi = trial_psi;
                rep = trial;
                value = trial.value;
                accepted = true;
                break;
            }
            theta *= 0.5;
        }
        ++out.iterations;
        out.trail.push_back({psi, value});
        if (!accepted) break; // no decrease available within damping budget
        G = linx_psi_residual(inst, s, psi, rep.optimizer_x);
    }
    if (std::fabs(G) > tol) out.flags.insert(SolveFlag::max_iterations);
    out.psi = psi;
    out.value = value;
    out.g_residual = std::fabs(G);
    rep.params.psi1 = psi;
    out.last_report = rep;
    return out;
}

} // namespace mesp
