#pragma once

// The NLP bound and its mixed variant:
//   f(x) = ldet( gamma X^{p/2} (C - D) X^{p/2} + (gamma D)^x ) - s log gamma
// over { e'x = s, 0 <= x <= e }, with D from the trace strategy (diag(D)
// dominating C with minimum trace) and p defaulting to all ones. Solved by
// the long-step path-following barrier method; concavity is monitored at
// runtime rather than assumed.

#include <chrono>
#include <cmath>
#include <optional>

#include "mesp/box_barrier.hpp"
#include "mesp/errors.hpp"
#include "mesp/instance.hpp"
#include "mesp/report.hpp"

namespace mesp {

struct NlpParams {
    Vec D;               // positive diagonal with diag(D) - C PSD
    Vec p;               // exponents; empty means the concavity rule below
    double gamma = 0.0;  // 0 means not chosen yet

    double d_min() const {
        double m = D[0];
        for (double v : D) m = std::min(m, v);
        return m;
    }
    double d_max() const {
        double m = D[0];
        for (double v : D) m = std::max(m, v);
        return m;
    }
};

// Exponents making the bound provably concave at this gamma. Factoring
// (gamma D)^x out of the log-det leaves t'x + h(m(x)) with h concave and
// nonincreasing and m_i(x) = x^{p_i} exp(-t_i x), t_i = log(gamma d_i); f is
// concave when every m_i is convex on [0,1], which holds iff
// p_i - sqrt(p_i) >= t_i. For t_i <= 0 any p_i >= 1 works.
inline Vec nlp_exponents(const NlpParams& par, double gamma) {
    Vec p(par.D.size());
    for (size_t i = 0; i < par.D.size(); ++i) {
        const double t = std::log(gamma * par.D[i]);
        if (t <= 0.0) {
            p[i] = 1.0;
        } else {
            const double r = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t));
            p[i] = r * r;
        }
    }
    return p;
}

inline Vec resolve_nlp_exponents(const NlpParams& par, double gamma) {
    return par.p.empty() ? nlp_exponents(par, gamma) : par.p;
}

inline void check_nlp_params(const CovarianceInstance& inst, const NlpParams& par) {
    const int n = inst.n();
    if (static_cast<int>(par.D.size()) != n) throw InvalidParam("nlp params have wrong length");
    if (!par.p.empty() && static_cast<int>(par.p.size()) != n)
        throw InvalidParam("nlp exponent vector has wrong length");
    for (double d : par.D)
        if (!(d > 0.0)) throw InvalidParam("nlp D must be positive");
    SymMatrix slack(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) slack.set(i, j, (i == j ? par.D[i] : 0.0) - inst.C()(i, j));
    if (min_eigenvalue(slack) < -1e-8 * std::max(1.0, inf_norm(inst.C())))
        throw InvalidParam("diag(D) - C is not positive semidefinite");
}

// ---------------------------------------------------------------------------
// NLP-Trace strategy: minimize e'd subject to diag(d) - C PSD, via a barrier
// Newton method on e'd - mu ldet(diag(d) - C).
// ---------------------------------------------------------------------------

inline NlpParams nlp_trace_params(const CovarianceInstance& inst, int max_newton = 400) {
    const int n = inst.n();
    const double scale = std::max(1.0, inf_norm(inst.C()));

    Vec d(n);
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) row += std::fabs(inst.C()(i, j));
        d[i] = inst.C()(i, i) + row; // diagonally dominant start
    }

    auto slack_of = [&](const Vec& dd) {
        SymMatrix S(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) S.set(i, j, (i == j ? dd[i] : 0.0) - inst.C()(i, j));
        return S;
    };

    int iters = 0;
    double mu = scale;
    const double mu_end = 1e-9 * scale;
    bool last = false;
    while (true) {
        if (mu <= mu_end * (1.0 + 1e-12)) {
            mu = mu_end;
            last = true;
        }
        for (int it = 0; it < (last ? 40 : 8); ++it) {
            if (iters++ > max_newton) throw SolveFailed("nlp_trace_params: Newton budget exhausted");
            SymMatrix S = slack_of(d);
            SymMatrix M = inverse_spd(S);
            Vec g(n);
            double gn = 0.0;
            for (int i = 0; i < n; ++i) {
                g[i] = 1.0 - mu * M(i, i);
                gn = std::max(gn, std::fabs(g[i]));
            }
            if (gn <= (last ? 1e-11 * scale : 0.05 * mu)) break;
            SymMatrix H = hadamard(M, M); // Hessian / mu
            Vec delta = solve(H, g);
            for (double& v : delta) v = -v / mu;
            double theta = 1.0;
            for (int bt = 0; bt < 60; ++bt) {
                Vec trial = d;
                for (int i = 0; i < n; ++i) trial[i] += theta * delta[i];
                if (try_cholesky(slack_of(trial))) {
                    d = trial;
                    break;
                }
                theta *= 0.5;
            }
        }
        if (last) break;
        mu *= 0.1;
    }

    NlpParams par;
    par.D = d;
    par.gamma = 0.0; // chosen later, e.g. by gamma_grid
    return par;
}

// ---------------------------------------------------------------------------
// Objective and tailored derivatives.
// ---------------------------------------------------------------------------

inline SymMatrix nlp_F(const CovarianceInstance& inst, const NlpParams& par, double gamma,
                       const Vec& x) {
    const int n = inst.n();
    const Vec p = resolve_nlp_exponents(par, gamma);
    SymMatrix F(n);
    Vec u(n);
    for (int i = 0; i < n; ++i) u[i] = std::pow(x[i], 0.5 * p[i]);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double w = inst.C()(i, j) - (i == j ? par.D[i] : 0.0);
            double v = gamma * u[i] * u[j] * w;
            if (i == j) v += std::exp(x[i] * std::log(gamma * par.D[i]));
            F.set(i, j, v);
        }
    }
    return F;
}

inline double nlp_objective(const CovarianceInstance& inst, int s, const NlpParams& par,
                            double gamma, const Vec& x) {
    if (!(gamma > 0.0)) throw InvalidParam("gamma must be positive");
    check_box_simplex(x, inst.n(), static_cast<double>(s));
    return ldet(nlp_F(inst, par, gamma, x)) - s * std::log(gamma);
}

namespace detail {

// Gradient and Hessian of ldet F(x) for p = e (u_i = sqrt(x_i)); x strictly
// interior. W = C - D (negative semidefinite), B = (gamma D)^x.
struct NlpDerivs {
    Vec g;
    Matrix H;
};

inline NlpDerivs nlp_ldet_derivatives(const CovarianceInstance& inst, const NlpParams& par,
                                      double gamma, const Vec& x) {
    const int n = inst.n();
    const Vec pexp = resolve_nlp_exponents(par, gamma);
    Matrix W(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) W(i, j) = inst.C()(i, j) - (i == j ? par.D[i] : 0.0);

    Vec u(n), up(n), upp(n), t(n), B(n);
    for (int i = 0; i < n; ++i) {
        const double q = 0.5 * pexp[i];
        u[i] = std::pow(x[i], q);
        up[i] = q * std::pow(x[i], q - 1.0);
        upp[i] = q * (q - 1.0) * std::pow(x[i], q - 2.0);
        t[i] = std::log(gamma * par.D[i]);
        B[i] = std::exp(x[i] * t[i]);
    }

    SymMatrix F(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double v = gamma * u[i] * u[j] * W(i, j);
            if (i == j) v += B[i];
            F.set(i, j, v);
        }
    SymMatrix M = inverse_spd(F);

    // K = W U M, P = M U W = K', L = K U W
    Matrix WU = W;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) WU(i, j) *= u[j];
    Matrix K = matmul(WU, M.to_matrix());
    Matrix UW = W;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) UW(i, j) *= u[i];
    Matrix L = matmul(K, UW);

    NlpDerivs out;
    out.g.assign(n, 0.0);
    out.H = Matrix(n, n);
    Vec a(n), b(n);
    for (int i = 0; i < n; ++i) {
        a[i] = gamma * up[i];
        b[i] = t[i] * B[i];
        out.g[i] = 2.0 * a[i] * K(i, i) + b[i] * M(i, i); // (MUW)_ii = K_ii
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double tr = a[i] * a[j] * 2.0 * (K(i, j) * K(j, i) + M(i, j) * L(i, j)) +
                        2.0 * a[i] * b[j] * K(i, j) * M(i, j) +
                        2.0 * a[j] * b[i] * K(j, i) * M(i, j) + b[i] * b[j] * M(i, j) * M(i, j);
            double second;
            if (i == j) {
                second = 2.0 * gamma * upp[i] * K(i, i) +
                         (2.0 * gamma * up[i] * up[i] * W(i, i) + t[i] * t[i] * B[i]) * M(i, i);
            } else {
                second = 2.0 * gamma * up[i] * up[j] * W(i, j) * M(i, j);
            }
            out.H(i, j) = second - tr;
        }
    }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Solvers.
// ---------------------------------------------------------------------------

struct NlpOptions {
    double tol = 1e-7;
    double weight = 1.0;
    Vec tilt;
    Vec x0;
};

inline BoundReport solve_nlp(const CovarianceInstance& inst, int s, const NlpParams& par,
                             double gamma, const NlpOptions& opt = {}) {
    check_nlp_params(inst, par);
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

    if (s == 0 || s == n) {
        Vec x(n, s == 0 ? 0.0 : 1.0);
        rep.optimizer_x = x;
        rep.primal_value = opt.weight * (s == 0 ? 0.0 : inst.ldetC()) + tilt_term(x);
        rep.value = rep.dual_value = rep.primal_value;
        rep.kkt_residual = 0.0;
        return rep;
    }

    const double w = opt.weight;
    BoxBarrierProblem prob;
    prob.n = n;
    prob.s = static_cast<double>(s);
    prob.value = [&](const Vec& x) -> std::optional<double> {
        auto L = try_cholesky(nlp_F(inst, par, gamma, x));
        if (!L) return std::nullopt;
        return w * (ldet_from_factor(*L) - s * std::log(gamma)) + tilt_term(x);
    };
    prob.derivatives = [&](const Vec& x, Vec& g, Matrix& H) {
        auto der = detail::nlp_ldet_derivatives(inst, par, gamma, x);
        for (int i = 0; i < n; ++i) g[i] = w * der.g[i] - tilt[i];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) H(i, j) = w * der.H(i, j);
    };

    BoxBarrierOptions bopt;
    bopt.tol = opt.tol;
    bopt.monitor_concavity = true;
    bopt.boundary_fraction = 0.99; // long steps
    bopt.x0 = opt.x0;
    BoxBarrierResult sol = solve_box_barrier(prob, bopt);

    rep.optimizer_x = sol.x;
    rep.primal_value = sol.objective;
    rep.value = sol.objective + sol.gap_margin;
    rep.dual_value = rep.value; // barrier duality-gap certificate
    rep.iterations = sol.iterations;
    rep.kkt_residual = sol.kkt_residual;
    if (sol.hit_iteration_cap) rep.flags.insert(SolveFlag::max_iterations);
    rep.wall_time_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// Log-uniform scan of [1/d_max, 1/d_min]; returns the gamma minimizing the
// bound and its value.
struct GammaGridResult {
    double gamma = 1.0;
    double value = 0.0;
    Vec grid;
    Vec values;
};

inline GammaGridResult gamma_grid(const CovarianceInstance& inst, int s, const NlpParams& par,
                                  int count = 100, double tol = 1e-7) {
    check_nlp_params(inst, par);
    GammaGridResult out;
    const double lo = 1.0 / par.d_max();
    const double hi = 1.0 / par.d_min();
    if (!(hi > lo * (1.0 + 1e-12))) {
        out.gamma = lo;
        NlpOptions o;
        o.tol = tol;
        out.value = solve_nlp(inst, s, par, lo, o).value;
        out.grid = {lo};
        out.values = {out.value};
        return out;
    }
    out.value = std::numeric_limits<double>::infinity();
    for (int k = 0; k < count; ++k) {
        const double f = (count == 1) ? 0.0 : static_cast<double>(k) / (count - 1);
        const double g = std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)));
        NlpOptions o;
        o.tol = tol;
        double v = solve_nlp(inst, s, par, g, o).value;
        out.grid.push_back(g);
        out.values.push_back(v);
        if (v < out.value) {
            out.value = v;
            out.gamma = g;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mixed NLP bound: maximize
//   (1-alpha) f_nlp(C, s; x) + alpha (f_nlp(C^{-1}, n-s; e-x) + ldet C)
// over the same slice; params2 lives on the complement instance.
// ---------------------------------------------------------------------------

inline BoundReport solve_mnlp(const CovarianceInstance& inst, int s, double alpha,
                              const NlpParams& par1, double gamma1, const NlpParams& par2,
                              double gamma2, double tol = 1e-7) {
    if (alpha < 0.0 || alpha > 1.0) throw InvalidParam("alpha must lie in [0,1]");
    const int n = inst.n();
    auto [comp, shift] = complement(inst);
    check_nlp_params(inst, par1);
    check_nlp_params(comp, par2);
    if (!(gamma1 > 0.0) || !(gamma2 > 0.0)) throw InvalidParam("gamma must be positive");
    const auto t0 = std::chrono::steady_clock::now();

    BoundReport rep;
    rep.params = MixParams{alpha, std::log(gamma1), std::log(gamma2)};

    if (s == 0 || s == n) {
        Vec x(n, s == 0 ? 0.0 : 1.0);
        rep.optimizer_x = x;
        rep.primal_value = (s == 0) ? 0.0 : inst.ldetC();
        rep.value = rep.dual_value = rep.primal_value;
        rep.kkt_residual = 0.0;
        return rep;
    }

    const double w1 = 1.0 - alpha, w2 = alpha;
    Vec y(n);
    auto to_y = [&](const Vec& x) {
        for (int i = 0; i < n; ++i) y[i] = 1.0 - x[i];
    };

    BoxBarrierProblem prob;
    prob.n = n;
    prob.s = static_cast<double>(s);
    prob.value = [&](const Vec& x) -> std::optional<double> {
        double val = 0.0;
        if (w1 > 0.0) {
            auto L = try_cholesky(nlp_F(inst, par1, gamma1, x));
            if (!L) return std::nullopt;
            val += w1 * (ldet_from_factor(*L) - s * std::log(gamma1));
        }
        if (w2 > 0.0) {
            to_y(x);
            auto L = try_cholesky(nlp_F(comp, par2, gamma2, y));
            if (!L) return std::nullopt;
            val += w2 * (ldet_from_factor(*L) - (n - s) * std::log(gamma2) + shift);
        }
        return val;
    };
    prob.derivatives = [&](const Vec& x, Vec& g, Matrix& H) {
        std::fill(g.begin(), g.end(), 0.0);
        for (auto& v : H.data()) v = 0.0;
        if (w1 > 0.0) {
            auto der = detail::nlp_ldet_derivatives(inst, par1, gamma1, x);
            for (int i = 0; i < n; ++i) g[i] += w1 * der.g[i];
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) H(i, j) += w1 * der.H(i, j);
        }
        if (w2 > 0.0) {
            to_y(x);
            auto der = detail::nlp_ldet_derivatives(comp, par2, gamma2, y);
            for (int i = 0; i < n; ++i) g[i] -= w2 * der.g[i];
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) H(i, j) += w2 * der.H(i, j);
        }
    };

    BoxBarrierOptions bopt;
    bopt.tol = tol;
    bopt.monitor_concavity = true;
    bopt.boundary_fraction = 0.99;
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

struct AlphaGridResult {
    double alpha = 0.0;
    double value = 0.0;
    Vec grid;
    Vec values;
};

// The 11-point alpha grid 0, 0.1, ..., 1.0; first index wins ties.
inline AlphaGridResult alpha_grid_mnlp(const CovarianceInstance& inst, int s, const NlpParams& par1,
                                       double gamma1, const NlpParams& par2, double gamma2,
                                       double tol = 1e-7) {
    AlphaGridResult out;
    out.value = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 10; ++i) {
        const double a = 0.1 * i;
        double v = solve_mnlp(inst, s, a, par1, gamma1, par2, gamma2, tol).value;
        out.grid.push_back(a);
        out.values.push_back(v);
        if (v < out.value) {
            out.value = v;
            out.alpha = a;
        }
    }
    return out;
}

} // namespace mesp
