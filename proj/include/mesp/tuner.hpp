#pragma once

// Parameter optimization for the mixed BQP bound: interior-point updates of
// the weight alpha (residual r, curvature surrogate b, damping factor
// tau_alpha = 0.9, barrier reduction tau_mu = 0.1), Newton updates of
// (psi_1, psi_2) from the diagonal 2x2 system, and the alternating driver.
// Every step re-solves the relaxation at the updated parameters.

#include <cmath>
#include <vector>

#include "mesp/bqp.hpp"

namespace mesp {

struct TunerState {
    int k = 0;
    double alpha = 0.5;
    double psi1 = 0.0;
    double psi2 = 0.0;
    double mu = 0.1;
    double b = 1.0; // curvature surrogate, kept positive
    double f1_star = 0.0;
    double f2_star = 0.0;
    double value = 0.0; // bound value at the current parameters
    double r = std::numeric_limits<double>::quiet_NaN();
    double g1 = std::numeric_limits<double>::quiet_NaN();
    double g2 = std::numeric_limits<double>::quiet_NaN();
    LiftedPoint last_point;
    BoundReport last_report;
    std::set<SolveFlag> flags;

    MixParams params() const { return MixParams{alpha, psi1, psi2}; }
};

struct TunerTraceRow {
    int k;
    double alpha, psi1, psi2, value, r, g_norm;
};

inline constexpr double kTunerTauAlpha = 0.9;
inline constexpr double kTunerTauMu = 0.1;

inline TunerState init_tuner_state(const CovarianceInstance& inst, int s, const MixParams& mp,
                                   double tol = 1e-7) {
    TunerState st;
    st.alpha = mp.alpha;
    st.psi1 = mp.psi1;
    st.psi2 = mp.psi2;
    MbqpOptions opt;
    opt.tol = tol;
    MbqpResult res = solve_mbqp(inst, s, st.params(), opt);
    st.f1_star = res.report.f1_star;
    st.f2_star = res.report.f2_star;
    st.value = res.report.value;
    st.last_point = res.point;
    st.last_report = res.report;
    return st;
}

// One interior-point update of alpha at fixed (psi1, psi2).
inline TunerState alpha_step(const TunerState& state, const CovarianceInstance& inst, int s,
                             double tol = 1e-7) {
    TunerState st = state;
    const double a = st.alpha;
    if (!(a > 0.0 && a < 1.0)) throw InvalidParam("alpha_step requires alpha in (0,1)");

    const double r = -st.f1_star + st.f2_star - st.mu / a + st.mu / (1.0 - a);
    const double denom = st.b + st.mu / (a * a) + st.mu / ((1.0 - a) * (1.0 - a));
    const double delta = -r / denom;
    st.r = r;

    double theta_cap = 1.0;
    if (delta > 0.0) theta_cap = std::min(theta_cap, (1.0 - a) / delta);
    if (delta < 0.0) theta_cap = std::min(theta_cap, a / (-delta));
    const double theta = kTunerTauAlpha * theta_cap;
    const double a_next = a + theta * delta;

    ++st.k;
    if (std::fabs(a_next - a) < 1e-15) return st; // stationary residual, nothing to re-solve

    MbqpOptions opt;
    opt.tol = tol;
    MixParams mp{a_next, st.psi1, st.psi2};
    MbqpResult res;
    try {
        res = solve_mbqp(inst, s, mp, opt);
    } catch (const Error& e) {
        throw SolveFailed(std::string("alpha_step: relaxation solve failed: ") + e.what());
    }

    const double d1 = (res.report.f1_star - st.f1_star) / (a_next - a);
    const double d2 = (res.report.f2_star - st.f2_star) / (a_next - a);
    if (-d1 + d2 > 0.0) st.b = -d1 + d2;

    st.alpha = a_next;
    st.f1_star = res.report.f1_star;
    st.f2_star = res.report.f2_star;
    st.value = res.report.value;
    st.last_point = res.point;
    st.last_report = res.report;
    return st;
}

// Entries of the diagonal Newton system for (psi1, psi2) at the current point.
struct PsiSystem {
    double g1, g2; // residuals
    double h1, h2; // curvatures
};

inline PsiSystem psi_system(const CovarianceInstance& inst, int s, const MixParams& mp,
                            const LiftedPoint& p) {
    const int n = inst.n();
    PsiSystem sys{};

    SymMatrix F1 = mbqp_F1(inst, mp.gamma1(), p);
    SymMatrix M1 = inverse_spd(F1);
    double dot1 = 0.0;
    for (int i = 0; i < n; ++i) dot1 += M1(i, i) * (1.0 - p.x[i]);
    sys.g1 = static_cast<double>(n - s) - dot1;
    SymMatrix CX = hadamard(inst.C(), p.X);
    Matrix MKM1 = matmul(M1.to_matrix(), matmul(CX.to_matrix(), M1.to_matrix()));
    double h1 = 0.0;
    for (int i = 0; i < n; ++i) h1 += (1.0 - p.x[i]) * MKM1(i, i);
    sys.h1 = mp.gamma1() * h1;

    SymMatrix F2 = mbqp_F2(inst, mp.gamma2(), p);
    SymMatrix M2 = inverse_spd(F2);
    double dot2 = 0.0;
    for (int i = 0; i < n; ++i) dot2 += M2(i, i) * p.x[i];
    sys.g2 = static_cast<double>(s) - dot2;
    SymMatrix Ylift(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) Ylift.set(i, j, p.X(i, j) + 1.0 - p.x[i] - p.x[j]);
    SymMatrix CY = hadamard(inst.Cinv(), Ylift);
    Matrix MKM2 = matmul(M2.to_matrix(), matmul(CY.to_matrix(), M2.to_matrix()));
    double h2 = 0.0;
    for (int i = 0; i < n; ++i) h2 += p.x[i] * MKM2(i, i);
    sys.h2 = mp.gamma2() * h2;
    return sys;
}

// One Newton update of (psi1, psi2) at fixed alpha.
inline TunerState psi_step(const TunerState& state, const CovarianceInstance& inst, int s,
                           double tol = 1e-7) {
    TunerState st = state;
    PsiSystem sys = psi_system(inst, s, st.params(), st.last_point);
    st.g1 = sys.g1;
    st.g2 = sys.g2;

    double d1 = 0.0, d2 = 0.0;
    if (sys.h1 > 1e-14) {
        d1 = -sys.g1 / sys.h1;
    } else if (std::fabs(sys.g1) > tol) {
        st.flags.insert(SolveFlag::singular_curvature);
    }
    if (sys.h2 > 1e-14) {
        d2 = -sys.g2 / sys.h2;
    } else if (std::fabs(sys.g2) > tol) {
        st.flags.insert(SolveFlag::singular_curvature);
    }
    if (!std::isfinite(d1) || !std::isfinite(d2)) throw NonfiniteStep();

    ++st.k;
    st.psi1 += d1;
    st.psi2 += d2;

    MbqpOptions opt;
    opt.tol = tol;
    MbqpResult res;
    try {
        res = solve_mbqp(inst, s, st.params(), opt);
    } catch (const Error& e) {
        throw SolveFailed(std::string("psi_step: relaxation solve failed: ") + e.what());
    }
    st.f1_star = res.report.f1_star;
    st.f2_star = res.report.f2_star;
    st.value = res.report.value;
    st.last_point = res.point;
    st.last_report = res.report;
    return st;
}

// Newton tuning of the scaling parameter of an endpoint (unmixed) bound:
// alpha pinned at 0 (scaled BQP) or 1 (complementary scaled BQP).
inline std::pair<double, double> tune_bqp_psi_endpoint(const CovarianceInstance& inst, int s,
                                                       bool complementary, double psi0,
                                                       double tol = 1e-6, int max_iter = 20) {
    double psi = psi0;
    double value = 0.0;
    for (int k = 0; k < max_iter; ++k) {
        MixParams mp{complementary ? 1.0 : 0.0, complementary ? 0.0 : psi,
                     complementary ? psi : 0.0};
        MbqpResult res = solve_mbqp(inst, s, mp);
        value = res.report.value;
        PsiSystem sys = psi_system(inst, s, mp, res.point);
        const double g = complementary ? sys.g2 : sys.g1;
        const double h = complementary ? sys.h2 : sys.h1;
        if (std::fabs(g) <= tol) break;
        if (!(h > 1e-14)) break;
        psi += std::clamp(-g / h, -10.0, 10.0);
    }
    return {psi, value};
}

struct AlternateTuneOptions {
    int budget = 120;           // total parameter steps (each one relaxation solve)
    int rounds = 4;             // alternation rounds
    int alpha_steps_per_mu = 5; // inner alpha iterations per barrier value
    int psi_steps = 5;          // psi iterations per alternation block
    double mu0 = 1e-1;
    double mu_min = 1e-6;
    double r_tol = 1e-6;
    double g_tol = 1e-6;
    double solve_tol = 1e-7;
};

struct AlternateTuneResult {
    MixParams params;
    BoundReport report; // best (lowest) bound seen
    std::vector<TunerTraceRow> trail;
    std::set<SolveFlag> flags;
};

inline AlternateTuneResult alternate_tune(const CovarianceInstance& inst, int s,
                                          const MixParams& init,
                                          const AlternateTuneOptions& opt = {}) {
    AlternateTuneResult out;

    // Bound at the exact initialization; tuning never returns anything worse.
    MbqpOptions sopt;
    sopt.tol = opt.solve_tol;
    MbqpResult init_res = solve_mbqp(inst, s, init, sopt);
    out.params = init;
    out.report = init_res.report;

    // Alpha iterations need the open interval.
    MixParams start = init;
    start.alpha = std::clamp(init.alpha, 1e-3, 1.0 - 1e-3);
    TunerState st = init_tuner_state(inst, s, start, opt.solve_tol);
    st.mu = opt.mu0;

    auto record = [&](const TunerState& cur) {
        double gn = std::max(std::fabs(cur.g1), std::fabs(cur.g2));
        out.trail.push_back({cur.k, cur.alpha, cur.psi1, cur.psi2, cur.value,
                             cur.r, std::isnan(gn) ? 0.0 : gn});
        if (cur.value < out.report.value) {
            out.params = cur.params();
            out.report = cur.last_report;
        }
    };
    record(st);

    int steps = 0;
    bool exhausted = false;
    for (int round = 0; round < opt.rounds && !exhausted; ++round) {
        // alpha block: barrier path on the weight
        st.mu = opt.mu0;
        while (st.mu >= opt.mu_min * (1.0 - 1e-12) && !exhausted) {
            for (int i = 0; i < opt.alpha_steps_per_mu; ++i) {
                if (steps++ >= opt.budget) {
                    exhausted = true;
                    break;
                }
                st = alpha_step(st, inst, s, opt.solve_tol);
                record(st);
                if (std::fabs(st.r) < opt.r_tol) break;
            }
            st.mu *= kTunerTauMu;
        }
        // psi block
        for (int i = 0; i < opt.psi_steps && !exhausted; ++i) {
            if (steps++ >= opt.budget) {
                exhausted = true;
                break;
            }
            st = psi_step(st, inst, s, opt.solve_tol);
            record(st);
            if (std::max(std::fabs(st.g1), std::fabs(st.g2)) < opt.g_tol) break;
        }
        if (std::fabs(st.r) < opt.r_tol && std::max(std::fabs(st.g1), std::fabs(st.g2)) < opt.g_tol)
            break;
    }
    out.flags = st.flags;
    if (exhausted) out.flags.insert(SolveFlag::budget_exhausted);
    out.report.params = out.params;
    return out;
}

} // namespace mesp
