#pragma once

// Scaled BQP bound, complementary BQP bound, and the strengthened mixed
// (mBQP) bound over P(n,s):
//   F1 = gamma1 C o X + I - diag(x)
//   F2 = gamma2 C^{-1} o (X + ee' - ex' - xe') + diag(x)
//   f  = (1-alpha) (ldet F1 - s log gamma1)
//      + alpha    (ldet F2 - (n-s) log gamma2 + ldet C)
// maximized over the lifted set. The linear constraints are eliminated once
// per (n,s) through an orthonormal null-space basis; the PSD side enters as
// a log-det barrier on the bordered lift compressed to the complement of its
// structural kernel.

#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <cstdio>

#include "mesp/errors.hpp"
#include "mesp/instance.hpp"
#include "mesp/lifted.hpp"
#include "mesp/report.hpp"

namespace mesp {

// ---------------------------------------------------------------------------
// Objective evaluators.
// ---------------------------------------------------------------------------

inline SymMatrix mbqp_F1(const CovarianceInstance& inst, double gamma1, const LiftedPoint& p) {
    const int n = inst.n();
    SymMatrix F(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double v = gamma1 * inst.C()(i, j) * p.X(i, j);
            if (i == j) v += 1.0 - p.x[i];
            F.set(i, j, v);
        }
    }
    return F;
}

inline SymMatrix mbqp_F2(const CovarianceInstance& inst, double gamma2, const LiftedPoint& p) {
    const int n = inst.n();
    SymMatrix F(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double y = p.X(i, j) + 1.0 - p.x[i] - p.x[j];
            double v = gamma2 * inst.Cinv()(i, j) * y;
            if (i == j) v += p.x[i];
            F.set(i, j, v);
        }
    }
    return F;
}

inline double bqp_objective(const CovarianceInstance& inst, int s, double gamma1,
                            const LiftedPoint& p) {
    if (!(gamma1 > 0.0)) throw InvalidParam("gamma1 must be positive");
    check_lifted_feasible(p, static_cast<double>(s));
    return ldet(mbqp_F1(inst, gamma1, p)) - s * std::log(gamma1);
}

inline double mbqp_objective(const CovarianceInstance& inst, int s, const MixParams& mp,
                             const LiftedPoint& p) {
    if (mp.alpha < 0.0 || mp.alpha > 1.0) throw InvalidParam("alpha must lie in [0,1]");
    check_lifted_feasible(p, static_cast<double>(s));
    const int n = inst.n();
    double out = 0.0;
    if (mp.alpha < 1.0) {
        double f1 = ldet(mbqp_F1(inst, mp.gamma1(), p)) - s * mp.psi1;
        out += (1.0 - mp.alpha) * f1;
    }
    if (mp.alpha > 0.0) {
        double f2 = ldet(mbqp_F2(inst, mp.gamma2(), p)) - (n - s) * mp.psi2 + inst.ldetC();
        out += mp.alpha * f2;
    }
    return out;
}

// Two-variable mixed objective: q carries its own lifted matrix Y, used only
// to verify that the strengthened bound never exceeds the two-variable one.
inline double mbqp_twovar_objective(const CovarianceInstance& inst, int s, const MixParams& mp,
                                    const LiftedPoint& p, const LiftedPoint& q) {
    const int n = inst.n();
    if (q.n() != n || p.n() != n) throw DimensionMismatch("lifted pair orders differ");
    for (int i = 0; i < n; ++i)
        if (std::fabs(p.x[i] + q.x[i] - 1.0) > 1e-7) throw LinkViolation();
    check_lifted_feasible(p, static_cast<double>(s));
    check_lifted_feasible(q, static_cast<double>(n - s));

    double out = 0.0;
    if (mp.alpha < 1.0) {
        double f1 = ldet(mbqp_F1(inst, mp.gamma1(), p)) - s * mp.psi1;
        out += (1.0 - mp.alpha) * f1;
    }
    if (mp.alpha > 0.0) {
        // complementary block evaluated directly on (y, Y)
        SymMatrix G(n);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double v = mp.gamma2() * inst.Cinv()(i, j) * q.X(i, j);
                if (i == j) v += 1.0 - q.x[i];
                G.set(i, j, v);
            }
        double f2 = ldet(G) - (n - s) * mp.psi2 + inst.ldetC();
        out += mp.alpha * f2;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Solver internals: affine symmetric-matrix maps over the packed variable
// z = (x, vech X), the constraint null space, and the compressed barrier.
// ---------------------------------------------------------------------------

namespace detail {

struct Triplet {
    int i, j;
    double c;
};

// Contribution of one packed variable to one matrix: sum of c * E_ij terms.
using TripletList = std::vector<Triplet>;

struct AffineSymMap {
    int order = 0;
    Matrix constant;
    std::vector<TripletList> var; // indexed by packed variable
};

inline int mbqp_dim(int n) { return n + n * (n + 1) / 2; }

// Packed index of X_ij (i <= j), after the n x-variables.
inline int vech_index(int n, int i, int j) {
    return n + i * n - i * (i - 1) / 2 + (j - i);
}

inline Matrix evaluate_affine(const AffineSymMap& m, const Vec& z) {
    Matrix S = m.constant;
    const int d = static_cast<int>(m.var.size());
    for (int a = 0; a < d; ++a) {
        const double za = z[a];
        if (za == 0.0) continue;
        for (const Triplet& t : m.var[a]) S(t.i, t.j) += za * t.c;
    }
    return S;
}

inline AffineSymMap build_f1_map(const CovarianceInstance& inst, double gamma1) {
    const int n = inst.n();
    AffineSymMap m;
    m.order = n;
    m.constant = Matrix::identity(n);
    m.var.resize(mbqp_dim(n));
    for (int i = 0; i < n; ++i) m.var[i].push_back({i, i, -1.0});
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const double c = gamma1 * inst.C()(i, j);
            auto& list = m.var[vech_index(n, i, j)];
            if (i == j) {
                list.push_back({i, i, c});
            } else {
                list.push_back({i, j, c});
                list.push_back({j, i, c});
            }
        }
    }
    return m;
}

inline AffineSymMap build_f2_map(const CovarianceInstance& inst, double gamma2) {
    const int n = inst.n();
    const SymMatrix& W = inst.Cinv();
    AffineSymMap m;
    m.order = n;
    m.constant = W.to_matrix();
    for (double& v : m.constant.data()) v *= gamma2; // gamma2 Cinv o ee'
    m.var.resize(mbqp_dim(n));
    for (int i = 0; i < n; ++i) {
        auto& list = m.var[i];
        for (int k = 0; k < n; ++k) {
            if (k == i) continue;
            list.push_back({k, i, -gamma2 * W(k, i)});
            list.push_back({i, k, -gamma2 * W(i, k)});
        }
        list.push_back({i, i, -2.0 * gamma2 * W(i, i) + 1.0});
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const double c = gamma2 * W(i, j);
            auto& list = m.var[vech_index(n, i, j)];
            if (i == j) {
                list.push_back({i, i, c});
            } else {
                list.push_back({i, j, c});
                list.push_back({j, i, c});
            }
        }
    }
    return m;
}

// Bordered lift [[1, x'], [x, X]] as an affine map of z (order n+1).
inline AffineSymMap build_border_map(int n) {
    AffineSymMap m;
    m.order = n + 1;
    m.constant = Matrix(n + 1, n + 1);
    m.constant(0, 0) = 1.0;
    m.var.resize(mbqp_dim(n));
    for (int i = 0; i < n; ++i) {
        m.var[i].push_back({0, i + 1, 1.0});
        m.var[i].push_back({i + 1, 0, 1.0});
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            auto& list = m.var[vech_index(n, i, j)];
            if (i == j) {
                list.push_back({i + 1, i + 1, 1.0});
            } else {
                list.push_back({i + 1, j + 1, 1.0});
                list.push_back({j + 1, i + 1, 1.0});
            }
        }
    }
    return m;
}

// Constraint system: Diag(X) = x, e'x = s, Xe = s x.
inline std::pair<Matrix, Vec> lifted_constraints(int n, int s) {
    const int d = mbqp_dim(n);
    Matrix A(2 * n + 1, d);
    Vec b(2 * n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        A(i, vech_index(n, i, i)) = 1.0;
        A(i, i) = -1.0;
    }
    for (int i = 0; i < n; ++i) A(n, i) = 1.0;
    b[n] = static_cast<double>(s);
    for (int i = 0; i < n; ++i) {
        const int r = n + 1 + i;
        for (int j = 0; j < n; ++j) A(r, vech_index(n, std::min(i, j), std::max(i, j))) += 1.0;
        A(r, i) -= static_cast<double>(s);
    }
    return {A, b};
}

// Null-space basis of the constraint system; rank decided from the spectrum
// of A'A. Cached per (n, s) and shared read-only.
inline std::shared_ptr<const Matrix> lifted_null_basis(int n, int s) {
    static std::mutex mx;
    static std::map<std::pair<int, int>, std::shared_ptr<const Matrix>> cache;
    {
        std::lock_guard<std::mutex> lock(mx);
        auto it = cache.find({n, s});
        if (it != cache.end()) return it->second;
    }
    auto [A, b] = lifted_constraints(n, s);
    const int d = A.cols();
    Matrix AtA = matmul(transpose(A), A);
    auto eig = sym_eigen(SymMatrix::from_matrix(AtA, 1e-6));
    const double cutoff = 1e-10 * std::max(eig.values.back(), 1.0);
    int null_dim = 0;
    while (null_dim < d && eig.values[null_dim] <= cutoff) ++null_dim;
    auto N = std::make_shared<Matrix>(d, null_dim);
    for (int k = 0; k < null_dim; ++k)
        for (int i = 0; i < d; ++i) (*N)(i, k) = eig.vectors(i, k);
    std::lock_guard<std::mutex> lock(mx);
    cache[{n, s}] = N;
    return N;
}

inline Vec pack_point(const LiftedPoint& p) {
    const int n = p.n();
    Vec z(mbqp_dim(n));
    for (int i = 0; i < n; ++i) z[i] = p.x[i];
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) z[vech_index(n, i, j)] = p.X(i, j);
    return z;
}

inline LiftedPoint unpack_point(int n, const Vec& z) {
    LiftedPoint p;
    p.x.assign(z.begin(), z.begin() + n);
    SymMatrix X(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) X.set(i, j, z[vech_index(n, i, j)]);
    p.X = X;
    return p;
}

} // namespace detail

// ---------------------------------------------------------------------------
// solve_mbqp: barrier Newton over the eliminated affine manifold.
// ---------------------------------------------------------------------------

struct MbqpOptions {
    double tol = 1e-7;
    double weight = 1.0; // scales the whole concave objective
    Vec tilt;            // linear term subtracted from the objective: - tilt'x
    int max_newton = 600;
};

struct MbqpResult {
    BoundReport report;
    LiftedPoint point;
};

inline MbqpResult solve_mbqp(const CovarianceInstance& inst, int s, const MixParams& mp,
                             const MbqpOptions& opt = {}) {
    const int n = inst.n();
    if (s < 0 || s > n) throw InvalidParam("s out of range");
    if (mp.alpha < 0.0 || mp.alpha > 1.0) throw InvalidParam("alpha must lie in [0,1]");
    if (!std::isfinite(mp.psi1) || !std::isfinite(mp.psi2)) throw InvalidParam("psi must be finite");
    if (opt.weight < 0.0) throw InvalidParam("weight must be nonnegative");
    const auto t0 = std::chrono::steady_clock::now();

    const Vec tilt = opt.tilt.empty() ? Vec(n, 0.0) : opt.tilt;
    MbqpResult res;
    res.report.params = mp;

    // Single-point feasible sets.
    if (s == 0 || s == n) {
        Vec x(n, s == 0 ? 0.0 : 1.0);
        res.point = binary_lift(x);
        double f = (s == 0) ? 0.0 : inst.ldetC();
        double tilt_term = 0.0;
        for (int i = 0; i < n; ++i) tilt_term -= tilt[i] * x[i];
        res.report.f1_star = f;
        res.report.f2_star = f;
        res.report.primal_value = opt.weight * f + tilt_term;
        res.report.value = res.report.dual_value = res.report.primal_value;
        res.report.optimizer_x = x;
        res.report.kkt_residual = 0.0;
        return res;
    }

    const double w1 = opt.weight * (1.0 - mp.alpha);
    const double w2 = opt.weight * mp.alpha;
    const double const_term = w1 * (-s * mp.psi1) +
                              w2 * (-(n - s) * mp.psi2 + inst.ldetC());

    struct Term {
        detail::AffineSymMap map;
        double weight;
        Matrix inv;    // refreshed each Newton step
        bool barrier;  // barrier term uses mu as weight and the compressed form
    };
    std::vector<Term> terms;
    if (w1 > 0.0) terms.push_back({detail::build_f1_map(inst, mp.gamma1()), w1, Matrix(), false});
    if (w2 > 0.0) terms.push_back({detail::build_f2_map(inst, mp.gamma2()), w2, Matrix(), false});
    terms.push_back({detail::build_border_map(n), 0.0, Matrix(), true});

    const Matrix V = e_orthobasis(n);
    auto compress_border = [&](const Matrix& B) {
        // Utilde' B Utilde with Utilde = [[1,0],[0,V]]
        Matrix B11(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) B11(i, j) = B(i + 1, j + 1);
        Matrix BV = matmul(B11, V);
        Matrix core = matmul(transpose(V), BV); // (n-1)x(n-1)
        Matrix out(n, n);
        out(0, 0) = B(0, 0);
        for (int k = 0; k < n - 1; ++k) {
            double t = 0.0;
            for (int i = 0; i < n; ++i) t += V(i, k) * B(0, i + 1);
            out(0, k + 1) = out(k + 1, 0) = t;
        }
        for (int a = 0; a < n - 1; ++a)
            for (int bcol = 0; bcol < n - 1; ++bcol) out(a + 1, bcol + 1) = core(a, bcol);
        return out;
    };
    auto expand_border_inverse = [&](const Matrix& Minv) {
        // Utilde Minv Utilde'
        Matrix out(n + 1, n + 1);
        out(0, 0) = Minv(0, 0);
        Vec first(n, 0.0);
        for (int i = 0; i < n; ++i) {
            double t = 0.0;
            for (int k = 0; k < n - 1; ++k) t += V(i, k) * Minv(k + 1, 0);
            first[i] = t;
        }
        for (int i = 0; i < n; ++i) out(0, i + 1) = out(i + 1, 0) = first[i];
        Matrix core(n - 1, n - 1);
        for (int a = 0; a < n - 1; ++a)
            for (int bcol = 0; bcol < n - 1; ++bcol) core(a, bcol) = Minv(a + 1, bcol + 1);
        Matrix VC = matmul(V, core);
        Matrix block = matmul(VC, transpose(V));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) out(i + 1, j + 1) = block(i, j);
        return out;
    };

    const int d = detail::mbqp_dim(n);
    auto Nbasis = detail::lifted_null_basis(n, s);
    const Matrix& N = *Nbasis;
    const int dt = N.cols();

    Vec z = detail::pack_point(analytic_lifted_start(n, s));
    Vec c(d, 0.0);
    for (int i = 0; i < n; ++i) c[i] = -tilt[i];

    // Objective with barrier; nullopt when a log-det argument loses
    // positive definiteness.
    auto phi_value = [&](const Vec& zz, double mu) -> std::optional<double> {
        double val = const_term;
        for (int i = 0; i < d; ++i) val += c[i] * zz[i];
        for (const Term& t : terms) {
            Matrix S = detail::evaluate_affine(t.map, zz);
            if (t.barrier) S = compress_border(S);
            auto L = try_cholesky(SymMatrix::from_matrix(S, 1e-5));
            if (!L) return std::nullopt;
            val += (t.barrier ? mu : t.weight) * ldet_from_factor(*L);
        }
        return val;
    };

    // The bordered lift turns singular at the boundary, so inverse-based
    // derivatives lose ~kappa*eps accuracy; below mu ~ 1e-9 the Newton model
    // is noise. The certified margin reflects the clamped mu.
    const double mu_end = std::clamp(opt.tol / (4.0 * n), 1e-9, 1e-8);
    double mu = 1.0;
    Vec gz(d), gt(dt), deltat(dt), deltaz(d);
    Matrix Hz(d, d), HN(d, dt), Ht(dt, dt);
    int iters = 0;
    double kkt = std::numeric_limits<double>::infinity();
    bool capped = false;

    // The value certificate anchors at the deepest mu whose center was
    // reached with decrement^2 <= 0.01 mu; pushing further only helps when
    // the Newton model stays numerically meaningful.
    double mu_cert = std::numeric_limits<double>::infinity();
    Vec z_cert;
    double kkt_cert = std::numeric_limits<double>::infinity();

    bool last_stage = false;
    while (true) {
        if (mu <= mu_end * (1.0 + 1e-12)) {
            mu = mu_end;
            last_stage = true;
        }
        const int inner_cap = last_stage ? 60 : 20;
        bool stage_certified = false;
        double prev_dec = std::numeric_limits<double>::infinity();
        int plateau = 0;
        for (int it = 0; it < inner_cap; ++it) {
            if (iters >= opt.max_newton) {
                capped = true;
                break;
            }
            // Refresh inverses.
            bool ok = true;
            for (Term& t : terms) {
                Matrix S = detail::evaluate_affine(t.map, z);
                if (t.barrier) S = compress_border(S);
                auto L = try_cholesky(SymMatrix::from_matrix(S, 1e-5));
                if (!L) {
                    ok = false;
                    break;
                }
                Matrix inv = chol_solve(*L, Matrix::identity(t.barrier ? n : t.map.order));
                t.inv = t.barrier ? expand_border_inverse(inv) : inv;
            }
            if (!ok) throw SolveFailed("mbqp: iterate left the positive-definite domain");

            // Gradient and Hessian in z.
            std::fill(gz.begin(), gz.end(), 0.0);
            for (int i = 0; i < d; ++i) gz[i] = c[i];
            for (Term& t : terms) {
                const double wk = t.barrier ? mu : t.weight;
                for (int a = 0; a < d; ++a) {
                    double g = 0.0;
                    for (const auto& tr : t.map.var[a]) g += tr.c * t.inv(tr.i, tr.j);
                    gz[a] += wk * g;
                }
            }
            for (auto& vrow : Hz.data()) vrow = 0.0;
            for (Term& t : terms) {
                const double wk = t.barrier ? mu : t.weight;
                const Matrix& M = t.inv;
                for (int a = 0; a < d; ++a) {
                    const auto& Ta = t.map.var[a];
                    if (Ta.empty()) continue;
                    for (int b = a; b < d; ++b) {
                        const auto& Tb = t.map.var[b];
                        if (Tb.empty()) continue;
                        double h = 0.0;
                        for (const auto& ta : Ta)
                            for (const auto& tb : Tb)
                                h += ta.c * tb.c * M(ta.j, tb.i) * M(tb.j, ta.i);
                        Hz(a, b) -= wk * h;
                    }
                }
            }
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < a; ++b) Hz(a, b) = Hz(b, a);

            // Reduce: gt = N'gz, Ht = N'Hz N.
            for (int k = 0; k < dt; ++k) {
                double t = 0.0;
                for (int i = 0; i < d; ++i) t += N(i, k) * gz[i];
                gt[k] = t;
            }
            HN = matmul(Hz, N);
            Ht = matmul(transpose(N), HN);

            // Newton solve on -Ht (positive definite for concave objective).
            for (auto& v : Ht.data()) v = -v;
            auto Lt = try_cholesky(SymMatrix::from_matrix(Ht, 1e-5));
            if (!Lt) {
                double dmax = 1.0;
                for (int k = 0; k < dt; ++k) dmax = std::max(dmax, Ht(k, k));
                for (double rho : {1e-15, 1e-13, 1e-11}) {
                    Matrix Hreg = Ht;
                    for (int k = 0; k < dt; ++k) Hreg(k, k) += rho * dmax;
                    Lt = try_cholesky(SymMatrix::from_matrix(Hreg, 1e-5));
                    if (Lt) break;
                }
                if (!Lt) throw SolveFailed("mbqp: reduced Newton system indefinite");
            }
            deltat = chol_solve(*Lt, gt);

            double decrement2 = 0.0;
            for (int k = 0; k < dt; ++k) decrement2 += deltat[k] * gt[k];
            decrement2 = std::max(decrement2, 0.0);
            kkt = decrement2;
            if (decrement2 <= 0.01 * mu) {
                stage_certified = true;
                break;
            }
            // stalled polish: the decrement has hit its conditioning floor
            if (decrement2 <= 1e-6 && decrement2 > 0.9 * prev_dec) {
                if (++plateau >= 8) break;
            } else {
                plateau = 0;
            }
            prev_dec = decrement2;

            for (int i = 0; i < d; ++i) {
                double t = 0.0;
                for (int k = 0; k < dt; ++k) t += N(i, k) * deltat[k];
                deltaz[i] = t;
            }

            auto phi0 = phi_value(z, mu);
            double theta = 1.0;
            bool moved = false;
            Vec trial(d);
            for (int bt = 0; bt < 60 && !moved; ++bt) {
                for (int i = 0; i < d; ++i) trial[i] = z[i] + theta * deltaz[i];
                auto phi1 = phi_value(trial, mu);
                // Armijo ascent with a floor for log-det evaluation noise.
                if (phi1 && (!phi0 || *phi1 >= *phi0 + 0.01 * theta * decrement2 -
                                          1e-10 * (1.0 + std::fabs(*phi0)))) {
                    z = trial;
                    moved = true;
                } else {
                    theta *= 0.5;
                }
            }
            ++iters;
#ifdef MESP_MBQP_TRACE
            std::fprintf(stderr, "stage mu=%.2e it=%d lambda2=%.3e theta=%.3e moved=%d\n", mu, it,
                         decrement2, theta, (int)moved);
#endif
            if (!moved) break;
        }
        if (stage_certified) {
            mu_cert = mu;
            z_cert = z;
            kkt_cert = kkt;
        }
        if (last_stage || capped) break;
        mu *= 0.2;
    }
    if (z_cert.empty()) { // even the first stage failed to center
        mu_cert = 1.0;
        z_cert = z;
        kkt_cert = kkt;
        capped = true;
    }

    // Assemble the report, anchored at the certified center.
    auto objective_at = [&](const Vec& zz) {
        double v = 0.0;
        for (int i = 0; i < d; ++i) v += c[i] * zz[i];
        LiftedPoint p = detail::unpack_point(n, zz);
        if (w1 > 0.0) v += w1 * (ldet(mbqp_F1(inst, mp.gamma1(), p)) - s * mp.psi1);
        if (w2 > 0.0) v += w2 * (ldet(mbqp_F2(inst, mp.gamma2(), p)) - (n - s) * mp.psi2 + inst.ldetC());
        return v;
    };
    const double obj_cert = objective_at(z_cert);
    const double obj_last = (z_cert == z) ? obj_cert : objective_at(z);
    if (obj_last > obj_cert) {
        // deeper uncertified iterate made extra primal progress; keep it as
        // the optimizer, the certificate still holds from the cert center
    } else {
        z = z_cert;
    }

    LiftedPoint p = detail::unpack_point(n, z);
    res.point = p;
    BoundReport& rep = res.report;
    rep.optimizer_x = p.x;
    rep.iterations = iters;

    double primal = 0.0;
    for (int i = 0; i < d; ++i) primal += c[i] * z[i];
    {
        auto L1 = try_cholesky(mbqp_F1(inst, mp.gamma1(), p));
        if (L1) rep.f1_star = ldet_from_factor(*L1) - s * mp.psi1;
        auto L2 = try_cholesky(mbqp_F2(inst, mp.gamma2(), p));
        if (L2) rep.f2_star = ldet_from_factor(*L2) - (n - s) * mp.psi2 + inst.ldetC();
        if (w1 > 0.0) primal += w1 * rep.f1_star;
        if (w2 > 0.0) primal += w2 * rep.f2_star;
    }
    rep.primal_value = primal;
    rep.value = obj_cert + 2.0 * n * mu_cert; // order-n barrier, factor-2 slack
    rep.dual_value = rep.value;
    rep.kkt_residual = std::max(kkt_cert, n * mu_cert);
    if (capped) rep.flags.insert(SolveFlag::max_iterations);
    rep.wall_time_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

// Direct scaled BQP bound (the alpha = 0 endpoint formulation).
inline MbqpResult solve_bqp(const CovarianceInstance& inst, int s, double gamma1,
                            const MbqpOptions& opt = {}) {
    if (!(gamma1 > 0.0)) throw InvalidParam("gamma1 must be positive");
    MixParams mp;
    mp.alpha = 0.0;
    mp.psi1 = std::log(gamma1);
    return solve_mbqp(inst, s, mp, opt);
}

// Complementary scaled BQP bound: the bound on (C^{-1}, n-s) shifted by
// ldet C. Reported optimizer_x is mapped back to selection coordinates.
inline MbqpResult solve_cbqp(const CovarianceInstance& inst, int s, double gamma2,
                             const MbqpOptions& opt = {}) {
    if (!(gamma2 > 0.0)) throw InvalidParam("gamma2 must be positive");
    if (!opt.tilt.empty())
        throw InvalidParam("solve_cbqp reports in selection coordinates; tilt the complement solve");
    auto [comp, shift] = complement(inst);
    MbqpResult sub = solve_bqp(comp, inst.n() - s, gamma2, opt);
    MbqpResult out;
    out.point = phi_map(sub.point);
    out.report = sub.report;
    out.report.primal_value += shift;
    out.report.value += shift;
    out.report.dual_value += shift;
    out.report.params = MixParams{1.0, 0.0, std::log(gamma2)};
    out.report.optimizer_x.assign(out.point.x.begin(), out.point.x.end());
    return out;
}

} // namespace mesp
