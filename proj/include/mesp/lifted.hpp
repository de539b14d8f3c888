#pragma once

// Lifted points (x, X) of the SDP-style relaxation P(n,s):
//   X - xx' PSD, Diag(X) = x, e'x = s, Xe = sx,
// and the affine bijection Phi onto Q(n, n-s).

#include <cmath>

#include "mesp/errors.hpp"
#include "mesp/linalg.hpp"

namespace mesp {

struct LiftedPoint {
    Vec x;
    SymMatrix X;

    int n() const { return X.n(); }
};

// Phi(x, X) = (e - x, X + ee' - ex' - xe'); an involution mapping P(n,s)
// onto Q(n, n-s) and back.
inline LiftedPoint phi_map(const LiftedPoint& p) {
    const int n = p.n();
    LiftedPoint q;
    q.x.resize(n);
    for (int i = 0; i < n; ++i) q.x[i] = 1.0 - p.x[i];
    SymMatrix Y(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) Y.set(i, j, p.X(i, j) + 1.0 - p.x[i] - p.x[j]);
    q.X = Y;
    return q;
}

// Bordered lift [[1, x'], [x, X]]; PSD exactly when X - xx' is.
inline SymMatrix bordered_lift(const LiftedPoint& p) {
    const int n = p.n();
    SymMatrix B(n + 1);
    B.set(0, 0, 1.0);
    for (int i = 0; i < n; ++i) {
        B.set(0, i + 1, p.x[i]);
        for (int j = i; j < n; ++j) B.set(i + 1, j + 1, p.X(i, j));
    }
    return B;
}

struct LiftedResiduals {
    double diag = 0.0;    // ||Diag(X) - x||_inf
    double sum = 0.0;     // |e'x - s|
    double rowsum = 0.0;  // ||Xe - sx||_inf
    double min_eig = 0.0; // smallest eigenvalue of the bordered lift
};

inline LiftedResiduals lifted_residuals(const LiftedPoint& p, double s) {
    const int n = p.n();
    LiftedResiduals r;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        r.diag = std::max(r.diag, std::fabs(p.X(i, i) - p.x[i]));
        total += p.x[i];
        double row = 0.0;
        for (int j = 0; j < n; ++j) row += p.X(i, j);
        r.rowsum = std::max(r.rowsum, std::fabs(row - s * p.x[i]));
    }
    r.sum = std::fabs(total - s);
    r.min_eig = min_eigenvalue(bordered_lift(p));
    return r;
}

inline void check_lifted_feasible(const LiftedPoint& p, double s) {
    LiftedResiduals r = lifted_residuals(p, s);
    if (r.diag > 1e-8) throw Infeasible("lifted point: Diag(X) != x");
    if (r.sum > 1e-8) throw Infeasible("lifted point: e'x != s");
    if (r.rowsum > 1e-7) throw Infeasible("lifted point: Xe != s x");
    if (r.min_eig < -1e-8) throw Infeasible("lifted point: X - xx' not PSD");
}

// Analytic strictly feasible start: x0 = (s/n) e and
// X0 = x0 x0' + theta (I - ee'/n) with theta = s(n-s)/(n(n-1)).
inline LiftedPoint analytic_lifted_start(int n, int s) {
    if (n < 2 || s < 1 || s > n - 1) throw InvalidParam("analytic start needs n >= 2, 1 <= s <= n-1");
    const double xs = static_cast<double>(s) / n;
    const double theta = static_cast<double>(s) * (n - s) / (static_cast<double>(n) * (n - 1));
    LiftedPoint p;
    p.x.assign(n, xs);
    SymMatrix X(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            X.set(i, j, xs * xs + theta * ((i == j ? 1.0 : 0.0) - 1.0 / n));
    p.X = X;
    return p;
}

// Lift of a binary selection: X = xx'.
inline LiftedPoint binary_lift(const Vec& x) {
    const int n = static_cast<int>(x.size());
    LiftedPoint p;
    p.x = x;
    SymMatrix X(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) X.set(i, j, x[i] * x[j]);
    p.X = X;
    return p;
}

} // namespace mesp
