#pragma once

// Dense symmetric-matrix kernels: Cholesky, log-determinant, SPD solves,
// Hadamard/trace products, and a symmetric QL eigensolver used by the
// generators and by test oracles. Row-major storage, sized for n <= ~200.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <optional>
#include <vector>

#include "mesp/errors.hpp"

namespace mesp {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// Dense general matrix, row-major.
// ---------------------------------------------------------------------------

class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, fill) {}

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

    double* row(int i) { return a_.data() + static_cast<size_t>(i) * cols_; }
    const double* row(int i) const { return a_.data() + static_cast<size_t>(i) * cols_; }

    const std::vector<double>& data() const { return a_; }
    std::vector<double>& data() { return a_; }

private:
    int rows_, cols_;
    std::vector<double> a_;
};

inline Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw DimensionMismatch("matmul: inner dimensions differ");
    Matrix c(a.rows(), b.cols(), 0.0);
    for (int i = 0; i < a.rows(); ++i) {
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = b.row(k);
            double* crow = c.row(i);
            for (int j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

inline Vec matvec(const Matrix& a, const Vec& x) {
    if (a.cols() != static_cast<int>(x.size())) throw DimensionMismatch("matvec: size mismatch");
    Vec y(a.rows(), 0.0);
    for (int i = 0; i < a.rows(); ++i) {
        const double* row = a.row(i);
        double s = 0.0;
        for (int j = 0; j < a.cols(); ++j) s += row[j] * x[j];
        y[i] = s;
    }
    return y;
}

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double inf_norm(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

inline double inf_norm(const Matrix& m) {
    double best = 0.0;
    for (double x : m.data()) best = std::max(best, std::fabs(x));
    return best;
}

// ---------------------------------------------------------------------------
// Symmetric matrix. Construction symmetrizes (M + M')/2 and rejects input
// whose asymmetry exceeds a tolerance; entries are thereafter exactly equal
// across the diagonal.
// ---------------------------------------------------------------------------

class SymMatrix {
public:
    SymMatrix() : n_(0) {}
    explicit SymMatrix(int n) : n_(n), a_(static_cast<size_t>(n) * n, 0.0) {
        if (n < 1) throw InvalidParam("SymMatrix order must be >= 1");
    }

    // Symmetrize (m + m')/2; asymmetry beyond asym_tol (relative to the
    // largest entry) is a data error, not round-off.
    static SymMatrix from_matrix(const Matrix& m, double asym_tol = 1e-8) {
        if (m.rows() != m.cols()) throw DimensionMismatch("SymMatrix: input not square");
        SymMatrix s(m.rows());
        const int n = m.rows();
        double scale = std::max(1.0, inf_norm(m));
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) {
                if (std::fabs(m(i, j) - m(j, i)) > asym_tol * scale)
                    throw AsymmetricBeyondTol();
                double v = 0.5 * (m(i, j) + m(j, i));
                s.a_[idx(s.n_, i, j)] = v;
                s.a_[idx(s.n_, j, i)] = v;
            }
        }
        return s;
    }

    static SymMatrix identity(int n) {
        SymMatrix s(n);
        for (int i = 0; i < n; ++i) s.a_[idx(n, i, i)] = 1.0;
        return s;
    }

    static SymMatrix diag(const Vec& d) {
        SymMatrix s(static_cast<int>(d.size()));
        for (int i = 0; i < s.n_; ++i) s.a_[idx(s.n_, i, i)] = d[i];
        return s;
    }

    // Row-major full initializer, symmetrized; convenient in tests.
    static SymMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows.size() ? rows.begin()->size() : 0));
        int i = 0;
        for (const auto& r : rows) {
            if (static_cast<int>(r.size()) != m.cols())
                throw DimensionMismatch("SymMatrix: ragged initializer");
            int j = 0;
            for (double v : r) m(i, j++) = v;
            ++i;
        }
        return from_matrix(m);
    }

    int n() const { return n_; }

    double operator()(int i, int j) const { return a_[idx(n_, i, j)]; }

    // Writes both (i,j) and (j,i); the only mutation path.
    void set(int i, int j, double v) {
        a_[idx(n_, i, j)] = v;
        a_[idx(n_, j, i)] = v;
    }

    const double* row(int i) const { return a_.data() + static_cast<size_t>(i) * n_; }
    const std::vector<double>& data() const { return a_; }

    Matrix to_matrix() const {
        Matrix m(n_, n_);
        m.data() = a_;
        return m;
    }

    Vec diagonal() const {
        Vec d(n_);
        for (int i = 0; i < n_; ++i) d[i] = a_[idx(n_, i, i)];
        return d;
    }

    double max_diag() const {
        double m = a_[0];
        for (int i = 1; i < n_; ++i) m = std::max(m, a_[idx(n_, i, i)]);
        return m;
    }

private:
    static size_t idx(int n, int i, int j) { return static_cast<size_t>(i) * n + j; }
    int n_;
    std::vector<double> a_;
};

inline double inf_norm(const SymMatrix& m) {
    double best = 0.0;
    for (double x : m.data()) best = std::max(best, std::fabs(x));
    return best;
}

inline SymMatrix hadamard(const SymMatrix& a, const SymMatrix& b) {
    if (a.n() != b.n()) throw DimensionMismatch("hadamard: orders differ");
    SymMatrix c(a.n());
    for (int i = 0; i < a.n(); ++i)
        for (int j = i; j < a.n(); ++j) c.set(i, j, a(i, j) * b(i, j));
    return c;
}

// A \bullet B := Trace(A B') = sum_ij A_ij B_ij.
inline double trace_dot(const SymMatrix& a, const SymMatrix& b) {
    if (a.n() != b.n()) throw DimensionMismatch("trace_dot: orders differ");
    double s = 0.0;
    const auto& av = a.data();
    const auto& bv = b.data();
    for (size_t k = 0; k < av.size(); ++k) s += av[k] * bv[k];
    return s;
}

inline double trace_dot(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionMismatch("trace_dot: shapes differ");
    double s = 0.0;
    const auto& av = a.data();
    const auto& bv = b.data();
    for (size_t k = 0; k < av.size(); ++k) s += av[k] * bv[k];
    return s;
}

// ---------------------------------------------------------------------------
// Cholesky factorization and SPD solves.
// ---------------------------------------------------------------------------

// Scale-aware positive-definiteness threshold: a pivot at or below
// 1e-12 * (max diagonal entry) fails the factorization.
inline double cholesky_pivot_tol(const SymMatrix& m) {
    return 1e-12 * std::max(m.max_diag(), 0.0);
}

inline std::optional<Matrix> try_cholesky(const SymMatrix& m) {
    const int n = m.n();
    const double tol = cholesky_pivot_tol(m);
    Matrix L(n, n, 0.0);
    for (int j = 0; j < n; ++j) {
        double d = m(j, j);
        const double* lj = L.row(j);
        for (int k = 0; k < j; ++k) d -= lj[k] * lj[k];
        if (!(d > tol)) return std::nullopt;
        const double ljj = std::sqrt(d);
        L(j, j) = ljj;
        for (int i = j + 1; i < n; ++i) {
            double s = m(i, j);
            const double* li = L.row(i);
            for (int k = 0; k < j; ++k) s -= li[k] * lj[k];
            L(i, j) = s / ljj;
        }
    }
    return L;
}

inline Matrix cholesky(const SymMatrix& m) {
    auto L = try_cholesky(m);
    if (!L) throw NotPositiveDefinite();
    return *L;
}

// Natural-log determinant of an SPD matrix, 2 * sum(log diag(L)).
inline double ldet(const SymMatrix& m) {
    Matrix L = cholesky(m);
    double s = 0.0;
    for (int i = 0; i < m.n(); ++i) s += std::log(L(i, i));
    return 2.0 * s;
}

inline double ldet_from_factor(const Matrix& L) {
    double s = 0.0;
    for (int i = 0; i < L.rows(); ++i) s += std::log(L(i, i));
    return 2.0 * s;
}

// Solve L y = b, then L' x = y, in place.
inline void chol_solve_inplace(const Matrix& L, Vec& b) {
    const int n = L.rows();
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        const double* li = L.row(i);
        for (int k = 0; k < i; ++k) s -= li[k] * b[k];
        b[i] = s / li[i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int k = i + 1; k < n; ++k) s -= L(k, i) * b[k];
        b[i] = s / L(i, i);
    }
}

inline Vec chol_solve(const Matrix& L, const Vec& b) {
    Vec x = b;
    chol_solve_inplace(L, x);
    return x;
}

inline Matrix chol_solve(const Matrix& L, const Matrix& B) {
    Matrix X = B;
    const int n = L.rows();
    Vec col(n);
    for (int j = 0; j < B.cols(); ++j) {
        for (int i = 0; i < n; ++i) col[i] = X(i, j);
        chol_solve_inplace(L, col);
        for (int i = 0; i < n; ++i) X(i, j) = col[i];
    }
    return X;
}

inline Vec solve(const SymMatrix& m, const Vec& b) {
    if (m.n() != static_cast<int>(b.size())) throw DimensionMismatch("solve: size mismatch");
    return chol_solve(cholesky(m), b);
}

inline Matrix solve(const SymMatrix& m, const Matrix& B) {
    if (m.n() != B.rows()) throw DimensionMismatch("solve: size mismatch");
    return chol_solve(cholesky(m), B);
}

inline SymMatrix inverse_spd(const SymMatrix& m) {
    Matrix inv = solve(m, Matrix::identity(m.n()));
    return SymMatrix::from_matrix(inv, 1e-6);
}

inline SymMatrix inverse_from_factor(const Matrix& L) {
    Matrix inv = chol_solve(L, Matrix::identity(L.rows()));
    return SymMatrix::from_matrix(inv, 1e-6);
}

// ---------------------------------------------------------------------------
// Symmetric eigensolver: Householder tridiagonalization followed by implicit
// QL with shifts. Used for spectrum construction, PSD checks, and oracles.
// ---------------------------------------------------------------------------

namespace detail {

// Reduce symmetric z (full storage) to tridiagonal (d, e) accumulating the
// orthogonal transform in z.
inline void tridiagonalize(Matrix& z, Vec& d, Vec& e) {
    const int n = z.rows();
    d.assign(n, 0.0);
    e.assign(n, 0.0);
    for (int i = n - 1; i >= 1; --i) {
        const int l = i - 1;
        double h = 0.0, scale = 0.0;
        if (l > 0) {
            for (int k = 0; k <= l; ++k) scale += std::fabs(z(i, k));
            if (scale == 0.0) {
                e[i] = z(i, l);
            } else {
                for (int k = 0; k <= l; ++k) {
                    z(i, k) /= scale;
                    h += z(i, k) * z(i, k);
                }
                double f = z(i, l);
                double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
                e[i] = scale * g;
                h -= f * g;
                z(i, l) = f - g;
                f = 0.0;
                for (int j = 0; j <= l; ++j) {
                    z(j, i) = z(i, j) / h;
                    g = 0.0;
                    for (int k = 0; k <= j; ++k) g += z(j, k) * z(i, k);
                    for (int k = j + 1; k <= l; ++k) g += z(k, j) * z(i, k);
                    e[j] = g / h;
                    f += e[j] * z(i, j);
                }
                const double hh = f / (2.0 * h);
                for (int j = 0; j <= l; ++j) {
                    f = z(i, j);
                    e[j] = g = e[j] - hh * f;
                    for (int k = 0; k <= j; ++k) z(j, k) -= f * e[k] + g * z(i, k);
                }
            }
        } else {
            e[i] = z(i, l);
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for (int i = 0; i < n; ++i) {
        const int l = i - 1;
        if (d[i] != 0.0) {
            for (int j = 0; j <= l; ++j) {
                double g = 0.0;
                for (int k = 0; k <= l; ++k) g += z(i, k) * z(k, j);
                for (int k = 0; k <= l; ++k) z(k, j) -= g * z(k, i);
            }
        }
        d[i] = z(i, i);
        z(i, i) = 1.0;
        for (int j = 0; j <= l; ++j) z(j, i) = z(i, j) = 0.0;
    }
}

// Implicit QL with shifts on the tridiagonal (d, e); eigenvectors accumulate
// into z columns. Returns false if a diagonal fails to converge.
inline bool tql_implicit(Vec& d, Vec& e, Matrix& z) {
    const int n = static_cast<int>(d.size());
    for (int i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
                if (std::fabs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
            }
            if (m != l) {
                if (iter++ == 60) return false;
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    for (int k = 0; k < n; ++k) {
                        f = z(k, i + 1);
                        z(k, i + 1) = s * z(k, i) + c * f;
                        z(k, i) = c * z(k, i) - s * f;
                    }
                }
                if (r == 0.0 && m - 1 >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
    return true;
}

} // namespace detail

struct EigenDecomposition {
    Vec values;     // ascending
    Matrix vectors; // columns match values
};

inline EigenDecomposition sym_eigen(const SymMatrix& m) {
    Matrix z = m.to_matrix();
    Vec d, e;
    detail::tridiagonalize(z, d, e);
    if (!detail::tql_implicit(d, e, z))
        throw Error("sym_eigen: QL iteration failed to converge");
    const int n = m.n();
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return d[a] < d[b]; });
    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (int j = 0; j < n; ++j) {
        out.values[j] = d[order[j]];
        for (int i = 0; i < n; ++i) out.vectors(i, j) = z(i, order[j]);
    }
    return out;
}

inline double min_eigenvalue(const SymMatrix& m) { return sym_eigen(m).values.front(); }

// Orthonormal basis of the complement of the all-ones vector: columns 2..n of
// the Householder reflector mapping e to sqrt(n) e_1.
inline Matrix e_orthobasis(int n) {
    Vec w(n);
    const double rn = std::sqrt(static_cast<double>(n));
    for (int i = 0; i < n; ++i) w[i] = 1.0 - (i == 0 ? rn : 0.0);
    double ww = 0.0;
    for (double wi : w) ww += wi * wi;
    Matrix V(n, n - 1);
    for (int k = 1; k < n; ++k) {
        const double f = 2.0 * w[k] / ww;
        for (int i = 0; i < n; ++i) V(i, k - 1) = (i == k ? 1.0 : 0.0) - f * w[i];
    }
    return V;
}

// ---------------------------------------------------------------------------
// Householder QR; Q with positive R diagonal (used for random orthogonal
// factors and for sign-fixed orthonormalization).
// ---------------------------------------------------------------------------

inline Matrix qr_orthogonal_factor(const Matrix& a_in) {
    const int n = a_in.rows();
    if (a_in.cols() != n) throw DimensionMismatch("qr: square input expected");
    Matrix a = a_in;
    Matrix q = Matrix::identity(n);
    Vec v(n);
    for (int k = 0; k < n; ++k) {
        double norm = 0.0;
        for (int i = k; i < n; ++i) norm += a(i, k) * a(i, k);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        double alpha = (a(k, k) > 0.0) ? -norm : norm;
        double vnorm2 = 0.0;
        for (int i = k; i < n; ++i) {
            v[i] = a(i, k);
            if (i == k) v[i] -= alpha;
            vnorm2 += v[i] * v[i];
        }
        if (vnorm2 == 0.0) continue;
        // Apply H = I - 2 v v'/v'v to A (left) and accumulate into Q.
        for (int j = k; j < n; ++j) {
            double s = 0.0;
            for (int i = k; i < n; ++i) s += v[i] * a(i, j);
            s = 2.0 * s / vnorm2;
            for (int i = k; i < n; ++i) a(i, j) -= s * v[i];
        }
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int i = k; i < n; ++i) s += v[i] * q(i, j);
            s = 2.0 * s / vnorm2;
            for (int i = k; i < n; ++i) q(i, j) -= s * v[i];
        }
    }
    // q now holds the product of reflectors = Q'; transpose and fix signs so
    // that R has a positive diagonal (makes Q unique, hence reproducible).
    Matrix Q = transpose(q);
    for (int k = 0; k < n; ++k) {
        if (a(k, k) < 0.0)
            for (int i = 0; i < n; ++i) Q(i, k) = -Q(i, k);
    }
    return Q;
}

} // namespace mesp
