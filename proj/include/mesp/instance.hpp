#pragma once

// MESP problem model: validated covariance instances, complementation,
// entropy of principal submatrices, the exhaustive oracle, a greedy + 1-swap
// heuristic, synthetic generators, and the matrix text format.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mesp/errors.hpp"
#include "mesp/linalg.hpp"
#include "mesp/random.hpp"

namespace mesp {

// ---------------------------------------------------------------------------
// CovarianceInstance: order-n positive-definite C with cached factorization,
// inverse, and log-determinant. Immutable after construction.
// ---------------------------------------------------------------------------

class CovarianceInstance {
public:
    CovarianceInstance(SymMatrix C, std::string label) : C_(std::move(C)), label_(std::move(label)) {
        Matrix L = [&] {
            auto f = try_cholesky(C_);
            if (!f) throw NotPositiveDefinite("instance covariance is not positive definite");
            return *f;
        }();
        ldetC_ = ldet_from_factor(L);
        Cinv_ = inverse_from_factor(L);
        // Inversion quality gate: ||C Cinv - I||_inf <= 1e-8.
        Matrix resid = matmul(C_.to_matrix(), Cinv_.to_matrix());
        for (int i = 0; i < n(); ++i) resid(i, i) -= 1.0;
        if (inf_norm(resid) > 1e-8)
            throw NotPositiveDefinite("instance too ill-conditioned: inverse residual exceeds 1e-8");
    }

    int n() const { return C_.n(); }
    const SymMatrix& C() const { return C_; }
    const SymMatrix& Cinv() const { return Cinv_; }
    double ldetC() const { return ldetC_; }
    const std::string& label() const { return label_; }

private:
    SymMatrix C_;
    SymMatrix Cinv_;
    double ldetC_ = 0.0;
    std::string label_;
};

// A candidate subset; indices are 1-based and sorted.
struct SubsetSelection {
    std::vector<int> indices;
    int s = 0;
    double entropy = 0.0;
};

// ---------------------------------------------------------------------------
// Entropy of a principal submatrix. Indices 1-based.
// ---------------------------------------------------------------------------

inline SymMatrix principal_submatrix(const SymMatrix& C, const std::vector<int>& subset) {
    const int k = static_cast<int>(subset.size());
    SymMatrix sub(k);
    for (int a = 0; a < k; ++a)
        for (int b = a; b < k; ++b) sub.set(a, b, C(subset[a] - 1, subset[b] - 1));
    return sub;
}

inline double entropy(const CovarianceInstance& inst, const std::vector<int>& subset) {
    if (subset.empty()) throw EmptySubset();
    for (int i : subset)
        if (i < 1 || i > inst.n()) throw IndexOutOfRange("subset index outside {1..n}");
    return ldet(principal_submatrix(inst.C(), subset));
}

// ---------------------------------------------------------------------------
// Complementation: z(C,s) = ldet C + z(C^{-1}, n-s). Returns the instance
// over C^{-1} and the shift ldet C.
// ---------------------------------------------------------------------------

inline std::pair<CovarianceInstance, double> complement(const CovarianceInstance& inst) {
    CovarianceInstance comp(inst.Cinv(), inst.label() + "-comp");
    return {std::move(comp), inst.ldetC()};
}

// ---------------------------------------------------------------------------
// Exhaustive oracle: exact optimum over all s-subsets, lexicographically
// smallest among ties. Guarded at n <= 24.
// ---------------------------------------------------------------------------

inline std::pair<double, SubsetSelection> brute_force_opt(const CovarianceInstance& inst, int s) {
    const int n = inst.n();
    if (n > 24) throw TooLargeForOracle("exhaustive oracle limited to n <= 24");
    if (s < 1 || s > n) throw InvalidParam("oracle: s must satisfy 1 <= s <= n");

    std::vector<int> comb(s);
    for (int i = 0; i < s; ++i) comb[i] = i + 1;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> best_set;
    while (true) {
        double v = ldet(principal_submatrix(inst.C(), comb));
        if (v > best) {
            best = v;
            best_set = comb;
        }
        // next combination in lexicographic order
        int i = s - 1;
        while (i >= 0 && comb[i] == n - s + i + 1) --i;
        if (i < 0) break;
        ++comb[i];
        for (int j = i + 1; j < s; ++j) comb[j] = comb[j - 1] + 1;
    }
    SubsetSelection sel{best_set, s, best};
    return {best, sel};
}

// ---------------------------------------------------------------------------
// Heuristic lower bound: greedy augmentation followed by 1-swap local search.
// Deterministic tie-breaks (smallest index).
// ---------------------------------------------------------------------------

inline std::pair<double, SubsetSelection> greedy_heuristic(const CovarianceInstance& inst, int s) {
    const int n = inst.n();
    if (s < 1 || s > n) throw InvalidParam("heuristic: s must satisfy 1 <= s <= n");

    std::vector<int> chosen;
    std::vector<bool> in(n + 1, false);
    for (int step = 0; step < s; ++step) {
        int best_i = -1;
        double best_v = -std::numeric_limits<double>::infinity();
        for (int i = 1; i <= n; ++i) {
            if (in[i]) continue;
            std::vector<int> cand = chosen;
            cand.push_back(i);
            std::sort(cand.begin(), cand.end());
            auto L = try_cholesky(principal_submatrix(inst.C(), cand));
            double v = L ? ldet_from_factor(*L) : -std::numeric_limits<double>::infinity();
            if (v > best_v) {
                best_v = v;
                best_i = i;
            }
        }
        chosen.push_back(best_i);
        std::sort(chosen.begin(), chosen.end());
        in[best_i] = true;
    }

    double cur = ldet(principal_submatrix(inst.C(), chosen));
    // 1-swap local search to a local optimum.
    bool improved = true;
    while (improved) {
        improved = false;
        for (int out_pos = 0; out_pos < s && !improved; ++out_pos) {
            for (int i = 1; i <= n && !improved; ++i) {
                if (in[i]) continue;
                std::vector<int> cand = chosen;
                cand[out_pos] = i;
                std::sort(cand.begin(), cand.end());
                auto L = try_cholesky(principal_submatrix(inst.C(), cand));
                if (!L) continue;
                double v = ldet_from_factor(*L);
                if (v > cur + 1e-12) {
                    in[chosen[out_pos]] = false;
                    in[i] = true;
                    chosen = cand;
                    cur = v;
                    improved = true;
                }
            }
        }
    }
    SubsetSelection sel{chosen, s, cur};
    return {cur, sel};
}

// ---------------------------------------------------------------------------
// Synthetic generator: Q Lambda Q' with log-uniform spectrum spanning the
// condition target and a seeded random orthogonal Q.
// ---------------------------------------------------------------------------

inline CovarianceInstance gen_random_pd(int n, std::uint64_t seed, double cond_target) {
    if (n < 1) throw InvalidParam("gen_random_pd: n must be >= 1");
    if (!(cond_target >= 1.0)) throw InvalidParam("gen_random_pd: cond_target must be >= 1");

    std::string label = "rand-n" + std::to_string(n) + "-seed" + std::to_string(seed);
    Rng rng(seed);
    if (n == 1) {
        SymMatrix C(1);
        C.set(0, 0, 1.0);
        return CovarianceInstance(C, label);
    }
    // Log-spectrum pinned at +-0.5*log(cond); interior exponents uniform.
    const double half = 0.5 * std::log(cond_target);
    Vec expo(n);
    expo[0] = -half;
    expo[n - 1] = half;
    for (int i = 1; i < n - 1; ++i) expo[i] = rng.uniform(-half, half);
    std::sort(expo.begin(), expo.end());

    Matrix Q = qr_orthogonal_factor(rng.gaussian_matrix(n, n));
    Matrix scaled = Q; // columns scaled by eigenvalues
    for (int j = 0; j < n; ++j) {
        const double lam = std::exp(expo[j]);
        for (int i = 0; i < n; ++i) scaled(i, j) *= lam;
    }
    Matrix C = matmul(scaled, transpose(Q));
    return CovarianceInstance(SymMatrix::from_matrix(C, 1e-8), label);
}

// ---------------------------------------------------------------------------
// Matrix text format: optional '#' comment lines; first data line holds n;
// then n rows of n whitespace-separated decimal values. Writing uses 17
// significant digits so a round-trip preserves every bit.
// ---------------------------------------------------------------------------

inline SymMatrix read_matrix_text(std::istream& in, const std::string& origin) {
    std::string line;
    auto next_data_line = [&](std::string& out) -> bool {
        while (std::getline(in, line)) {
            size_t pos = line.find_first_not_of(" \t\r\n");
            if (pos == std::string::npos) continue;
            if (line[pos] == '#') continue;
            out = line;
            return true;
        }
        return false;
    };

    std::string header;
    if (!next_data_line(header)) throw ParseError(origin + ": missing matrix order line");
    int n = 0;
    {
        std::istringstream iss(header);
        if (!(iss >> n) || n < 1) throw ParseError(origin + ": invalid matrix order");
        std::string extra;
        if (iss >> extra) throw ParseError(origin + ": trailing tokens after matrix order");
    }
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) {
        std::string row;
        if (!next_data_line(row)) throw ParseError(origin + ": expected " + std::to_string(n) + " rows");
        std::istringstream iss(row);
        for (int j = 0; j < n; ++j) {
            if (!(iss >> m(i, j)))
                throw ParseError(origin + ": row " + std::to_string(i + 1) + " has wrong length");
        }
        std::string extra;
        if (iss >> extra)
            throw ParseError(origin + ": row " + std::to_string(i + 1) + " has wrong length");
    }
    return SymMatrix::from_matrix(m, 1e-8);
}

inline CovarianceInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open");
    return CovarianceInstance(read_matrix_text(in, path), path);
}

inline void write_matrix_text(std::ostream& out, const SymMatrix& C, const std::string& comment = "") {
    if (!comment.empty()) out << "# " << comment << "\n";
    out << C.n() << "\n";
    char buf[64];
    for (int i = 0; i < C.n(); ++i) {
        for (int j = 0; j < C.n(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", C(i, j));
            out << (j ? " " : "") << buf;
        }
        out << "\n";
    }
}

inline void save_instance(const CovarianceInstance& inst, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open for writing");
    write_matrix_text(out, inst.C(), inst.label());
}

} // namespace mesp
