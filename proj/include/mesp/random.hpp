#pragma once

// Seeded deterministic random helpers. mt19937_64 plus explicit bit-to-double
// conversion, so streams are identical across standard libraries.

#include <cmath>
#include <cstdint>
#include <random>

#include "mesp/linalg.hpp"

namespace mesp {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform01() {
        // 53 random bits into [0, 1).
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double gaussian() {
        // Box-Muller; one deviate per call keeps the stream position simple.
        double u1 = 1.0 - uniform01(); // (0, 1]
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Uniform integer in [0, m).
    std::uint64_t below(std::uint64_t m) { return eng_() % m; }

    Matrix gaussian_matrix(int rows, int cols) {
        Matrix m(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) m(i, j) = gaussian();
        return m;
    }

    Vec gaussian_vec(int n) {
        Vec v(n);
        for (int i = 0; i < n; ++i) v[i] = gaussian();
        return v;
    }

private:
    std::mt19937_64 eng_;
};

} // namespace mesp
