#pragma once

// Shared helpers for the test suites: feasible-point generators and central
// finite differences, independent of the solver code paths they check.

#include <cmath>
#include <functional>
#include <vector>

#include "mesp/instance.hpp"
#include "mesp/random.hpp"

namespace mesp_test {

using mesp::Rng;
using mesp::Vec;

// Strictly interior point of { e'x = s, 0 <= x <= e }, randomized.
inline Vec random_feasible_x(Rng& rng, int n, int s, double margin = 0.05) {
    Vec x(n, static_cast<double>(s) / n);
    Vec z(n);
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
        z[i] = rng.gaussian();
        mean += z[i];
    }
    mean /= n;
    // zero-sum perturbation keeps e'x = s; scale keeps the box margin
    double max_abs = 1e-12;
    for (int i = 0; i < n; ++i) {
        z[i] -= mean;
        max_abs = std::max(max_abs, std::fabs(z[i]));
    }
    double room = std::min(x[0] - margin, 1.0 - margin - x[0]);
    room = std::max(room, 0.0);
    double scale = 0.9 * room / max_abs;
    for (int i = 0; i < n; ++i) x[i] += scale * z[i];
    return x;
}

// Characteristic vector of a random s-subset.
inline Vec random_binary_x(Rng& rng, int n, int s) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.below(i + 1)]);
    Vec x(n, 0.0);
    for (int k = 0; k < s; ++k) x[idx[k]] = 1.0;
    return x;
}

inline std::vector<int> support_of(const Vec& x) {
    std::vector<int> S;
    for (int i = 0; i < static_cast<int>(x.size()); ++i)
        if (x[i] > 0.5) S.push_back(i + 1);
    return S;
}

// Central finite-difference gradient.
inline Vec central_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                            double h = 1e-5) {
    Vec g(x.size());
    Vec xp = x, xm = x;
    for (size_t i = 0; i < x.size(); ++i) {
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        g[i] = (f(xp) - f(xm)) / (2.0 * h);
        xp[i] = x[i];
        xm[i] = x[i];
    }
    return g;
}

inline double central_scalar_derivative(const std::function<double(double)>& f, double t,
                                        double h = 1e-5) {
    return (f(t + h) - f(t - h)) / (2.0 * h);
}

} // namespace mesp_test
