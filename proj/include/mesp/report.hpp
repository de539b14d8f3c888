#pragma once

// Shared result types for the bound solvers and tuners.

#include <limits>
#include <set>
#include <string>

#include "mesp/linalg.hpp"

namespace mesp {

// alpha mixes two bounds; gamma_i = exp(psi_i) scale them.
struct MixParams {
    double alpha = 0.0;
    double psi1 = 0.0;
    double psi2 = 0.0;

    double gamma1() const { return std::exp(psi1); }
    double gamma2() const { return std::exp(psi2); }
};

enum class SolveFlag {
    max_iterations,
    budget_exhausted,
    singular_curvature,
};

// Bound families exposed by the CLI, the mixer, and the exact solver.
// "c" prefixes mark bounds computed on (C^{-1}, n-s) and shifted by ldet C.
enum class BoundKind { linx, bqp, cbqp, nlp, cnlp, mbqp, mnlp };

inline const char* to_string(BoundKind k) {
    switch (k) {
        case BoundKind::linx: return "linx";
        case BoundKind::bqp: return "bqp";
        case BoundKind::cbqp: return "cbqp";
        case BoundKind::nlp: return "nlp";
        case BoundKind::cnlp: return "cnlp";
        case BoundKind::mbqp: return "mbqp";
        case BoundKind::mnlp: return "mnlp";
    }
    return "unknown";
}

inline const char* to_string(SolveFlag f) {
    switch (f) {
        case SolveFlag::max_iterations: return "max_iterations";
        case SolveFlag::budget_exhausted: return "budget_exhausted";
        case SolveFlag::singular_curvature: return "singular_curvature";
    }
    return "unknown";
}

struct BoundReport {
    static constexpr double nan = std::numeric_limits<double>::quiet_NaN();

    double value = nan;        // certified upper bound: primal plus barrier gap margin
    double primal_value = nan; // objective at the returned iterate
    double dual_value = nan;   // certificate value (equals `value` when one is produced)
    Vec optimizer_x;
    MixParams params;
    int iterations = 0;
    double kkt_residual = nan;
    double wall_time_sec = 0.0;
    std::set<SolveFlag> flags;

    // Per-term values of the mixed BQP objective, when applicable.
    double f1_star = nan;
    double f2_star = nan;

    bool hit_iteration_cap() const { return flags.count(SolveFlag::max_iterations) > 0; }
};

} // namespace mesp
