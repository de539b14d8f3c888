#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mesp/mixer.hpp"
#include "support.hpp"

using namespace mesp;
using namespace mesp_test;

TEST_CASE("solve_tilted reduces to the plain bound at zero tilt") {
    auto inst = gen_random_pd(7, 6, 45.0);
    BoundSpec linx{BoundKind::linx, 1.0, std::nullopt};
    TiltedBoundQuery q{linx, 1.0, {}};
    auto plain = solve_tilted(inst, 3, q);
    auto direct = solve_linx(inst, 3, 1.0);
    CHECK(plain.value == doctest::Approx(direct.value).epsilon(1e-9));

    BoundSpec cb{BoundKind::cbqp, 1.0, std::nullopt};
    TiltedBoundQuery qc{cb, 1.0, {}};
    auto comp = solve_tilted(inst, 3, qc);
    auto ref = solve_cbqp(inst, 3, 1.0);
    CHECK(comp.value == doctest::Approx(ref.report.value).epsilon(1e-8));
}

TEST_CASE("constant tilt shifts the value by exactly -c*s") {
    auto inst = gen_random_pd(6, 9, 30.0);
    const double c = 0.7;
    for (BoundKind kind : {BoundKind::linx, BoundKind::nlp, BoundKind::bqp}) {
        BoundSpec spec{kind, 1.0, std::nullopt};
        if (kind == BoundKind::nlp) {
            spec.nlp = nlp_trace_params(inst);
            spec.gamma = 1.0 / spec.nlp->d_max();
        }
        TiltedBoundQuery q0{spec, 1.0, {}};
        TiltedBoundQuery qc{spec, 1.0, Vec(6, c)};
        double v0 = solve_tilted(inst, 3, q0).value;
        double vc = solve_tilted(inst, 3, qc).value;
        CHECK(std::fabs(vc - (v0 - c * 3)) <= 1e-6);
    }
}

TEST_CASE("weight zero solves the linear program over the relaxation") {
    auto inst = gen_random_pd(8, 12, 25.0);
    Rng rng(5);
    Vec tilt = rng.gaussian_vec(8);
    Vec sorted = tilt;
    std::sort(sorted.begin(), sorted.end());
    const int s = 3;
    double expect = -(sorted[0] + sorted[1] + sorted[2]);
    for (BoundKind kind : {BoundKind::linx, BoundKind::nlp}) {
        BoundSpec spec{kind, 1.0, std::nullopt};
        if (kind == BoundKind::nlp) {
            spec.nlp = nlp_trace_params(inst);
            spec.gamma = 1.0 / spec.nlp->d_max();
        }
        TiltedBoundQuery q{spec, 0.0, tilt};
        double v = solve_tilted(inst, s, q).value;
        CHECK(std::fabs(v - expect) <= 1e-6);
    }
}

TEST_CASE("dual_eval at pi = 0 is the weighted sum of plain bounds") {
    auto inst = gen_random_pd(7, 21, 40.0);
    const int s = 3;
    BoundSpec A{BoundKind::linx, 1.0, std::nullopt};
    BoundSpec B{BoundKind::cnlp, 1.0, std::nullopt};
    auto [comp, shift] = complement(inst);
    B.nlp = nlp_trace_params(comp);
    B.gamma = 1.0 / B.nlp->d_max();

    const double alpha = 0.6;
    DualTilt dt;
    dt.alpha = alpha;
    auto ev = dual_eval(inst, s, dt, A, B);
    double va = solve_linx(inst, s, 1.0).value;
    double vb = shift + solve_nlp(comp, 4, *B.nlp, B.gamma).value;
    CHECK(std::fabs(ev.value - (alpha * va + (1 - alpha) * vb)) <= 1e-6);
}

TEST_CASE("weak duality holds for every multiplier") {
    CovarianceInstance id6(SymMatrix::identity(6), "I6");
    BoundSpec A{BoundKind::linx, 1.0, std::nullopt};
    BoundSpec B{BoundKind::cbqp, 1.0, std::nullopt};
    Rng rng(31);
    for (int t = 0; t < 3; ++t) {
        DualTilt dt;
        dt.alpha = 0.5;
        dt.pi = rng.gaussian_vec(6);
        auto ev = dual_eval(id6, 2, dt, A, B);
        CHECK(ev.value >= -1e-7);
    }

    auto inst = gen_random_pd(8, 44, 60.0);
    double z = brute_force_opt(inst, 3).first;
    BoundSpec Bn{BoundKind::cnlp, 1.0, std::nullopt};
    auto [comp, shift] = complement(inst);
    Bn.nlp = nlp_trace_params(comp);
    Bn.gamma = 1.0 / Bn.nlp->d_max();
    for (int t = 0; t < 4; ++t) {
        DualTilt dt;
        dt.alpha = 0.35;
        dt.pi = rng.gaussian_vec(8);
        for (double& v : dt.pi) v *= 0.5;
        auto ev = dual_eval(inst, 3, dt, A, Bn);
        CHECK(ev.value >= z - 1e-6);
    }
}

TEST_CASE("subgradient supporting-hyperplane inequality") {
    auto inst = gen_random_pd(7, 2, 35.0);
    const int s = 3;
    BoundSpec A{BoundKind::linx, 1.0, std::nullopt};
    BoundSpec B{BoundKind::cbqp, 1.0, std::nullopt};
    Rng rng(7);
    DualTilt dt;
    dt.alpha = 0.5;
    dt.pi = rng.gaussian_vec(7);
    // tight solves make the reported subgradient an eps-subgradient with
    // eps far below the test slack
    const double tol = 1e-10;
    auto base = dual_eval(inst, s, dt, A, B, tol);
    for (int t = 0; t < 3; ++t) {
        Vec d = rng.gaussian_vec(7);
        const double eps = 1e-3;
        DualTilt dp = dt;
        for (int i = 0; i < 7; ++i) dp.pi[i] += eps * d[i];
        auto moved = dual_eval(inst, s, dp, A, B, tol);
        double linear = eps * dot(d, base.subgradient);
        CHECK(moved.value >= base.value + linear - 1e-6 * inf_norm(d));
    }
}

TEST_CASE("subgradient_optimize: identity terminates, nlp x linx improves") {
    CovarianceInstance id6(SymMatrix::identity(6), "I6");
    BoundSpec A{BoundKind::linx, 1.0, std::nullopt};
    BoundSpec B{BoundKind::cbqp, 1.0, std::nullopt};
    auto res = subgradient_optimize(id6, 2, 0.5, A, B, 10);
    CHECK(std::fabs(res.report.value) <= 1e-6);
    CHECK(res.trace.size() == 1); // zero subgradient at pi = 0

    auto inst = gen_random_pd(12, 99, 90.0);
    const int s = 5;
    BoundSpec An{BoundKind::nlp, 1.0, std::nullopt};
    An.nlp = nlp_trace_params(inst);
    auto grid = gamma_grid(inst, s, *An.nlp, 15);
    An.gamma = grid.gamma;
    BoundSpec Bl{BoundKind::linx, 1.0, std::nullopt};
    auto tuned = tune_linx_gamma(inst, s, 0.0);
    Bl.gamma = std::exp(tuned.psi);

    const double alpha = 0.5;
    auto mix = subgradient_optimize(inst, s, alpha, An, Bl, 40);
    double z = brute_force_opt(inst, s).first;
    CHECK(mix.report.value >= z - 1e-6);
    CHECK(mix.report.value <= mix.value_at_zero + 1e-9);
    for (const auto& row : mix.trace) CHECK(row.dual >= z - 1e-6);
    MESSAGE("mix improved the zero-multiplier value by ", mix.value_at_zero - mix.report.value);
}

TEST_CASE("bqp x cbqp mix dominates the strengthened mixed bound") {
    auto inst = gen_random_pd(7, 55, 50.0);
    const int s = 3;
    const double alpha_mbqp = 0.4; // mixer weight on the A side is 1 - alpha_mbqp
    BoundSpec A{BoundKind::bqp, 1.0, std::nullopt};
    BoundSpec B{BoundKind::cbqp, 1.0, std::nullopt};
    auto mix = subgradient_optimize(inst, s, 1.0 - alpha_mbqp, A, B, 25);
    auto strengthened = solve_mbqp(inst, s, MixParams{alpha_mbqp, 0.0, 0.0});
    CHECK(mix.report.value >= strengthened.report.value - 1e-4);
    MESSAGE("two-variable dual vs strengthened: ",
            mix.report.value - strengthened.report.value);
}
