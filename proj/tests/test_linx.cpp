#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mesp/linx.hpp"
#include "support.hpp"

using namespace mesp;
using namespace mesp_test;

TEST_CASE("linx objective values") {
    CovarianceInstance id4(SymMatrix::identity(4), "I4");
    Rng rng(1);
    Vec x = random_feasible_x(rng, 4, 2);
    CHECK(linx_objective(id4, 2, 1.0, x) == doctest::Approx(0.0).epsilon(1e-12));

    CovarianceInstance m2(SymMatrix::from_rows({{2, 1}, {1, 2}}), "m2");
    CHECK(linx_objective(m2, 1, 1.0, Vec{0.5, 0.5}) == doctest::Approx(0.5 * std::log(5.0)));

    // Diagonal C at binary x: sum of selected log c_i, independent of gamma.
    CovarianceInstance d3(SymMatrix::diag({1, 2, 4}), "d3");
    for (double gamma : {0.3, 1.0, 5.0}) {
        CHECK(linx_objective(d3, 2, gamma, Vec{0, 1, 1}) == doctest::Approx(std::log(8.0)));
        CHECK(linx_objective(d3, 1, gamma, Vec{0, 0, 1}) == doctest::Approx(std::log(4.0)));
    }

    CHECK_THROWS_AS(linx_objective(d3, 2, 1.0, Vec{0.5, 0.5, 0.5}), Infeasible);
    CHECK_THROWS_AS(linx_objective(d3, 2, 1.0, Vec{1.2, 0.4, 0.4}), Infeasible);
}

TEST_CASE("linx gradient: identity, finite differences, diagonal closed form") {
    CovarianceInstance id5(SymMatrix::identity(5), "I5");
    Rng rng(2);
    Vec x = random_feasible_x(rng, 5, 2);
    for (double g : linx_gradient(id5, 2, 1.0, x)) CHECK(g == doctest::Approx(0.0).epsilon(1e-12));

    auto inst = gen_random_pd(6, 42, 30.0);
    Vec x6 = random_feasible_x(rng, 6, 3);
    const double gamma = 0.8;
    Vec grad = linx_gradient(inst, 3, gamma, x6);
    Vec fd = central_gradient(
        [&](const Vec& xx) { return 0.5 * (ldet(linx_F(inst, gamma, xx)) - 3 * std::log(gamma)); },
        x6);
    for (int i = 0; i < 6; ++i)
        CHECK(std::fabs(grad[i] - fd[i]) <= 1e-5 * std::max(1.0, std::fabs(fd[i])));

    Vec c = {0.5, 1.5, 3.0};
    CovarianceInstance dc(SymMatrix::diag(c), "dc");
    Vec xi = {0.2, 0.5, 0.3};
    Vec gd = linx_gradient(dc, 1, 1.3, xi);
    for (int i = 0; i < 3; ++i) {
        double expct = 0.5 * (1.3 * c[i] * c[i] - 1.0) / (1.0 + (1.3 * c[i] * c[i] - 1.0) * xi[i]);
        CHECK(gd[i] == doctest::Approx(expct));
    }
}

TEST_CASE("solve_linx: trivial, dominance, start independence") {
    CovarianceInstance id6(SymMatrix::identity(6), "I6");
    auto rep = solve_linx(id6, 3, 1.0);
    CHECK(std::fabs(rep.value) <= 1e-6);
    CHECK(rep.kkt_residual <= 1e-7);

    CovarianceInstance d3(SymMatrix::diag({1, 2, 4}), "d3");
    auto rep2 = solve_linx(d3, 2, 1.0);
    CHECK(rep2.value >= std::log(8.0) - 1e-9);

    auto inst = gen_random_pd(10, 7, 100.0);
    Rng rng(5);
    LinxOptions o1;
    auto a = solve_linx(inst, 4, 1.0, o1);
    LinxOptions o2;
    o2.x0 = random_feasible_x(rng, 10, 4);
    auto b = solve_linx(inst, 4, 1.0, o2);
    CHECK(std::fabs(a.value - b.value) <= 1e-6);
}

TEST_CASE("linx state snapshot recomputes consistently") {
    auto inst = gen_random_pd(6, 13, 20.0);
    Rng rng(6);
    Vec x = random_feasible_x(rng, 6, 3);
    auto st = make_linx_state(inst, 3, 1.4, x);
    CHECK(st.value == doctest::Approx(0.5 * (ldet(st.F) - 3 * std::log(1.4))).epsilon(1e-12));
    // F recomputed from scratch matches the stored matrix
    SymMatrix F2 = linx_F(inst, 1.4, x);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) CHECK(std::fabs(st.F(i, j) - F2(i, j)) <= 1e-10);
    CHECK_THROWS_AS(make_linx_state(inst, 3, 1.4, Vec(6, 0.9)), Infeasible);
}

TEST_CASE("solve_linx short circuits") {
    CovarianceInstance d3(SymMatrix::diag({1, 2, 4}), "d3");
    CHECK(solve_linx(d3, 3, 2.0).value == doctest::Approx(std::log(8.0)));
    CHECK(solve_linx(d3, 0, 2.0).value == doctest::Approx(0.0));
}

TEST_CASE("linx upper bound dominates the oracle") {
    for (int seed : {11, 12}) {
        auto inst = gen_random_pd(8, seed, 50.0);
        for (int s : {2, 4, 6}) {
            double z = brute_force_opt(inst, s).first;
            for (double gamma : {0.5, 1.0, 2.0}) {
                auto rep = solve_linx(inst, s, gamma);
                CHECK(rep.value + 1e-7 >= z);
            }
        }
    }
}

TEST_CASE("linx binary exactness") {
    Rng rng(9);
    CovarianceInstance dc(SymMatrix::diag({0.5, 1.0, 2.0, 5.0}), "dc");
    for (int t = 0; t < 5; ++t) {
        Vec x = random_binary_x(rng, 4, 2);
        double ent = entropy(dc, support_of(x));
        for (double gamma : {0.2, 1.0, 3.7})
            CHECK(std::fabs(linx_objective(dc, 2, gamma, x) - ent) <= 1e-8);
    }
    auto inst = gen_random_pd(7, 21, 40.0);
    for (int t = 0; t < 5; ++t) {
        Vec x = random_binary_x(rng, 7, 3);
        double ent = entropy(inst, support_of(x));
        for (double gamma : {0.5, 1.0, 2.0})
            CHECK(std::fabs(linx_objective(inst, 3, gamma, x) - ent) <= 1e-6);
    }
}

TEST_CASE("tune_linx_gamma: fixed point at identity, improvement, convexity") {
    CovarianceInstance id6(SymMatrix::identity(6), "I6");
    auto t = tune_linx_gamma(id6, 2, 0.0);
    CHECK(std::fabs(t.psi) <= 1e-6);
    CHECK(std::fabs(t.value) <= 1e-6);
    CHECK(t.g_residual <= 1e-6);

    CovarianceInstance d3(SymMatrix::diag({1, 2, 4}), "d3");
    auto base = solve_linx(d3, 2, 1.0);
    auto tuned = tune_linx_gamma(d3, 2, 0.0);
    CHECK(tuned.value <= base.value + 1e-9);

    // Midpoint convexity of H(psi) on a 5-point grid.
    auto inst = gen_random_pd(8, 31, 60.0);
    Vec psis = {-1.0, -0.5, 0.0, 0.5, 1.0};
    Vec H;
    for (double p : psis) H.push_back(solve_linx(inst, 3, std::exp(p)).value);
    for (size_t i = 0; i + 2 < H.size(); ++i)
        CHECK(H[i + 1] <= 0.5 * (H[i] + H[i + 2]) + 1e-6);
}

TEST_CASE("tuned linx is invariant under complementation") {
    auto inst = gen_random_pd(9, 77, 80.0);
    auto [comp, shift] = complement(inst);
    for (int s : {3, 5}) {
        auto a = tune_linx_gamma(inst, s, 0.0);
        auto b = tune_linx_gamma(comp, 9 - s, 0.0);
        CHECK(std::fabs(a.value - (shift + b.value)) <= 1e-4);
    }
}

TEST_CASE("psi derivatives match finite differences at fixed x*") {
    auto inst = gen_random_pd(7, 55, 50.0);
    const int s = 3;
    auto rep = solve_linx(inst, s, 1.0);
    const Vec xstar = rep.optimizer_x;

    auto v_of_psi = [&](double psi) {
        return ldet(linx_F(inst, std::exp(psi), xstar)) - s * psi;
    };
    for (double psi : {-0.7, 0.0, 0.6}) {
        double G = linx_psi_residual(inst, s, psi, xstar);
        double Gfd = central_scalar_derivative(v_of_psi, psi);
        CHECK(std::fabs(G - Gfd) <= 1e-4 * std::max(1.0, std::fabs(Gfd)));

        double Hg = linx_psi_curvature(inst, s, psi, xstar);
        double Hfd = central_scalar_derivative(
            [&](double p) { return linx_psi_residual(inst, s, p, xstar); }, psi);
        CHECK(std::fabs(Hg - Hfd) <= 1e-4 * std::max(1.0, std::fabs(Hfd)));

        // chain-rule identity: G = gamma * dv/dgamma
        double gamma = std::exp(psi);
        double dvdg = central_scalar_derivative(
            [&](double g) { return ldet(linx_F(inst, g, xstar)) - s * std::log(g); }, gamma,
            1e-6 * std::max(1.0, gamma));
        CHECK(std::fabs(G - gamma * dvdg) <= 1e-4 * std::max(1.0, std::fabs(G)));
    }
}
