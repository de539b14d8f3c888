#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mesp/instance.hpp"

using namespace mesp;

namespace {

CovarianceInstance tiny3() {
    return CovarianceInstance(SymMatrix::from_rows({{4, 1, 0}, {1, 3, 1}, {0, 1, 2}}), "tiny3");
}

std::string temp_path(const char* name) {
    return std::string("mesp_test_") + name + ".txt";
}

} // namespace

TEST_CASE("load_instance parses, validates, and caches") {
    {
        std::ofstream f(temp_path("id2"));
        f << "# identity\n2\n1 0\n0 1\n";
    }
    auto inst = load_instance(temp_path("id2"));
    CHECK(inst.n() == 2);
    CHECK(inst.ldetC() == doctest::Approx(0.0));

    {
        std::ofstream f(temp_path("m2"));
        f << "2\n2 1\n1 2\n";
    }
    auto inst2 = load_instance(temp_path("m2"));
    CHECK(inst2.ldetC() == doctest::Approx(std::log(3.0)));
    CHECK(inst2.Cinv()(0, 0) == doctest::Approx(2.0 / 3.0));

    {
        std::ofstream f(temp_path("bad"));
        f << "2\n1 0 0\n0 1\n";
    }
    CHECK_THROWS_AS(load_instance(temp_path("bad")), ParseError);
    std::remove(temp_path("id2").c_str());
    std::remove(temp_path("m2").c_str());
    std::remove(temp_path("bad").c_str());
}

TEST_CASE("matrix text round-trip preserves values exactly") {
    auto inst = gen_random_pd(7, 123, 50.0);
    std::ostringstream out;
    write_matrix_text(out, inst.C(), "round trip");
    std::istringstream in(out.str());
    SymMatrix back = read_matrix_text(in, "buffer");
    CHECK(back.data() == inst.C().data());
}

TEST_CASE("complement: identity, diagonal, exhaustive identity on random instance") {
    auto [ci, shift_i] = complement(CovarianceInstance(SymMatrix::identity(3), "I3"));
    CHECK(shift_i == doctest::Approx(0.0));
    CHECK(ci.C()(1, 1) == doctest::Approx(1.0));

    auto [cd, shift_d] = complement(CovarianceInstance(SymMatrix::diag({1, 2, 4}), "d"));
    CHECK(shift_d == doctest::Approx(std::log(8.0)));
    CHECK(cd.C()(0, 0) == doctest::Approx(1.0));
    CHECK(cd.C()(1, 1) == doctest::Approx(0.5));
    CHECK(cd.C()(2, 2) == doctest::Approx(0.25));

    // ldet C[S,S] = ldet C + ldet Cinv[Sbar,Sbar], every nonempty proper S.
    auto inst = gen_random_pd(10, 5, 100.0);
    auto [comp, shift] = complement(inst);
    const int n = inst.n();
    for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
        std::vector<int> S, Sbar;
        for (int i = 0; i < n; ++i) ((mask >> i) & 1u ? S : Sbar).push_back(i + 1);
        double lhs = entropy(inst, S);
        double rhs = shift + entropy(comp, Sbar);
        CHECK(std::fabs(lhs - rhs) <= 1e-9);
    }
}

TEST_CASE("entropy on principal submatrices") {
    CHECK(entropy(CovarianceInstance(SymMatrix::identity(5), "I"), {1, 3, 5}) == doctest::Approx(0.0));
    CHECK(entropy(CovarianceInstance(SymMatrix::diag({1, 2, 4}), "d"), {2, 3}) ==
          doctest::Approx(std::log(8.0)));
    CHECK(entropy(tiny3(), {1, 2}) == doctest::Approx(std::log(11.0)));
    CHECK_THROWS_AS(entropy(tiny3(), {}), EmptySubset);
    CHECK_THROWS_AS(entropy(tiny3(), {0, 1}), IndexOutOfRange);
    CHECK_THROWS_AS(entropy(tiny3(), {4}), IndexOutOfRange);
}

TEST_CASE("brute force oracle") {
    auto [z0, s0] = brute_force_opt(CovarianceInstance(SymMatrix::identity(5), "I5"), 3);
    CHECK(z0 == doctest::Approx(0.0));
    CHECK(s0.indices == std::vector<int>{1, 2, 3});

    auto [z1, s1] = brute_force_opt(CovarianceInstance(SymMatrix::diag({1, 2, 4}), "d"), 2);
    CHECK(z1 == doctest::Approx(std::log(8.0)));
    CHECK(s1.indices == std::vector<int>{2, 3});

    auto [z2, s2] = brute_force_opt(tiny3(), 2);
    CHECK(z2 == doctest::Approx(std::log(11.0)));
    CHECK(s2.indices == std::vector<int>{1, 2});

    CHECK_THROWS_AS(brute_force_opt(gen_random_pd(25, 1, 10.0), 3), TooLargeForOracle);
}

TEST_CASE("greedy heuristic: trivial picks and oracle dominance") {
    auto [lb0, g0] = greedy_heuristic(CovarianceInstance(SymMatrix::diag({1, 2, 4}), "d"), 1);
    CHECK(lb0 == doctest::Approx(std::log(4.0)));
    CHECK(g0.indices == std::vector<int>{3});

    auto [lb1, g1] = greedy_heuristic(CovarianceInstance(SymMatrix::identity(6), "I"), 4);
    CHECK(lb1 == doctest::Approx(0.0));
    CHECK(static_cast<int>(g1.indices.size()) == 4);

    int hits = 0;
    for (int seed = 0; seed < 8; ++seed) {
        auto inst = gen_random_pd(12, 100 + seed, 200.0);
        auto [lb, sel] = greedy_heuristic(inst, 5);
        auto [z, best] = brute_force_opt(inst, 5);
        CHECK(lb <= z + 1e-9);
        CHECK(entropy(inst, sel.indices) == doctest::Approx(sel.entropy));
        if (std::fabs(lb - z) <= 1e-8) ++hits;
    }
    MESSAGE("greedy matched the oracle on ", hits, "/8 instances");
}

TEST_CASE("complementation identity for oracle values") {
    for (int seed : {1, 2, 3}) {
        auto inst = gen_random_pd(9, seed, 64.0);
        auto [comp, shift] = complement(inst);
        for (int s = 1; s < 9; ++s) {
            double direct = brute_force_opt(inst, s).first;
            double via = shift + brute_force_opt(comp, 9 - s).first;
            CHECK(std::fabs(direct - via) <= 1e-9);
        }
    }
}

TEST_CASE("generator: determinism and conditioning") {
    auto a = gen_random_pd(1, 9, 10.0);
    CHECK(a.C()(0, 0) > 0.0);

    auto b1 = gen_random_pd(8, 7, 100.0);
    auto b2 = gen_random_pd(8, 7, 100.0);
    CHECK(b1.C().data() == b2.C().data());

    auto eig = sym_eigen(b1.C());
    double ratio = eig.values.back() / eig.values.front();
    CHECK(ratio >= 95.0);
    CHECK(ratio <= 105.0);
}
