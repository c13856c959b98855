#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "gmlattice/errors.hpp"
#include "gmlattice/mesa.hpp"
#include "gmlattice/refine.hpp"

using namespace gml;

TEST_SUITE("mesa") {

TEST_CASE("eta recursion values") {
    CHECK_THROWS_AS(eta_recursion(3.99, 5), Nonexistence);
    try {
        eta_recursion(3.0, 5);
        FAIL("expected nonexistence");
    } catch (const Nonexistence& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
    const auto at4 = eta_recursion(4.0, 2);
    CHECK(at4[0] == 1.0);
    CHECK(at4[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_NOTHROW(eta_recursion(4.01, 10));
    const auto at5 = eta_recursion(5.0, 2);
    CHECK(at5[1] == doctest::Approx((1 - std::sqrt(0.2)) / 2).epsilon(1e-14));
    CHECK(at5[1] == doctest::Approx(0.27639).epsilon(1e-5));

    const std::vector<RootBranch> plus{RootBranch::plus};
    CHECK(eta_recursion(5.0, 2, plus)[1] == doctest::Approx((1 + std::sqrt(0.2)) / 2).epsilon(1e-14));
    CHECK_THROWS_AS(eta_recursion(5.0, 3, plus), InvalidInput);
    CHECK_THROWS_AS(eta_recursion(-1.0, 3), InvalidInput);
}

TEST_CASE("sandwich bound and monotone convergence") {
    for (double kappa : {4.01, 4.5, 5.0, 8.0, 20.0}) {
        const auto eta = eta_recursion(kappa, 30);
        for (std::size_t k = 1; k < eta.size(); ++k) {
            // Strict once the gap is resolvable in double precision.
            CHECK(eta[k] >= eta[k - 1] / kappa);
            if (eta[k - 1] / kappa > 1e-12) CHECK(eta[k] > eta[k - 1] / kappa);
            CHECK(eta[k] < 1.0);
            CHECK(eta[k] > 0.0);
            CHECK(eta[k] < eta[k - 1]);
        }
    }
    const auto eta = eta_recursion(5.0, 30);
    // Smaller fixed point of eta = (1 - sqrt(1 - 4 eta / kappa)) / 2 is 0.
    for (std::size_t k = 2; k < eta.size(); ++k) {
        CHECK(eta[k - 1] - eta[k] <= eta[k - 2] - eta[k - 1]);
    }
    CHECK(eta.back() < 1e-2);
}

TEST_CASE("first tail node closed form") {
    for (double kappa : {4.0, 5.0, 7.5}) {
        const auto eta = eta_recursion(kappa, 2);
        const double u1 = (kappa - std::sqrt(kappa * kappa - 4 * kappa)) / 2;
        CHECK(std::abs(eta[1] * kappa - u1) < 1e-12);
        const std::vector<RootBranch> plus{RootBranch::plus};
        const double u1p = (kappa + std::sqrt(kappa * kappa - 4 * kappa)) / 2;
        CHECK(std::abs(eta_recursion(kappa, 2, plus)[1] * kappa - u1p) < 1e-12);
    }
}

TEST_CASE("leading-order profile layout") {
    const auto p = leading_order_mesa(49, 10, 5.0, 1e-3);
    CHECK(p.tail_length() == 20);
    const double r = 5.0 * 1e-3;
    for (int k = 0; k < 10; ++k) {
        CHECK(p.u0[k] == 1.0);
        CHECK(p.v0[k] == 1.0);
    }
    for (int t = 1; t <= 20; ++t) {
        const int right = 9 + t;
        const int left = (49 - t) % 49;
        const double v = std::max(std::pow(r, t), kTailFloor);
        CHECK(p.v0[right] == doctest::Approx(v).epsilon(1e-12));
        CHECK(p.v0[left] == doctest::Approx(v).epsilon(1e-12));
        CHECK(p.u0[right] == doctest::Approx(p.eta[t] * v).epsilon(1e-12));
    }
    for (double v : p.v0) CHECK(v > 0.0);
    CHECK_THROWS_AS(leading_order_mesa(49, 49, 5.0, 1e-3), InvalidInput);
    CHECK_THROWS_AS(leading_order_mesa(49, 1, 3.5, 1e-3), Nonexistence);
}

TEST_CASE("refined one-spike and 10-mesa are stable") {
    for (int m : {1, 10}) {
        const auto sol = mesa_profile(49, m, 5.0, 1e-3);
        CHECK(sol.residual < 1e-11);
        const auto params = sol.profile.params();
        CHECK(params.D_u == doctest::Approx(1e-3));
        CHECK(params.D_v == doctest::Approx(5e-3));
        const auto report = pencil_spectrum(params, sol.state);
        CHECK(report.classification == Stability::stable);

        // Leading-order sign pattern agrees with the dense verdict.
        const auto lead = mesa_leading_spectrum(sol.profile);
        CHECK(*std::max_element(lead.begin(), lead.end()) < 0.0);
        for (int k = 0; k < m; ++k) CHECK(lead[k] == kMesaPlateauEigenvalue);

        // The plateau eigenvalues cluster near -1.
        int near_minus_one = 0;
        for (const auto& z : report.eigenvalues)
            if (std::abs(z.real() + 1.0) < 0.05) ++near_minus_one;
        CHECK(near_minus_one >= m);

        const double ratio = sol.state.v[m + 1] / sol.state.v[m];
        CHECK(std::abs(ratio / 5e-3 - 1) < 0.1);
    }
}

TEST_CASE("plus-branch tails are unstable") {
    for (int pos : {0, 1, 3}) {
        std::vector<RootBranch> branch(20, RootBranch::minus);
        branch[pos] = RootBranch::plus;
        const auto p = leading_order_mesa(49, 10, 5.0, 1e-3, branch);
        const auto lead = mesa_leading_spectrum(p);
        const double e = 2 * p.eta[pos + 1] - 1;
        CHECK(e > 0.0);
        CHECK(*std::max_element(lead.begin(), lead.end()) == doctest::Approx(e));
    }
    // Dense check on a refined plus-branch state.
    std::vector<RootBranch> branch(20, RootBranch::minus);
    branch[0] = RootBranch::plus;
    const auto sol = mesa_profile(49, 10, 5.0, 1e-3, branch);
    CHECK(pencil_spectrum(sol.profile.params(), sol.state).classification == Stability::unstable);
}

TEST_CASE("fold kappa") {
    const double f4 = fold_kappa(1e-4, 49, 1);
    CHECK(f4 >= 3.8);
    CHECK(f4 <= 4.2);
    const double f3 = fold_kappa(1e-3, 49, 1);
    const double f5 = fold_kappa(1e-5, 49, 1);
    CHECK(std::abs(f3 - 4) >= std::abs(f4 - 4));
    CHECK(std::abs(f4 - 4) >= std::abs(f5 - 4));
    CHECK(mesa_exists(49, 1, 5.0, 1e-3));
    CHECK_FALSE(mesa_exists(49, 1, 3.0, 1e-3));
    FoldKappaOptions bad;
    bad.kappa_lo = 5.0;
    bad.kappa_hi = 8.0;
    CHECK_THROWS_AS(fold_kappa(1e-4, 49, 1, bad), NumericalFailure);
}

TEST_CASE("two mesas compose") {
    const double kappa = 5.0, eps2 = 1e-3;
    const auto seed = multi_mesa_seed(60, {{0, 4}, {30, 37}}, kappa, eps2);
    LatticeParams params{60, eps2, kappa * eps2, 0.0};
    const auto res = refine_on_lattice(seed, params);
    CHECK(res.residual < 1e-11);
    int high = 0;
    for (double u : res.state.u)
        if (u > 0.5) ++high;
    CHECK(high == 13);
    CHECK(pencil_spectrum(params, res.state).classification == Stability::stable);
}

}  // TEST_SUITE
