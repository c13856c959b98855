#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gmlattice/discrete_exact.hpp"
#include "gmlattice/errors.hpp"
#include "gmlattice/reduced_stability.hpp"
#include "oracles.hpp"

using namespace gml;

TEST_SUITE("discrete_exact") {

TEST_CASE("alpha roots") {
    for (double Dv : {1e-3, 0.1, 1.0, 7.0, 1e4}) {
        const auto r = roots_alpha(Dv);
        CHECK(r.alpha1 > 0.0);
        CHECK(r.alpha1 < 1.0);
        CHECK(r.alpha2 > 1.0);
        CHECK(r.alpha1 * r.alpha2 == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.alpha1 + r.alpha2 == doctest::Approx(2.0 + 1.0 / Dv).epsilon(1e-12));
    }
    const auto r1 = roots_alpha(1.0);
    CHECK(r1.alpha1 == doctest::Approx(1.5 - std::sqrt(5.0) / 2).epsilon(1e-14));
    CHECK(r1.alpha2 == doctest::Approx(1.5 + std::sqrt(5.0) / 2).epsilon(1e-14));
    CHECK_THROWS_AS(roots_alpha(0.0), InvalidInput);
}

TEST_CASE("exact solution structure and residual") {
    for (auto [n, K, Dv] : {std::tuple{60, 30, 1.0}, {60, 3, 36.0}, {60, 6, 4.0}, {60, 1, 10.0}, {48, 4, 0.05}}) {
        const auto sol = exact_symmetric_solution(n, K, Dv);
        CHECK(sol.m * K == n);
        CHECK(sol.C[0] > 0.0);
        CHECK(sol.C[0] >= 1.0);
        for (int j = 1; j < sol.m; ++j) CHECK(sol.C[j] == doctest::Approx(sol.C[sol.m - j]).epsilon(1e-12));
        // Three-term recurrence between spikes with C_m = C_0.
        for (int j = 1; j < sol.m; ++j) {
            const double next = j + 1 == sol.m ? sol.C[0] : sol.C[j + 1];
            CHECK(Dv * (sol.C[j - 1] - 2 * sol.C[j] + next) == doctest::Approx(sol.C[j]).epsilon(1e-9));
        }
        CHECK(max_abs_residual(sol.params(), sol.state()) < 1e-10);
    }
    CHECK_THROWS_AS(exact_symmetric_solution(60, 7, 1.0), InvalidInput);
    CHECK_THROWS_AS(exact_symmetric_solution(60, 6, -1.0), InvalidInput);
}

TEST_CASE("large-m asymptotic of the spike value") {
    const auto sol = exact_symmetric_solution(60, 2, 100.0);
    REQUIRE(sol.m == 30);
    const double ratio = sol.C[0] / (2 * std::sqrt(100.0));
    CHECK(std::abs(ratio / std::tanh(30 / (2 * std::sqrt(100.0))) - 1) < 0.01);
}

TEST_CASE("spectrum against the dense pencil") {
    for (auto [n, K, Dv] : {std::tuple{60, 6, 4.0}, {60, 30, 1.0}, {60, 3, 30.0}}) {
        const auto sol = exact_symmetric_solution(n, K, Dv);
        const auto modes = exact_mode_eigenvalues(sol);
        for (int j = 1; j < K; ++j) CHECK(modes[j] == doctest::Approx(modes[K - j]).epsilon(1e-12));
        const auto dense = pencil_eigenvalues(sol.params(), sol.state());
        REQUIRE(static_cast<int>(dense.size()) == n);
        std::vector<double> re;
        for (const auto& z : dense) {
            CHECK(std::abs(z.imag()) < 1e-8);
            re.push_back(z.real());
        }
        std::sort(re.begin(), re.end());
        // Each predicted eigenvalue is present; the rest equal -1.
        std::vector<double> predicted = modes;
        std::sort(predicted.begin(), predicted.end());
        std::vector<bool> used(re.size(), false);
        for (double lam : predicted) {
            std::size_t best = 0;
            double err = 1e300;
            for (std::size_t i = 0; i < re.size(); ++i) {
                if (!used[i] && std::abs(re[i] - lam) < err) {
                    err = std::abs(re[i] - lam);
                    best = i;
                }
            }
            used[best] = true;
            CHECK(err < 1e-8);
        }
        for (std::size_t i = 0; i < re.size(); ++i) {
            if (!used[i]) CHECK(std::abs(re[i] + 1.0) < 1e-8);
        }
    }
}

TEST_CASE("single spike is stable") {
    for (double Dv : {0.1, 1.0, 10.0, 100.0}) {
        const auto sol = exact_symmetric_solution(60, 1, Dv);
        CHECK(exact_mode_eigenvalues(sol).size() == 1);
        CHECK(exact_spectrum(sol).classification == Stability::stable);
    }
}

TEST_CASE("critical Dv") {
    const double limit = 1.0 / std::acosh(3.0);
    CHECK(limit == doctest::Approx(0.5673).epsilon(1e-4));
    for (int K : {2, 3, 4, 6, 10, 15}) {
        const int m = 60 / K;
        const double Dvc = critical_Dv(60, K);
        CHECK(std::abs(exact_max_eigenvalue(60, K, Dvc)) < 1e-8);
        // The cos = -1 mode exists for even K; K = 15 is close enough to it.
        if (m >= 4 && (K % 2 == 0 || K == 15)) CHECK(std::abs(std::sqrt(Dvc) / m - limit) < 0.05);
        // Stable below, unstable above, on a grid straddling the threshold.
        for (int i = -5; i <= 5; ++i) {
            if (i == 0) continue;
            const double Dv = Dvc * std::pow(1.05, i);
            const auto cls = exact_spectrum(exact_symmetric_solution(60, K, Dv)).classification;
            CHECK(cls == (i < 0 ? Stability::stable : Stability::unstable));
        }
    }
    // Zigzag (m = 2) as well.
    const double z = critical_Dv(60, 30);
    CHECK(exact_spectrum(exact_symmetric_solution(60, 30, 0.9 * z)).classification == Stability::stable);
    CHECK(exact_spectrum(exact_symmetric_solution(60, 30, 1.1 * z)).classification == Stability::unstable);
    CHECK(std::abs(std::sqrt(critical_Dv(240, 2)) / 240 / symmetric_threshold(2) - 1) < 0.02);
    // Odd K follows its own continuum threshold instead of the even-K limit.
    CHECK(std::abs(std::sqrt(critical_Dv(60, 3)) / 60 / symmetric_threshold(3) - 1) < 0.02);
    CHECK(std::abs(std::sqrt(critical_Dv(60, 30)) / 2 - limit) < 0.05);
    CHECK(std::abs(std::sqrt(critical_Dv(60, 2)) / 30 - limit) < 0.005);
    CHECK_THROWS_AS(critical_Dv(60, 1), InvalidInput);
    CHECK_THROWS_AS(critical_Dv(60, 7), InvalidInput);
}

TEST_CASE("critical Dv solves the printed threshold equation for even K") {
    for (int K : {2, 4, 6, 10, 30}) {
        const double Dvc = critical_Dv(60, K);
        const auto sol = exact_symmetric_solution(60, K, Dvc);
        const double a = sol.a_coef, b = sol.b_coef;
        CHECK(2 * (1 + 2 * Dvc - 2 * Dvc * (a + b)) == doctest::Approx(1 + 2 * Dvc + 2 * Dvc * (a - b)).epsilon(1e-7));
    }
}

}  // TEST_SUITE
