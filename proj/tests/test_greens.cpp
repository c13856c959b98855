#include <doctest.h>

#include <cmath>

#include "gmlattice/errors.hpp"
#include "gmlattice/greens.hpp"
#include "oracles.hpp"

using namespace gml;

TEST_SUITE("greens") {

TEST_CASE("periodic closed form examples") {
    for (double d : {0.05, 0.2, 0.7}) {
        CHECK(greens::periodic_at_separation(0.5, d) == doctest::Approx(1.0 / (2 * d * std::sinh(1 / (2 * d)))).epsilon(1e-14));
        CHECK(greens::periodic(0.9, 0.1, d) == doctest::Approx(greens::periodic(0.2, 0.0, d)).epsilon(1e-14));
        CHECK(greens::periodic(1.3, 0.1, d) == doctest::Approx(greens::periodic(0.3, 0.1, d)).epsilon(1e-14));
        const double l = 0.17;
        CHECK(greens::periodic_at_separation(l, d) ==
              doctest::Approx(std::cosh((l - 0.5) / d) / (2 * d * std::sinh(1 / (2 * d)))).epsilon(1e-12));
    }
    CHECK_THROWS_AS(greens::periodic(0.1, 0.2, 0.0), InvalidInput);
    CHECK_THROWS_AS(greens::neumann(0.1, 0.2, -1.0), InvalidInput);
}

TEST_CASE("small d does not overflow") {
    const double g0 = greens::periodic_at_separation(0.0, 1e-3);
    CHECK(std::isfinite(g0));
    CHECK(g0 == doctest::Approx(1.0 / (2 * 1e-3)).epsilon(1e-12));
    CHECK(greens::periodic_at_separation(0.5, 1e-3) >= 0.0);
    CHECK(std::isfinite(greens::neumann(0.5, 0.5, 1e-3)));
}

TEST_CASE("periodic matches the finite-difference BVP oracle") {
    const int N = 10000;
    for (double d : {0.1, 0.3}) {
        const Eigen::VectorXd G = oracle::periodic_green_fd(N, 0, d);
        for (int i : {0, 50, 1234, 2500, 5000}) {
            const double exact = greens::periodic(i / double(N), 0.0, d);
            CHECK(std::abs(G[i] - exact) < 1e-4 * exact);
        }
    }
}

TEST_CASE("neumann matches the finite-difference BVP oracle, symmetric, jump -1/d^2") {
    const int N = 10000;
    const double d = 0.15;
    const int src = 3000;
    const double x0 = (src + 0.5) / N;
    const Eigen::VectorXd G = oracle::neumann_green_fd(N, src, d);
    for (int i : {0, 1000, 2999, 3000, 3001, 7000, 9999}) {
        const double exact = greens::neumann((i + 0.5) / N, x0, d);
        CHECK(std::abs(G[i] - exact) < 1e-4 * exact);
    }
    CHECK(greens::neumann(0.3, 0.7, d) == greens::neumann(0.7, 0.3, d));
    // Second-order one-sided differences on each side of the source.
    const double h = 1e-4;
    auto g = [&](double x) { return greens::neumann(x, x0, d); };
    const double right = (-3 * g(x0) + 4 * g(x0 + h) - g(x0 + 2 * h)) / (2 * h);
    const double left = (3 * g(x0) - 4 * g(x0 - h) + g(x0 - 2 * h)) / (2 * h);
    CHECK(std::abs((right - left) + 1.0 / (d * d)) < 1e-6 / (d * d));
    // Reflecting ends.
    const double dl = (-3 * g(0.0) + 4 * g(h) - g(2 * h)) / (2 * h);
    const double dr = (3 * g(1.0) - 4 * g(1.0 - h) + g(1.0 - 2 * h)) / (2 * h);
    CHECK(std::abs(dl) < 1e-6 / (d * d));
    CHECK(std::abs(dr) < 1e-6 / (d * d));
}

TEST_CASE("periodic derivatives") {
    for (double d : {0.08, 0.25, 0.6}) {
        for (double l : {0.05, 0.2, 0.37, 0.5}) {
            const auto D = greens::periodic_derivatives(l, d);
            CHECK(D.G == doctest::Approx(greens::periodic_at_separation(l, d)).epsilon(1e-14));
            CHECK(D.G_xx * d * d == doctest::Approx(D.G).epsilon(1e-14));
            const double h = 1e-5;
            if (l < 0.5) {
                const double fd = (greens::periodic_at_separation(l + h, d) - greens::periodic_at_separation(l - h, d)) / (2 * h);
                CHECK(std::abs(fd - D.G_x) < 1e-7 * std::max(1.0, std::abs(D.G_x)));
            }
        }
        CHECK(greens::periodic_derivatives(0.5, d).G_x == 0.0);
    }
    CHECK_THROWS_AS(greens::periodic_derivatives(0.0, 0.2), InvalidInput);
    CHECK_THROWS_AS(greens::periodic_derivatives(0.6, 0.2), InvalidInput);
}

TEST_CASE("periodic is positive, decreasing, peaked at the source") {
    for (double d : {0.03, 0.2, 1.0, 5.0}) {
        double prev = greens::periodic_at_separation(0.0, d);
        for (int i = 1; i <= 50; ++i) {
            const double g = greens::periodic_at_separation(0.01 * i, d);
            CHECK(g > 0.0);
            CHECK(g < prev);
            prev = g;
        }
    }
    CHECK(greens::periodic(0.5, 0.0, 0.05) / greens::periodic(0.0, 0.0, 0.05) < 1e-4);
}

}  // TEST_SUITE
