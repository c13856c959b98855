#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gmlattice/continuation.hpp"
#include "gmlattice/errors.hpp"
#include "gmlattice/mesa.hpp"
#include "gmlattice/refine.hpp"
#include "gmlattice/spikes.hpp"

using namespace gml;

namespace {

double spread(const SpikeConfiguration& c) {
    auto [lo, hi] = std::minmax_element(c.heights.begin(), c.heights.end());
    return *hi - *lo;
}

// Lattice state of a closed-form solution, converged at d.
LatticeState seed_state(const SpikeConfiguration& c, int n) {
    return refine_on_lattice(assemble_profile(c, n), spike_regime_params(n, c.d)).state;
}

Branch two_spike_unequal(int n) {
    for (const auto& c : two_spike_closed_form(0.5, 0.2)) {
        if (spread(c) > 1e-3) {
            const auto params = spike_regime_params(n, 0.2);
            return continue_branch(params, seed_state(c, n), ContinuationParameter::d, 0.2, 0.35);
        }
    }
    throw std::runtime_error("no unequal pair");
}

}  // namespace

TEST_SUITE("continuation") {

TEST_CASE("parameter plumbing") {
    const LatticeParams base{60, 0.01, 1.0, 0.0};
    CHECK(with_parameter(base, ContinuationParameter::d, 0.2).D_v == doctest::Approx(0.04 * 3600));
    CHECK(with_parameter(base, ContinuationParameter::kappa, 5.0).D_v == doctest::Approx(0.05));
    CHECK(with_parameter(base, ContinuationParameter::Dv, 3.0).D_v == 3.0);
    for (auto p : {ContinuationParameter::d, ContinuationParameter::kappa, ContinuationParameter::Dv}) {
        CHECK(continuation_parameter_from_string(to_string(p)) == p);
        CHECK(parameter_value(with_parameter(base, p, 0.7), p) == doctest::Approx(0.7));
        const double h = 1e-6;
        const double fd = (with_parameter(base, p, 0.7 + h).D_v - with_parameter(base, p, 0.7 - h).D_v) / (2 * h);
        CHECK(dDv_dparameter(base, p, 0.7) == doctest::Approx(fd).epsilon(1e-6));
    }
    CHECK_THROWS_AS(continuation_parameter_from_string("tau"), InvalidInput);
}

TEST_CASE("two-spike unequal branch folds near 0.2836") {
    const Branch br = two_spike_unequal(60);
    REQUIRE_FALSE(br.folds.empty());
    CHECK(std::abs(br.folds.front() - 0.2836) < 0.01);
    for (const auto& p : br.points) {
        CHECK(p.residual < 1e-9);
        CHECK(max_abs_residual(with_parameter(spike_regime_params(60, 0.2), ContinuationParameter::d, p.parameter),
                               p.state) < 1e-9);
    }
    for (std::size_t i = 0; i < br.points.size(); ++i) {
        if (i > 0) {
            const double step = std::abs(br.points[i].parameter - br.points[i - 1].parameter);
            CHECK(step <= 0.05 * 0.15 + 1e-12);
        }
        if (!br.points[i].fold) CHECK_FALSE(br.points[i].stable);
    }
    CHECK(std::count_if(br.points.begin(), br.points.end(), [](const auto& p) { return p.fold; }) ==
          static_cast<long>(br.folds.size()));
}

TEST_CASE("three-spike two-height branch folds near 0.2171") {
    const int n = 60;
    const auto sols = three_spike_even_closed_form(0.2);
    REQUIRE(sols.size() >= 3);
    const auto it = std::find_if(sols.begin(), sols.end(), [](const auto& c) { return spread(c) > 1e-3; });
    REQUIRE(it != sols.end());
    const auto params = spike_regime_params(n, 0.2);
    const Branch br = continue_branch(params, seed_state(*it, n), ContinuationParameter::d, 0.2, 0.3);
    REQUIRE_FALSE(br.folds.empty());
    CHECK(std::abs(br.folds.front() - 0.2171) < 0.01);

    // Symmetric branch over the same range; its closest approach to the
    // two-height branch is reported, not adjudicated.
    const auto sym = std::find_if(sols.begin(), sols.end(), [](const auto& c) { return spread(c) < 1e-9; });
    REQUIRE(sym != sols.end());
    const Branch sb = continue_branch(params, seed_state(*sym, n), ContinuationParameter::d, 0.2, 0.3);
    CHECK(sb.folds.empty());
    const auto contact = branch_contact(br, sb);
    CHECK(contact.distance >= 0.0);
    CHECK(contact.parameter > 0.2);
    CHECK(contact.parameter < 0.23);
    CHECK(contact.touching == (contact.distance <= 1e-3));
}

TEST_CASE("single spike has no fold") {
    const int n = 60;
    SpikeConfiguration one;
    one.positions = {0.0};
    one.d = 0.05;
    one.heights = {0.0};
    const auto sols = solve_heights(one.positions, 0.05, default_height_guesses(one.positions, 0.05));
    REQUIRE(sols.solutions.size() == 1);
    const Branch br = continue_branch(spike_regime_params(n, 0.05), seed_state(sols.solutions[0], n),
                                      ContinuationParameter::d, 0.05, 1.0);
    CHECK(br.folds.empty());
    CHECK_FALSE(br.truncated);
    CHECK(br.points.back().parameter > 0.95);
    for (const auto& p : br.points) CHECK(p.stable);
}

TEST_CASE("restart from an interior point reproduces the branch") {
    const Branch br = two_spike_unequal(60);
    REQUIRE(br.points.size() > 10);
    const std::size_t mid = br.points.size() / 4;
    const auto& p = br.points[mid];
    REQUIRE(p.parameter < br.folds.front());
    const auto params = with_parameter(spike_regime_params(60, 0.2), ContinuationParameter::d, p.parameter);
    const Branch again = continue_branch(params, p.state, ContinuationParameter::d, p.parameter, 0.35);
    REQUIRE_FALSE(again.folds.empty());
    CHECK(std::abs(again.folds.front() - br.folds.front()) < 1e-3);
    // Pointwise: every restarted point lies on the original polyline.
    for (const auto& q : again.points) {
        double best = 1e300;
        for (std::size_t i = 1; i < br.points.size(); ++i) {
            const auto& a = br.points[i - 1];
            const auto& b = br.points[i];
            const double dx = b.parameter - a.parameter, dy = b.max_u - a.max_u;
            const double len2 = dx * dx + dy * dy;
            double t = len2 > 0 ? ((q.parameter - a.parameter) * dx + (q.max_u - a.max_u) * dy) / len2 : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            best = std::min(best, std::hypot(a.parameter + t * dx - q.parameter, a.max_u + t * dy - q.max_u));
        }
        CHECK(best < 1e-3 * std::max(1.0, q.max_u));
    }
}

TEST_CASE("unconverged start is rejected") {
    const auto params = spike_regime_params(60, 0.2);
    const auto c = two_spike_closed_form(0.5, 0.2).front();
    CHECK_THROWS_AS(continue_branch(params, assemble_profile(c, 60), ContinuationParameter::d, 0.2, 0.3),
                    InvalidInput);
}

TEST_CASE("branch contact geometry") {
    Branch a, b;
    for (double p : {0.0, 1.0}) {
        BranchPoint q;
        q.parameter = p;
        q.max_u = 1.0 + p;
        a.points.push_back(q);
        q.max_u = 1.0 + p + 0.5;
        b.points.push_back(q);
    }
    // max_u scaled by 2.5: vertical offset 0.2, slanted segments.
    const auto c = branch_contact(a, b);
    CHECK(c.distance == doctest::Approx(0.2 / std::sqrt(1 + 0.16)).epsilon(1e-9));
    CHECK_FALSE(c.touching);
    b.points[0].max_u = 1.0;
    const auto touch = branch_contact(a, b);
    CHECK(touch.distance == doctest::Approx(0.0).scale(1));
    CHECK(touch.touching);
    CHECK(touch.parameter == doctest::Approx(0.0).scale(1));
}

TEST_CASE("central dimple detection") {
    LatticeState s(std::vector<double>(10, 0.01), std::vector<double>(10, 1.0));
    s.u[3] = 1.0;
    s.u[4] = 0.8;
    s.u[5] = 1.0;
    CHECK(has_central_dimple(s));
    s.u[4] = 1.2;
    CHECK_FALSE(has_central_dimple(s));
    s.u[4] = 0.01;
    CHECK_FALSE(has_central_dimple(s));
}

TEST_CASE("fold scan in kappa") {
    FoldScanOptions opt;
    const auto scan = fold_scan_kappa({1e-3, 0.05, 0.3}, 60, opt);
    REQUIRE(scan.points.size() == 3);
    for (const auto& p : scan.points) REQUIRE_MESSAGE(p.kappa_fold.has_value(), p.diagnostic);
    CHECK(std::abs(*scan.points[0].kappa_fold - 4.0) < 0.1);
    CHECK(scan.monotone);
    CHECK(*scan.points[0].kappa_fold < *scan.points[1].kappa_fold);
    CHECK(*scan.points[1].kappa_fold < *scan.points[2].kappa_fold);
    // Small D_u: the branch past the fold never shows a dimple; large D_u: it does.
    CHECK_FALSE(scan.points[0].reaches_dimple);
    CHECK(scan.points[2].reaches_dimple);

    // Grid order of the result follows the input, independent of threads.
    opt.threads = 3;
    const auto threaded = fold_scan_kappa({0.05, 1e-3}, 60, opt);
    CHECK(*threaded.points[0].kappa_fold == *scan.points[1].kappa_fold);
    CHECK(*threaded.points[1].kappa_fold == *scan.points[0].kappa_fold);
    CHECK_THROWS_AS(fold_scan_kappa({}, 60, opt), InvalidInput);
    CHECK_THROWS_AS(fold_scan_kappa({-1.0}, 60, opt), InvalidInput);
}

}  // TEST_SUITE
