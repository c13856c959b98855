#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gmlattice/continuation.hpp"
#include "gmlattice/discrete_exact.hpp"
#include "gmlattice/dynamics.hpp"
#include "gmlattice/errors.hpp"
#include "gmlattice/mesa.hpp"
#include "gmlattice/reduced_stability.hpp"
#include "gmlattice/refine.hpp"
#include "gmlattice/spikes.hpp"

using namespace gml;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

// Formats with printf semantics into a std::string.
template <typename... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double round_sig4(double x) {
    const double scale = std::pow(10.0, 3 - std::floor(std::log10(std::abs(x))));
    return std::round(x * scale) / scale;
}

double spread(const SpikeConfiguration& c) {
    auto [lo, hi] = std::minmax_element(c.heights.begin(), c.heights.end());
    return *hi - *lo;
}

LatticeState refined(const SpikeConfiguration& c, int n) {
    return refine_on_lattice(assemble_profile(c, n), spike_regime_params(n, c.d)).state;
}

SpikeConfiguration equal_config(int K, double d) {
    const auto pos = even_positions(K);
    const auto G = green_matrix(pos, d);
    return {pos, std::vector<double>(K, 1.0 / G.row(0).sum()), d};
}

std::vector<double> real_parts_desc(const StabilityReport& r) {
    std::vector<double> out;
    for (const auto& z : r.eigenvalues) out.push_back(z.real());
    std::sort(out.rbegin(), out.rend());
    return out;
}

Outcome c1() {
    const double d2 = symmetric_threshold(2), d3 = symmetric_threshold(3);
    const bool ok = round_sig4(d2) == 0.2836 && round_sig4(d3) == 0.2127;
    return {ok, fmt("d_c(2)=%.6f d_c(3)=%.6f", d2, d3)};
}

Outcome c2() {
    const int n = 60;
    const double dc = symmetric_threshold(2);
    std::string detail;
    bool ok = true;
    for (double f : {0.9, 1.1}) {
        const double d = f * dc;
        const auto cls = classify_by_simulation(spike_regime_params(n, d), refined(equal_config(2, d), n), SimConfig{});
        const auto want = f < 1.0 ? SimVerdict::stable : SimVerdict::unstable;
        ok = ok && cls.verdict == want;
        detail += fmt("%.1f*d_c:%s ", f, std::string(to_string(cls.verdict)).c_str());
    }
    return {ok, detail};
}

Outcome c3() {
    int cases = 0;
    bool ok = true;
    double worst = 0.0;
    for (double d : {0.08, 0.12}) {
        for (double l : {0.2, 0.3, 0.4, 0.45, 0.5}) {
            const auto tc = TwoSpikeCoefficients::at(l, d);
            if (tc.a < 3.0 * tc.b) {
                ok = false;
                continue;
            }
            const auto sols = two_spike_closed_form(l, d);
            if (sols.size() != 3) {
                ok = false;
                continue;
            }
            const auto& c = sols[1];
            const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2) - interaction_matrix(c);
            const double want = (3.0 * tc.b - tc.a) / (tc.a - tc.b);
            const double err = std::abs(A.determinant() - want) / std::abs(want);
            worst = std::max(worst, err);
            ok = ok && reduced_spectrum(c).unstable_count() == 1 && err < 1e-10;
            ++cases;
        }
    }
    return {ok && cases == 10, fmt("%d cases, worst det relative error %.2e", cases, worst)};
}

Outcome c4() {
    double lo = 0.15, hi = 0.3;
    if (!(three_spike_discriminant(lo) > 0.0 && three_spike_discriminant(hi) < 0.0))
        return {false, "discriminant does not change sign on [0.15, 0.3]"};
    while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        (three_spike_discriminant(mid) >= 0.0 ? lo : hi) = mid;
    }
    const bool below = three_spike_even_closed_form(0.2181).size() == 7;
    const bool above = three_spike_even_closed_form(0.219).size() == 1;
    return {below && above && lo >= 0.2181 && lo < 0.219,
            fmt("boundary d=%.7f (4 digits: %.4f), branches at 0.2181:%d none at 0.219:%d", lo, round_sig4(lo), below,
                above)};
}

Outcome c5() {
    const double limit = 0.5673;
    bool ok = true;
    std::string detail;
    for (int m : {4, 6, 10, 15, 30}) {
        const double r = std::sqrt(critical_Dv(60, 60 / m)) / m;
        ok = ok && std::abs(r - limit) < 0.05;
        if (m == 30) ok = ok && std::abs(r - limit) < 0.005;
        detail += fmt("m=%d:%.4f ", m, r);
    }
    return {ok, detail};
}

Outcome c6() {
    const auto sol = exact_symmetric_solution(60, 30, 1.0);
    const double res = max_abs_residual(sol.params(), sol.state());
    const auto modes = exact_mode_eigenvalues(sol);
    const auto dense = pencil_eigenvalues(sol.params(), sol.state());
    std::vector<bool> used(dense.size(), false);
    double worst = 0.0;
    for (double lam : modes) {
        std::size_t best = 0;
        double err = 1e300;
        for (std::size_t i = 0; i < dense.size(); ++i) {
            const double e = std::abs(dense[i] - lam);
            if (!used[i] && e < err) {
                err = e;
                best = i;
            }
        }
        used[best] = true;
        worst = std::max(worst, err);
    }
    return {res < 1e-10 && worst < 1e-8, fmt("residual %.2e, worst mode mismatch %.2e", res, worst)};
}

Outcome c7() {
    bool fails = false;
    try {
        eta_recursion(3.99, 20);
    } catch (const Nonexistence&) {
        fails = true;
    }
    bool succeeds = true;
    try {
        eta_recursion(4.01, 20);
    } catch (const Nonexistence&) {
        succeeds = false;
    }
    const double kf = fold_kappa(1e-4, 49, 1);
    return {fails && succeeds && kf >= 3.8 && kf <= 4.2,
            fmt("3.99 fails:%d 4.01 succeeds:%d fold_kappa=%.4f", fails, succeeds, kf)};
}

Outcome c8() {
    bool ok = true;
    std::string detail;
    for (int m : {1, 10}) {
        const auto sol = mesa_profile(49, m, 5.0, 1e-3);
        const auto r = pencil_spectrum(sol.profile.params(), sol.state);
        ok = ok && r.classification == Stability::stable;
        detail += fmt("m=%d:%.3f ", m, r.max_real);
    }
    for (int pos : {0, 1, 3}) {
        std::vector<RootBranch> branch(20, RootBranch::minus);
        branch[pos] = RootBranch::plus;
        const auto sol = mesa_profile(49, 10, 5.0, 1e-3, branch);
        const auto r = pencil_spectrum(sol.profile.params(), sol.state);
        ok = ok && r.classification == Stability::unstable;
        detail += fmt("plus@%d:%.3f ", pos, r.max_real);
    }
    return {ok, detail};
}

Outcome c9() {
    const int n = 120;
    bool ok = true;
    double worst_mode = 0.0, worst_rest = 0.0;
    for (int K : {2, 3}) {
        for (double d : {0.15, 0.25}) {
            const auto c = equal_config(K, d);
            const auto p = spike_regime_params(n, d);
            const auto full = real_parts_desc(pencil_spectrum(p, refined(c, n)));
            const auto red = real_parts_desc(reduced_spectrum(c));
            for (int k = 0; k < K; ++k) worst_mode = std::max(worst_mode, std::abs(full[k] - red[k]));
            for (std::size_t i = K; i < full.size(); ++i) worst_rest = std::max(worst_rest, std::abs(full[i] + 1.0));
        }
    }
    ok = worst_mode < 0.05 && worst_rest < 1e-6;
    return {ok, fmt("worst mode error %.4f, worst |lambda+1| %.2e", worst_mode, worst_rest)};
}

Outcome c10() {
    int passed = 0, total = 0;
    double margin = 1e300;
    for (int K : {2, 3}) {
        const double dc = symmetric_threshold(K);
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto pr = local_optimality_probe(K, dc, random_perturbation(K, 0.005, seed));
            ++total;
            if (pr.max_real_perturbed > pr.max_real_symmetric) ++passed;
            margin = std::min(margin, pr.max_real_perturbed - pr.max_real_symmetric);
        }
    }
    return {passed == total, fmt("%d/%d perturbations less stable, smallest gap %.2e", passed, total, margin)};
}

Outcome c11() {
    const int n = 60;
    const auto params = spike_regime_params(n, 0.2);
    double f2 = NAN, f3 = NAN;
    for (const auto& c : two_spike_closed_form(0.5, 0.2)) {
        if (spread(c) > 1e-3) {
            const auto br = continue_branch(params, refined(c, n), ContinuationParameter::d, 0.2, 0.35);
            if (!br.folds.empty()) f2 = br.folds.front();
            break;
        }
    }
    for (const auto& c : three_spike_even_closed_form(0.2)) {
        if (spread(c) > 1e-3) {
            const auto br = continue_branch(params, refined(c, n), ContinuationParameter::d, 0.2, 0.3);
            if (!br.folds.empty()) f3 = br.folds.front();
            break;
        }
    }
    const bool ok = std::abs(f2 - 0.2836) < 0.01 && std::abs(f3 - 0.2171) < 0.01;
    return {ok, fmt("two-spike fold %.5f, three-spike fold %.5f", f2, f3)};
}

struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "symmetric thresholds", 1e-3, c1},
        {2, "threshold flip in simulation", 30, c2},
        {3, "asymmetric two-spike instability", 1, c3},
        {4, "three-spike existence boundary", 1, c4},
        {5, "discrete exact threshold limit", 1, c5},
        {6, "zigzag exactness and spectrum", 5, c6},
        {7, "mesa existence boundary", 60, c7},
        {8, "mesa stability", 30, c8},
        {9, "reduced vs full spectrum", 60, c9},
        {10, "local optimality", 30, c10},
        {11, "continuation folds", 300, c11},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.limit_seconds;
        const bool pass = out.ok && in_time;
        if (!pass) ++failures;
        std::printf("%s criterion %d (%s): %s [%.3fs, limit %gs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    out.detail.c_str(), secs, c.limit_seconds, in_time ? "" : ", too slow");
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
