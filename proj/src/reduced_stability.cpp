#include "gmlattice/reduced_stability.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "gmlattice/errors.hpp"

namespace gml {

Eigen::MatrixXd interaction_matrix(const SpikeConfiguration& config) {
    config.validate();
    const Eigen::MatrixXd G = green_matrix(config.positions, config.d);
    const Eigen::Map<const Eigen::VectorXd> V(config.heights.data(), config.K());
    return 2.0 * G * V.asDiagonal();
}

StabilityReport reduced_spectrum(const SpikeConfiguration& config, double marginal_tol) {
    const Eigen::MatrixXd M = interaction_matrix(config);
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(M.rows(), M.cols()) - M;
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
    if (es.info() != Eigen::Success) throw NumericalFailure("reduced eigensolve failed");
    const auto& ev = es.eigenvalues();
    return StabilityReport::from_eigenvalues({ev.data(), ev.data() + ev.size()}, marginal_tol);
}

std::vector<double> floquet_eigenvalues(int K, double d) {
    if (K < 1) throw InvalidInput("spike count must be positive");
    if (!(d > 0.0)) throw InvalidInput("diffusion length d must be positive");
    // cosh(2l) - 1 computed without cancellation.
    const double two_l = 1.0 / (K * d);
    const double ch_minus_one = 2.0 * std::pow(std::sinh(0.5 * two_l), 2);
    std::vector<double> out(static_cast<std::size_t>(K));
    for (int m = 0; m < K; ++m) {
        const double one_minus_cos = 2.0 * std::pow(std::sin(std::numbers::pi * m / K), 2);
        out[m] = 1.0 - 2.0 * ch_minus_one / (ch_minus_one + one_minus_cos);
    }
    return out;
}

double symmetric_threshold(int K) {
    if (K < 2) throw InvalidInput("a single spike has no stability threshold");
    const double theta = 2.0 * std::numbers::pi * (K / 2) / K;
    return 1.0 / (K * std::acosh(2.0 - std::cos(theta)));
}

double two_spike_threshold(double l) {
    if (!(l > 0.0 && l <= 0.5)) throw InvalidInput("two-spike separation must lie in (0, 1/2]");
    // f(d) = log cosh(1/(2d)) - log cosh((1/2 - l)/d) - log 3 decreases from +inf to -log 3.
    auto log_cosh = [](double x) { return std::abs(x) + std::log1p(std::exp(-2.0 * std::abs(x))) - std::log(2.0); };
    auto f = [&](double d) { return log_cosh(0.5 / d) - log_cosh((0.5 - l) / d) - std::log(3.0); };
    double lo = 1e-4, hi = 10.0;
    if (!(f(lo) > 0.0 && f(hi) < 0.0)) throw NumericalFailure("two-spike threshold bracket failed");
    while (hi - lo > 1e-15 * hi) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

void PerturbationSpec::validate(int K) const {
    if (static_cast<int>(s.size()) != K) throw InvalidInput("perturbation needs one direction per spike");
    if (!std::isfinite(sigma)) throw InvalidInput("perturbation amplitude must be finite");
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    if (!(*hi - *lo > 1e-12)) throw InvalidInput("uniform displacement is a rotation; s must be non-uniform");
    double max_abs = 0.0;
    for (double x : s) max_abs = std::max(max_abs, std::abs(x));
    // Each spike may move less than half the even spacing, which keeps the order.
    if (!(2.0 * std::abs(sigma) * max_abs < 0.5 / K)) throw InvalidInput("perturbation would reorder the spikes");
}

OptimalityProbe local_optimality_probe(int K, double d, const PerturbationSpec& spec) {
    spec.validate(K);
    if (K < 2) throw InvalidInput("local optimality probe needs at least two spikes");
    OptimalityProbe out;
    const auto base = even_positions(K);
    const auto sym = solve_heights(base, d, {default_height_guesses(base, d).front()});
    if (sym.solutions.empty()) throw NumericalFailure("symmetric height solve failed");
    out.symmetric = sym.solutions.front();

    // Shift so the first perturbed spike stays in [0, 1); spectra are rotation invariant.
    std::vector<double> moved(base.size());
    for (int k = 0; k < K; ++k) moved[k] = base[k] + spec.sigma * spec.s[k];
    const double shift = moved.front();
    for (auto& x : moved) x -= shift;

    const auto pert = solve_heights(moved, d, {out.symmetric.heights});
    if (pert.solutions.empty()) throw NumericalFailure("height re-solve at perturbed positions failed");
    // Closest solution to the seed (there is only one seed, but be explicit).
    out.perturbed = *std::min_element(pert.solutions.begin(), pert.solutions.end(), [&](const auto& a, const auto& b) {
        auto dist = [&](const SpikeConfiguration& c) {
            double m = 0.0;
            for (int k = 0; k < K; ++k) m = std::max(m, std::abs(c.heights[k] - out.symmetric.heights[k]));
            return m;
        };
        return dist(a) < dist(b);
    });
    out.max_real_symmetric = reduced_spectrum(out.symmetric).max_real;
    out.max_real_perturbed = reduced_spectrum(out.perturbed).max_real;
    return out;
}

PerturbationSpec random_perturbation(int K, double sigma, std::uint64_t seed) {
    if (K < 2) throw InvalidInput("random perturbation needs at least two spikes");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    PerturbationSpec p;
    p.sigma = sigma;
    for (;;) {
        p.s.assign(static_cast<std::size_t>(K), 0.0);
        for (auto& x : p.s) x = dist(rng);
        double mean = 0.0;
        for (double x : p.s) mean += x / K;
        for (auto& x : p.s) x -= mean;
        const auto [lo, hi] = std::minmax_element(p.s.begin(), p.s.end());
        if (*hi - *lo > 0.1) return p;
    }
}

}  // namespace gml
