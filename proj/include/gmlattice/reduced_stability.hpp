#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gmlattice/spikes.hpp"
#include "gmlattice/stability_report.hpp"

namespace gml {

/// M_kj = 2 V_j G(x_k, x_j). The reduced spike eigenproblem is
/// lambda phi = (I - M) phi.
Eigen::MatrixXd interaction_matrix(const SpikeConfiguration& config);

/// Eigenvalues of I - M with stability classification.
StabilityReport reduced_spectrum(const SpikeConfiguration& config,
                                 double marginal_tol = kDefaultMarginalTol);

/// Floquet eigenvalues of K evenly spaced equal spikes:
///     lambda_m = 1 - 2 (cosh 2l - 1) / (cosh 2l - cos(2 pi m / K)),  2l = 1/(K d).
std::vector<double> floquet_eigenvalues(int K, double d);

/// Stability threshold of K evenly spaced equal spikes (stable for d < d_c):
///     d_c = 1 / (K arccosh(2 - cos(2 pi floor(K/2) / K))).
double symmetric_threshold(int K);

/// Threshold of the equal-height two-spike pair at separation l, i.e. the
/// root of cosh(1/(2d)) = 3 cosh((l - 1/2)/d). Stable for d below it.
double two_spike_threshold(double l);

/// Displacement of spike k to x_k + sigma s_k.
struct PerturbationSpec {
    std::vector<double> s;
    double sigma = 0.0;

    /// Rejects uniform s (a pure rotation) and displacements that reorder
    /// the K evenly spaced spikes.
    void validate(int K) const;
};

struct OptimalityProbe {
    double max_real_symmetric = 0.0;
    double max_real_perturbed = 0.0;
    SpikeConfiguration symmetric;
    SpikeConfiguration perturbed;
};

/// Re-solves the spike heights at perturbed positions (seeded from the
/// symmetric solution) and compares the leading reduced eigenvalue with the
/// symmetric one. Near d = symmetric_threshold(K), the symmetric layout is
/// expected to be the most stable: max_real_perturbed > max_real_symmetric.
OptimalityProbe local_optimality_probe(int K, double d, const PerturbationSpec& spec);

/// Random non-uniform displacement directions with entries in [-1, 1] and
/// zero mean, generated from `seed`.
PerturbationSpec random_perturbation(int K, double sigma, std::uint64_t seed);

}  // namespace gml
