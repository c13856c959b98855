#pragma once

#include <vector>

#include "gmlattice/lattice.hpp"
#include "gmlattice/stability_report.hpp"

namespace gml {

/// Roots of alpha^2 - (2 + 1/D_v) alpha + 1 = 0, the characteristic
/// equation of D_v (C_{j-1} - 2 C_j + C_{j+1}) = C_j.
struct AlphaRoots {
    double alpha1;  ///< in (0, 1)
    double alpha2;  ///< 1 / alpha1
};

AlphaRoots roots_alpha(double D_v);

/// Exact symmetric K-spike steady state of the D_u = 0, tau = 0 lattice.
///
/// Spikes sit at nodes 0, m, 2m, ... with u = v = C_0; between spikes
/// u = 0 and v(mk + j) = C_j, j = 1..m-1.
struct ExactSymmetricSolution {
    int n = 0;
    int K = 0;
    int m = 0;
    double D_v = 0.0;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    std::vector<double> C;  ///< C_0..C_{m-1}
    /// Spike-to-spike coupling of the linearization: the inhibitor
    /// perturbation next to spike k is b psi_k + a psi_{k+1}.
    double a_coef = 0.0;
    double b_coef = 0.0;

    LatticeParams params() const;
    LatticeState state() const;
};

/// Throws InvalidInput unless K divides n and D_v > 0; Nonexistence if C_0 <= 0.
ExactSymmetricSolution exact_symmetric_solution(int n, int K, double D_v);

/// Mode eigenvalues lambda_j = 1 - 2 C_0 / (1 - D_v (2b - 2 + 2a cos(2 pi j / K))),
/// j = 0..K-1. The remaining n - K pencil eigenvalues are exactly -1.
std::vector<double> exact_mode_eigenvalues(const ExactSymmetricSolution& sol);

/// Report over the K mode eigenvalues.
StabilityReport exact_spectrum(const ExactSymmetricSolution& sol,
                               double marginal_tol = kDefaultMarginalTol);

/// Largest mode eigenvalue as a function of D_v at fixed (n, K).
double exact_max_eigenvalue(int n, int K, double D_v);

/// Inhibitor diffusion at which the symmetric K-spike lattice state loses
/// stability (stable below). Bisection in log D_v on [1e-6, 1e6] to
/// relative tolerance 1e-10.
double critical_Dv(int n, int K);

}  // namespace gml
