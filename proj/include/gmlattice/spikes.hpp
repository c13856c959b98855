#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gmlattice/lattice.hpp"

namespace gml {

/// K spikes of the reduced (large-n, D_u = 0, tau = 0) model.
///
/// Heights are the rescaled V_k with v = n V, satisfying
///     V_k = sum_j V_j^2 G(x_k, x_j)
/// where G is the periodic Green's function with diffusion length d.
struct SpikeConfiguration {
    std::vector<double> positions;  ///< strictly increasing, in [0, 1)
    std::vector<double> heights;    ///< V_k > 0
    double d = 0.0;

    int K() const noexcept { return static_cast<int>(positions.size()); }

    /// max_k |V_k - sum_j V_j^2 G_kj|.
    double residual_norm() const;

    /// Positions/heights/d sanity (sizes, ordering, d > 0); does not check the residual.
    void validate() const;
};

/// Green's matrix G_kj = G(x_k, x_j) for the given positions.
Eigen::MatrixXd green_matrix(const std::vector<double>& positions, double d);

/// Self and cross interaction of two spikes at separation l.
struct TwoSpikeCoefficients {
    double a = 0.0;  ///< G(0)
    double b = 0.0;  ///< G(l)
    double l = 0.0;

    static TwoSpikeCoefficients at(double l, double d);
};

struct GuessFailure {
    int guess_index;
    std::string reason;
};

struct HeightSolveOutcome {
    std::vector<SpikeConfiguration> solutions;  ///< sorted lexicographically by heights
    std::vector<GuessFailure> failures;
};

struct HeightSolveOptions {
    double tolerance = 1e-10;
    double dedup_tolerance = 1e-8;
    double degenerate_height = 1e-12;
    int max_iterations = 100;
};

/// Default multistart: the symmetric guess V_k = 1/sum_j G_kj plus, for
/// K <= 6, every +-30% sign-pattern perturbation of it and one large/small
/// split guess per proper nonempty subset of large spikes.
std::vector<std::vector<double>> default_height_guesses(const std::vector<double>& positions, double d);

/// Newton multistart on the reduced height system. Returns every distinct
/// converged solution with all heights positive. Guesses are independent
/// and may be processed concurrently (`threads` > 1); the output order does
/// not depend on it.
HeightSolveOutcome solve_heights(const std::vector<double>& positions, double d,
                                 const std::vector<std::vector<double>>& guesses,
                                 const HeightSolveOptions& options = {}, int threads = 1);

/// Two spikes at 0 and l (0 < l <= 1/2): the equal-height solution, plus the
/// unequal pair when a^2 - 2ab - 3b^2 >= 0.
std::vector<SpikeConfiguration> two_spike_closed_form(double l, double d);

/// Three evenly spaced spikes: the equal-height solution, plus the
/// two-height solutions (both roots, all three rotations) when
/// a^2 - 2ab - 7b^2 >= 0 with a = G(0), b = G(1/3).
std::vector<SpikeConfiguration> three_spike_even_closed_form(double d);

/// Discriminants deciding existence of the unequal branches.
double two_spike_discriminant(double l, double d);
double three_spike_discriminant(double d);

/// Leading-order full-lattice profile on n nodes. The activator is n V_k at
/// node n x_k (lattice units, where u = v at a spike) and zero elsewhere;
/// v(j) = sum_k n V_k^2 G(j/n, x_k). Throws InvalidInput naming the spike
/// when n x_k is not an integer.
LatticeState assemble_profile(const SpikeConfiguration& config, int n);

/// Lattice parameters of the reduced regime: D_u = 0, D_v = d^2 n^2, tau = 0.
LatticeParams spike_regime_params(int n, double d);

/// Evenly spaced positions k/K.
std::vector<double> even_positions(int K);

}  // namespace gml
