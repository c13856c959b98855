#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gmlattice/stability_report.hpp"

namespace gml {

/// Parameters of the Gierer-Meinhardt system on the n-node cycle graph
///
///     u_t     = D_u L u - u + u^2 / v
///     tau v_t = D_v L v - v + u^2
///
/// where (L w)(k) = w(k+1) + w(k-1) - 2 w(k), indices mod n.
struct LatticeParams {
    int n = 0;
    double D_u = 0.0;
    double D_v = 1.0;
    double tau = 0.0;

    /// Throws InvalidInput unless n >= 3, D_v > 0, D_u >= 0, tau >= 0.
    void validate() const;
};

/// Activator/inhibitor values on the cycle nodes (0-based).
struct LatticeState {
    std::vector<double> u;
    std::vector<double> v;

    LatticeState() = default;
    LatticeState(std::vector<double> u_values, std::vector<double> v_values)
        : u(std::move(u_values)), v(std::move(v_values)) {}

    static LatticeState homogeneous(int n, double u_value, double v_value);

    int size() const noexcept { return static_cast<int>(u.size()); }

    /// Throws InvalidInput on length mismatch or n < 3, DomainError when
    /// some v(k) <= 0.
    void validate() const;

    /// Stacked [u; v] vector of length 2n.
    Eigen::VectorXd stacked() const;
    static LatticeState from_stacked(const Eigen::VectorXd& x);
};

/// Cyclic shift: result(k) = state((k - shift) mod n).
LatticeState rotate(const LatticeState& state, int shift);

std::vector<double> laplacian_apply(std::span<const double> w);

/// Steady-state residual [D_u L u - u + u^2/v ; D_v L v - v + u^2].
std::vector<double> steady_residual(const LatticeParams& params, const LatticeState& state);

double max_abs_residual(const LatticeParams& params, const LatticeState& state);

/// Rounding floor of the residual: a small multiple of machine epsilon times
/// the largest term magnitude entering any residual entry. Residuals below
/// this level cannot be reduced further in double precision.
double residual_noise_floor(const LatticeParams& params, const LatticeState& state);

/// Jacobian of steady_residual with respect to the stacked [u; v].
Eigen::MatrixXd full_jacobian(const LatticeParams& params, const LatticeState& state);

/// Weight matrix of the linearized dynamics: diag(1,...,1, tau,...,tau).
/// With tau = 0 the pencil (J, B) is differential-algebraic.
Eigen::MatrixXd mass_matrix(const LatticeParams& params);

/// Finite eigenvalues of the pencil lambda B x = J x.
///
/// For tau = 0 the inhibitor block is eliminated (Schur complement
/// J_uu - J_uv J_vv^{-1} J_vu), leaving n eigenvalues. For tau > 0 the
/// 2n eigenvalues of B^{-1} J are returned.
std::vector<std::complex<double>> pencil_eigenvalues(const LatticeParams& params,
                                                     const LatticeState& state);

StabilityReport pencil_spectrum(const LatticeParams& params, const LatticeState& state,
                                double marginal_tol = kDefaultMarginalTol);

/// Solver for the cyclic tridiagonal system (alpha I - beta L) x = rhs with
/// alpha > 0, beta >= 0 (strictly diagonally dominant). Factorization is
/// done once; solves are O(n).
class CyclicDiffusionSolver {
public:
    CyclicDiffusionSolver(int n, double alpha, double beta);

    void solve(std::span<const double> rhs, std::span<double> out) const;
    int size() const noexcept { return n_; }

private:
    void thomas(std::span<const double> rhs, std::span<double> out) const;

    int n_;
    double diag_;
    double off_;
    // Forward-eliminated coefficients of the tridiagonal part.
    std::vector<double> c_prime_;
    std::vector<double> denom_;
    // Sherman-Morrison correction vector for the corner entries.
    std::vector<double> z_;
    double gamma_;
    double z_factor_;
};

}  // namespace gml
