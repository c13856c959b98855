#pragma once

#include <Eigen/Dense>

#include "gmlattice/lattice.hpp"

namespace gml {

struct NewtonOptions {
    int max_iterations = 50;
    int max_halvings = 30;
    /// Absolute target on max|steady_residual|. When the residual's own
    /// rounding floor (residual_noise_floor) is larger, the floor is used.
    double tolerance = 1e-11;
};

struct RefineResult {
    LatticeState state;
    int iterations = 0;
    double residual = 0.0;
};

/// Damped Newton polish of a full-lattice steady state.
///
/// Each step solves the row- and column-equilibrated Newton system (so that
/// geometrically small tail values keep their relative accuracy), then
/// halves the step until the trial point keeps v > 0 and lowers max|F|.
/// Throws ConvergenceFailure after max_iterations or when halving is
/// exhausted, NumericalFailure on a singular Jacobian.
RefineResult refine_on_lattice(const LatticeState& initial, const LatticeParams& params,
                               const NewtonOptions& options = {});

/// Solves J s = rhs after diagonal equilibration. `scale_hint` gives the
/// magnitude of each unknown (typically |x|); entries are floored to keep
/// the scaling finite. Throws NumericalFailure when J is singular.
Eigen::VectorXd equilibrated_solve(const Eigen::MatrixXd& J, const Eigen::VectorXd& rhs,
                                   const Eigen::VectorXd& scale_hint);

/// Effective Newton target: max(options.tolerance, residual_noise_floor).
double newton_target(const LatticeParams& params, const LatticeState& state, double tolerance);

}  // namespace gml
