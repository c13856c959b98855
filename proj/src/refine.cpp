#include "gmlattice/refine.hpp"

#include <algorithm>
#include <cmath>

#include "gmlattice/errors.hpp"

namespace gml {

namespace {

constexpr double kScaleFloor = 1e-280;

double max_norm(const std::vector<double>& r) {
    double m = 0.0;
    for (double x : r) m = std::max(m, std::abs(x));
    return m;
}

bool positive_inhibitor(const Eigen::VectorXd& x, int n) {
    for (int k = 0; k < n; ++k) {
        if (!(x[n + k] > 0.0) || !std::isfinite(x[k]) || !std::isfinite(x[n + k])) return false;
    }
    return true;
}

}  // namespace

Eigen::VectorXd equilibrated_solve(const Eigen::MatrixXd& J, const Eigen::VectorXd& rhs,
                                   const Eigen::VectorXd& scale_hint) {
    const Eigen::Index N = J.rows();
    Eigen::VectorXd col(N);
    for (Eigen::Index j = 0; j < N; ++j) col[j] = std::max(std::abs(scale_hint[j]), kScaleFloor);
    Eigen::MatrixXd A = J * col.asDiagonal();
    Eigen::VectorXd row(N);
    for (Eigen::Index i = 0; i < N; ++i) {
        const double m = A.row(i).cwiseAbs().maxCoeff();
        if (!(m > 0.0) || !std::isfinite(m)) throw NumericalFailure("singular Jacobian (zero row)");
        row[i] = 1.0 / m;
    }
    A = row.asDiagonal() * A;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    if (!(lu.rcond() > 1e-16)) throw NumericalFailure("singular Jacobian");
    const Eigen::VectorXd y = lu.solve(row.cwiseProduct(rhs));
    if (!y.allFinite()) throw NumericalFailure("singular Jacobian (non-finite step)");
    return col.cwiseProduct(y);
}

double newton_target(const LatticeParams& params, const LatticeState& state, double tolerance) {
    return std::max(tolerance, residual_noise_floor(params, state));
}

RefineResult refine_on_lattice(const LatticeState& initial, const LatticeParams& params,
                               const NewtonOptions& options) {
    params.validate();
    initial.validate();
    if (initial.size() != params.n) throw InvalidInput("initial state size does not match params.n");
    const int n = params.n;

    LatticeState state = initial;
    double res = max_norm(steady_residual(params, state));
    for (int it = 0;; ++it) {
        if (res < newton_target(params, state, options.tolerance)) return {state, it, res};
        if (it == options.max_iterations)
            throw ConvergenceFailure("lattice Newton did not converge", it, res);

        const Eigen::VectorXd x = state.stacked();
        const auto F = steady_residual(params, state);
        const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(F.data(), 2 * n);
        const Eigen::VectorXd step = equilibrated_solve(full_jacobian(params, state), rhs, x);

        double alpha = 1.0;
        bool accepted = false;
        for (int h = 0; h <= options.max_halvings; ++h, alpha *= 0.5) {
            const Eigen::VectorXd trial = x + alpha * step;
            if (!positive_inhibitor(trial, n)) continue;
            LatticeState candidate = LatticeState::from_stacked(trial);
            const double trial_res = max_norm(steady_residual(params, candidate));
            if (trial_res < res) {
                state = std::move(candidate);
                res = trial_res;
                accepted = true;
                break;
            }
        }
        if (!accepted) throw ConvergenceFailure("lattice Newton step halving exhausted", it, res);
    }
}

}  // namespace gml
