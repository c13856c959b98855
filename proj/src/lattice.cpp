#include "gmlattice/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "gmlattice/errors.hpp"

namespace gml {

namespace {

inline int wrap(int k, int n) { return ((k % n) + n) % n; }

void require_finite(std::span<const double> w, const char* name) {
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (!std::isfinite(w[k])) {
            std::ostringstream os;
            os << name << "(" << k << ") is not finite";
            throw InvalidInput(os.str());
        }
    }
}

void check_compatible(const LatticeParams& params, const LatticeState& state) {
    params.validate();
    state.validate();
    if (state.size() != params.n) {
        std::ostringstream os;
        os << "state has " << state.size() << " nodes but params.n = " << params.n;
        throw InvalidInput(os.str());
    }
}

Eigen::MatrixXd laplacian_matrix(int n) {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        L(k, k) -= 2.0;
        L(k, wrap(k + 1, n)) += 1.0;
        L(k, wrap(k - 1, n)) += 1.0;
    }
    return L;
}

}  // namespace

void LatticeParams::validate() const {
    if (n < 3) throw InvalidInput("cycle needs at least 3 nodes");
    if (!(D_v > 0.0) || !std::isfinite(D_v)) throw InvalidInput("D_v must be positive and finite");
    if (!(D_u >= 0.0) || !std::isfinite(D_u)) throw InvalidInput("D_u must be nonnegative and finite");
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw InvalidInput("tau must be nonnegative and finite");
}

LatticeState LatticeState::homogeneous(int n, double u_value, double v_value) {
    return LatticeState(std::vector<double>(static_cast<std::size_t>(std::max(n, 0)), u_value),
                        std::vector<double>(static_cast<std::size_t>(std::max(n, 0)), v_value));
}

void LatticeState::validate() const {
    if (u.size() != v.size()) throw InvalidInput("u and v must have the same length");
    if (u.size() < 3) throw InvalidInput("cycle needs at least 3 nodes");
    require_finite(u, "u");
    require_finite(v, "v");
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (!(v[k] > 0.0)) throw DomainError(static_cast<int>(k), v[k]);
    }
}

Eigen::VectorXd LatticeState::stacked() const {
    const int n = size();
    Eigen::VectorXd x(2 * n);
    for (int k = 0; k < n; ++k) {
        x[k] = u[k];
        x[n + k] = v[k];
    }
    return x;
}

LatticeState LatticeState::from_stacked(const Eigen::VectorXd& x) {
    if (x.size() % 2 != 0) throw InvalidInput("stacked state must have even length");
    const auto n = static_cast<std::size_t>(x.size() / 2);
    LatticeState s;
    s.u.assign(x.data(), x.data() + n);
    s.v.assign(x.data() + n, x.data() + 2 * n);
    return s;
}

LatticeState rotate(const LatticeState& state, int shift) {
    const int n = state.size();
    LatticeState out = state;
    for (int k = 0; k < n; ++k) {
        out.u[wrap(k + shift, n)] = state.u[k];
        out.v[wrap(k + shift, n)] = state.v[k];
    }
    return out;
}

std::vector<double> laplacian_apply(std::span<const double> w) {
    const int n = static_cast<int>(w.size());
    if (n < 3) throw InvalidInput("laplacian needs at least 3 nodes");
    std::vector<double> out(w.size());
    for (int k = 0; k < n; ++k) {
        out[k] = (w[wrap(k + 1, n)] - w[k]) + (w[wrap(k - 1, n)] - w[k]);
    }
    return out;
}

std::vector<double> steady_residual(const LatticeParams& params, const LatticeState& state) {
    check_compatible(params, state);
    const int n = params.n;
    const auto Lu = laplacian_apply(state.u);
    const auto Lv = laplacian_apply(state.v);
    std::vector<double> r(2 * static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double u = state.u[k];
        const double v = state.v[k];
        r[k] = params.D_u * Lu[k] - u + u * u / v;
        r[n + k] = params.D_v * Lv[k] - v + u * u;
    }
    return r;
}

double max_abs_residual(const LatticeParams& params, const LatticeState& state) {
    const auto r = steady_residual(params, state);
    double m = 0.0;
    for (double x : r) m = std::max(m, std::abs(x));
    return m;
}

double residual_noise_floor(const LatticeParams& params, const LatticeState& state) {
    const int n = state.size();
    double scale = 0.0;
    for (int k = 0; k < n; ++k) {
        const int kp = wrap(k + 1, n);
        const int km = wrap(k - 1, n);
        const double u = std::abs(state.u[k]);
        const double v = std::abs(state.v[k]);
        const double du = params.D_u * (std::abs(state.u[kp]) + std::abs(state.u[km]) + 2.0 * u);
        const double dv = params.D_v * (std::abs(state.v[kp]) + std::abs(state.v[km]) + 2.0 * v);
        scale = std::max({scale, du + u + u * u / v, dv + v + u * u});
    }
    return 4.0 * std::numeric_limits<double>::epsilon() * scale;
}

Eigen::MatrixXd full_jacobian(const LatticeParams& params, const LatticeState& state) {
    check_compatible(params, state);
    const int n = params.n;
    const Eigen::MatrixXd L = laplacian_matrix(n);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    J.topLeftCorner(n, n) = params.D_u * L;
    J.bottomRightCorner(n, n) = params.D_v * L;
    for (int k = 0; k < n; ++k) {
        const double u = state.u[k];
        const double v = state.v[k];
        J(k, k) += -1.0 + 2.0 * u / v;
        J(k, n + k) = -(u / v) * (u / v);
        J(n + k, k) = 2.0 * u;
        J(n + k, n + k) -= 1.0;
    }
    return J;
}

Eigen::MatrixXd mass_matrix(const LatticeParams& params) {
    params.validate();
    const int n = params.n;
    Eigen::VectorXd diag(2 * n);
    diag.head(n).setOnes();
    diag.tail(n).setConstant(params.tau);
    return diag.asDiagonal();
}

std::vector<std::complex<double>> pencil_eigenvalues(const LatticeParams& params,
                                                     const LatticeState& state) {
    const Eigen::MatrixXd J = full_jacobian(params, state);
    const int n = params.n;
    Eigen::MatrixXd A;
    if (params.tau == 0.0) {
        const Eigen::MatrixXd Juu = J.topLeftCorner(n, n);
        const Eigen::MatrixXd Juv = J.topRightCorner(n, n);
        const Eigen::MatrixXd Jvu = J.bottomLeftCorner(n, n);
        const Eigen::MatrixXd Jvv = J.bottomRightCorner(n, n);
        // J_vv = D_v L - I is negative definite, so the elimination is always defined.
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(Jvv);
        A = Juu - Juv * lu.solve(Jvu);
    } else {
        A = J;
        A.bottomRows(n) /= params.tau;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw NumericalFailure("dense eigensolver did not converge");
    const auto& ev = es.eigenvalues();
    return std::vector<std::complex<double>>(ev.data(), ev.data() + ev.size());
}

StabilityReport pencil_spectrum(const LatticeParams& params, const LatticeState& state,
                                double marginal_tol) {
    return StabilityReport::from_eigenvalues(pencil_eigenvalues(params, state), marginal_tol);
}

CyclicDiffusionSolver::CyclicDiffusionSolver(int n, double alpha, double beta)
    : n_(n), diag_(alpha + 2.0 * beta), off_(-beta) {
    if (n < 3) throw InvalidInput("cyclic solver needs at least 3 nodes");
    if (!(alpha > 0.0) || !(beta >= 0.0)) throw InvalidInput("cyclic solver needs alpha > 0, beta >= 0");
    c_prime_.resize(n);
    denom_.resize(n);
    z_.resize(n);
    // Sherman-Morrison split of the corner entries (both equal to off_).
    gamma_ = -diag_;
    std::vector<double> b(n, diag_);
    b.front() = diag_ - gamma_;
    b.back() = diag_ - off_ * off_ / gamma_;
    denom_[0] = b[0];
    c_prime_[0] = off_ / b[0];
    for (int i = 1; i < n; ++i) {
        denom_[i] = b[i] - off_ * c_prime_[i - 1];
        c_prime_[i] = off_ / denom_[i];
    }
    std::vector<double> rhs(n, 0.0);
    rhs.front() = gamma_;
    rhs.back() = off_;
    thomas(rhs, z_);
    z_factor_ = 1.0 + z_.front() + off_ * z_.back() / gamma_;
}

void CyclicDiffusionSolver::thomas(std::span<const double> rhs, std::span<double> out) const {
    out[0] = rhs[0] / denom_[0];
    for (int i = 1; i < n_; ++i) out[i] = (rhs[i] - off_ * out[i - 1]) / denom_[i];
    for (int i = n_ - 2; i >= 0; --i) out[i] -= c_prime_[i] * out[i + 1];
}

void CyclicDiffusionSolver::solve(std::span<const double> rhs, std::span<double> out) const {
    if (static_cast<int>(rhs.size()) != n_ || static_cast<int>(out.size()) != n_)
        throw InvalidInput("cyclic solver size mismatch");
    thomas(rhs, out);
    const double fact = (out.front() + off_ * out.back() / gamma_) / z_factor_;
    for (int i = 0; i < n_; ++i) out[i] -= fact * z_[i];
}

}  // namespace gml
