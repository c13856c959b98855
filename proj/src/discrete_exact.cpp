#include "gmlattice/discrete_exact.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "gmlattice/errors.hpp"

namespace gml {

namespace {

void check_layout(int n, int K) {
    if (n < 3) throw InvalidInput("cycle needs at least 3 nodes");
    if (K < 1 || n % K != 0) {
        std::ostringstream os;
        os << "spike count K = " << K << " must divide n = " << n;
        throw InvalidInput(os.str());
    }
}

// Most unstable Floquet phase: cos(2 pi floor(K/2) / K).
double min_cos(int K) { return std::cos(2.0 * std::numbers::pi * (K / 2) / K); }

}  // namespace

AlphaRoots roots_alpha(double D_v) {
    if (!(D_v > 0.0) || !std::isfinite(D_v)) throw InvalidInput("D_v must be positive");
    const double half_sum = 1.0 + 0.5 / D_v;
    const double root = std::sqrt(1.0 / D_v + 0.25 / (D_v * D_v));
    const double alpha2 = half_sum + root;
    // alpha1 = half_sum - root suffers cancellation for large D_v; use the product.
    return {1.0 / alpha2, alpha2};
}

LatticeParams ExactSymmetricSolution::params() const {
    LatticeParams p;
    p.n = n;
    p.D_u = 0.0;
    p.D_v = D_v;
    p.tau = 0.0;
    return p;
}

LatticeState ExactSymmetricSolution::state() const {
    LatticeState s = LatticeState::homogeneous(n, 0.0, 0.0);
    for (int k = 0; k < n; ++k) {
        const int j = k % m;
        s.v[k] = C[j];
        if (j == 0) s.u[k] = C[0];
    }
    return s;
}

ExactSymmetricSolution exact_symmetric_solution(int n, int K, double D_v) {
    check_layout(n, K);
    const auto [a1, a2] = roots_alpha(D_v);
    ExactSymmetricSolution sol;
    sol.n = n;
    sol.K = K;
    sol.m = n / K;
    sol.D_v = D_v;
    sol.alpha1 = a1;
    sol.alpha2 = a2;
    const int m = sol.m;

    // With alpha1 alpha2 = 1 the profile is C_j = C_0 (alpha1^j + alpha1^(m-j)) / (1 + alpha1^m),
    // written with decaying powers only.
    const double r = std::pow(a1, m);
    auto profile = [&](int j) { return (std::pow(a1, j) + std::pow(a1, m - j)) / (1.0 + r); };
    const double ratio1 = profile(1);  // C_1 / C_0
    const double C0 = 1.0 - 2.0 * D_v * (ratio1 - 1.0);
    if (!(C0 > 0.0)) {
        std::ostringstream os;
        os << "symmetric " << K << "-spike state does not exist (C_0 = " << C0 << ")";
        throw Nonexistence(os.str(), -1);
    }
    sol.C.resize(static_cast<std::size_t>(m));
    sol.C[0] = C0;
    for (int j = 1; j < m; ++j) sol.C[j] = C0 * profile(j);

    // a = (alpha2 - alpha1)/(alpha2^m - alpha1^m), b = (alpha2^(m-1) - alpha1^(m-1))/(alpha2^m - alpha1^m).
    const double denom = 1.0 - r * r;
    sol.a_coef = (a2 - a1) * r / denom;
    sol.b_coef = (a1 - std::pow(a1, 2 * m - 1)) / denom;
    return sol;
}

std::vector<double> exact_mode_eigenvalues(const ExactSymmetricSolution& sol) {
    std::vector<double> out(static_cast<std::size_t>(sol.K));
    for (int j = 0; j < sol.K; ++j) {
        const double c = std::cos(2.0 * std::numbers::pi * j / sol.K);
        const double lambda_M = sol.D_v * (2.0 * sol.b_coef - 2.0 + 2.0 * sol.a_coef * c);
        out[j] = 1.0 - 2.0 * sol.C[0] / (1.0 - lambda_M);
    }
    return out;
}

StabilityReport exact_spectrum(const ExactSymmetricSolution& sol, double marginal_tol) {
    const auto modes = exact_mode_eigenvalues(sol);
    return StabilityReport::from_eigenvalues({modes.begin(), modes.end()}, marginal_tol);
}

double exact_max_eigenvalue(int n, int K, double D_v) {
    const auto sol = exact_symmetric_solution(n, K, D_v);
    const double lambda_M = D_v * (2.0 * sol.b_coef - 2.0 + 2.0 * sol.a_coef * min_cos(K));
    return 1.0 - 2.0 * sol.C[0] / (1.0 - lambda_M);
}

double critical_Dv(int n, int K) {
    check_layout(n, K);
    if (K < 2) throw InvalidInput("critical D_v needs at least two spikes");
    // 2 C_0 = 1 - lambda_M,min; for even K this is 2 C_0 = 1 + 2 D_v + 2 D_v (a - b).
    auto g = [&](double D_v) { return exact_max_eigenvalue(n, K, D_v); };
    double lo = 1e-6, hi = 1e6;
    const double g_lo = g(lo);
    const double g_hi = g(hi);
    if (!(g_lo < 0.0 && g_hi > 0.0)) {
        std::ostringstream os;
        os << "critical D_v: no sign change on [1e-6, 1e6] (lambda_max = " << g_lo << ", " << g_hi << ")";
        throw NumericalFailure(os.str());
    }
    while (hi - lo > 1e-10 * lo) {
        const double mid = std::sqrt(lo * hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
    }
    return std::sqrt(lo * hi);
}

}  // namespace gml
