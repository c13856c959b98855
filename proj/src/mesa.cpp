#include "gmlattice/mesa.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gmlattice/errors.hpp"

namespace gml {

namespace {

double next_eta(double prev, double kappa, RootBranch b, bool clamp, int step) {
    double disc = 1.0 - 4.0 * prev / kappa;
    if (disc < 0.0) {
        if (!clamp) {
            std::ostringstream os;
            os << "tail recursion has no real root at step " << step << " (kappa = " << kappa << ")";
            throw Nonexistence(os.str(), step);
        }
        disc = 0.0;
    }
    const double root = std::sqrt(disc);
    // The minus root cancels once prev / kappa is tiny; use the conjugate form.
    if (b == RootBranch::minus) return 2.0 * prev / (kappa * (1.0 + root));
    return 0.5 * (1.0 + root);
}

std::vector<double> recursion(double kappa, int length, std::span<const RootBranch> branch, bool clamp) {
    if (!(kappa > 0.0)) throw InvalidInput("kappa must be positive");
    if (length < 1) throw InvalidInput("recursion length must be at least 1");
    if (static_cast<int>(branch.size()) != length - 1)
        throw InvalidInput("branch must hold one root choice per step (length - 1 entries)");
    std::vector<double> eta{1.0};
    for (int k = 2; k <= length; ++k) eta.push_back(next_eta(eta.back(), kappa, branch[k - 2], clamp, k));
    return eta;
}

int cyclic_distance(int a, int b, int n) {
    const int d = std::abs(a - b) % n;
    return std::min(d, n - d);
}

void fill_tail(LatticeState& s, const std::vector<int>& distance, const std::vector<double>& eta, double ratio) {
    for (std::size_t k = 0; k < distance.size(); ++k) {
        const int t = distance[k];
        if (t == 0) {
            s.u[k] = 1.0;
            s.v[k] = 1.0;
            continue;
        }
        const double v = std::pow(ratio, t);
        if (v < kTailFloor) {
            s.u[k] = 0.0;
            s.v[k] = kTailFloor;
        } else {
            s.u[k] = eta[t] * v;
            s.v[k] = v;
        }
    }
}

void check_mesa_args(int n, int m, double kappa, double eps2) {
    if (n < 3) throw InvalidInput("cycle needs at least 3 nodes");
    if (m < 1 || m >= n) throw InvalidInput("plateau width must satisfy 1 <= m < n");
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw InvalidInput("kappa must be positive");
    if (!(eps2 > 0.0) || !std::isfinite(eps2)) throw InvalidInput("eps2 must be positive");
}

MesaProfile build_profile(int n, int m, double kappa, double eps2, std::span<const RootBranch> branch,
                          bool clamp) {
    check_mesa_args(n, m, kappa, eps2);
    const int tail = (n - m + 1) / 2;
    MesaProfile p;
    p.n = n;
    p.m = m;
    p.kappa = kappa;
    p.eps2 = eps2;
    if (branch.empty()) {
        p.branch.assign(static_cast<std::size_t>(tail), RootBranch::minus);
    } else {
        if (static_cast<int>(branch.size()) != tail) {
            std::ostringstream os;
            os << "branch must hold " << tail << " root choices for n = " << n << ", m = " << m;
            throw InvalidInput(os.str());
        }
        p.branch.assign(branch.begin(), branch.end());
    }
    p.eta = recursion(kappa, tail + 1, p.branch, clamp);

    std::vector<int> distance(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) distance[k] = k < m ? 0 : std::min(k - (m - 1), n - k);
    LatticeState s = LatticeState::homogeneous(n, 0.0, 0.0);
    fill_tail(s, distance, p.eta, kappa * eps2);
    p.u0 = std::move(s.u);
    p.v0 = std::move(s.v);
    return p;
}

bool plateau_shape(const LatticeState& s, int m) {
    for (int k = 0; k < s.size(); ++k) {
        const bool on = k < m;
        if (on != (s.u[k] > 0.5)) return false;
    }
    return true;
}

}  // namespace

std::vector<double> eta_recursion(double kappa, int length, std::span<const RootBranch> branch) {
    return recursion(kappa, length, branch, false);
}

std::vector<double> eta_recursion(double kappa, int length) {
    if (length < 1) throw InvalidInput("recursion length must be at least 1");
    const std::vector<RootBranch> minus(static_cast<std::size_t>(length - 1), RootBranch::minus);
    return recursion(kappa, length, minus, false);
}

LatticeParams MesaProfile::params() const {
    LatticeParams p;
    p.n = n;
    p.D_u = eps2;
    p.D_v = kappa * eps2;
    p.tau = 0.0;
    return p;
}

LatticeState MesaProfile::leading_state() const { return LatticeState(u0, v0); }

MesaProfile leading_order_mesa(int n, int m, double kappa, double eps2, std::span<const RootBranch> branch) {
    return build_profile(n, m, kappa, eps2, branch, false);
}

MesaSolution mesa_profile(int n, int m, double kappa, double eps2, std::span<const RootBranch> branch,
                          const NewtonOptions& newton) {
    MesaSolution out;
    out.profile = leading_order_mesa(n, m, kappa, eps2, branch);
    auto refined = refine_on_lattice(out.profile.leading_state(), out.profile.params(), newton);
    out.state = std::move(refined.state);
    out.iterations = refined.iterations;
    out.residual = refined.residual;
    return out;
}

std::vector<double> mesa_leading_spectrum(const MesaProfile& profile) {
    std::vector<double> out(static_cast<std::size_t>(profile.n));
    for (int k = 0; k < profile.n; ++k) {
        const int t = k < profile.m ? 0 : std::min(k - (profile.m - 1), profile.n - k);
        out[k] = t == 0 ? kMesaPlateauEigenvalue : 2.0 * profile.eta[t] - 1.0;
    }
    return out;
}

LatticeState multi_mesa_seed(int n, const std::vector<std::pair<int, int>>& plateaus, double kappa,
                             double eps2) {
    if (n < 3) throw InvalidInput("cycle needs at least 3 nodes");
    if (plateaus.empty()) throw InvalidInput("need at least one plateau");
    std::vector<int> distance(static_cast<std::size_t>(n), n);
    for (const auto& [first, last] : plateaus) {
        if (first < 0 || last >= n || first > last) throw InvalidInput("plateau ranges must satisfy 0 <= first <= last < n");
        for (int k = 0; k < n; ++k) {
            for (int p = first; p <= last; ++p) distance[k] = std::min(distance[k], cyclic_distance(k, p, n));
        }
    }
    const int longest = *std::max_element(distance.begin(), distance.end());
    const auto eta = eta_recursion(kappa, longest + 1);
    LatticeState s = LatticeState::homogeneous(n, 0.0, 0.0);
    fill_tail(s, distance, eta, kappa * eps2);
    return s;
}

bool mesa_exists(int n, int m, double kappa, double eps2, const NewtonOptions& newton) {
    const auto profile = build_profile(n, m, kappa, eps2, {}, true);
    try {
        const auto refined = refine_on_lattice(profile.leading_state(), profile.params(), newton);
        return plateau_shape(refined.state, m);
    } catch (const NumericalFailure&) {
        return false;
    }
}

double fold_kappa(double eps2, int n, int m, const FoldKappaOptions& options) {
    check_mesa_args(n, m, options.kappa_hi, eps2);
    double lo = options.kappa_lo;
    double hi = options.kappa_hi;
    if (!(lo > 0.0 && lo < hi)) throw InvalidInput("fold_kappa needs 0 < kappa_lo < kappa_hi");
    const bool lo_ok = mesa_exists(n, m, lo, eps2, options.newton);
    const bool hi_ok = mesa_exists(n, m, hi, eps2, options.newton);
    if (lo_ok || !hi_ok) {
        std::ostringstream os;
        os << "fold_kappa bracket invalid: existence at kappa = " << lo << " is " << lo_ok << ", at kappa = " << hi
           << " is " << hi_ok << " (need false/true)";
        throw NumericalFailure(os.str());
    }
    while (hi - lo > options.tolerance) {
        const double mid = 0.5 * (lo + hi);
        (mesa_exists(n, m, mid, eps2, options.newton) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace gml
