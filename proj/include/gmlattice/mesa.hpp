#pragma once

#include <span>
#include <vector>

#include "gmlattice/lattice.hpp"
#include "gmlattice/refine.hpp"

namespace gml {

/// Root choice at one step of the tail-ratio recursion.
enum class RootBranch : int { minus = -1, plus = 1 };

/// eta_1 = 1, eta_k = (1 +- sqrt(1 - 4 eta_{k-1} / kappa)) / 2.
///
/// Returns eta_1..eta_length; `branch[i]` selects the root for eta_{i+2}, so
/// it must hold length - 1 entries. Throws Nonexistence (step = k) when the
/// discriminant at step k is negative.
std::vector<double> eta_recursion(double kappa, int length, std::span<const RootBranch> branch);

/// All-minus recursion (the stable family).
std::vector<double> eta_recursion(double kappa, int length);

/// Leading-order m-mesa of the small-diffusion system
///     0 = eps2 L u - u + u^2/v,   0 = kappa eps2 L v - v + u^2.
///
/// Plateau nodes 0..m-1 carry u = v = 1. A tail node at cyclic distance t
/// from the plateau carries v = (kappa eps2)^t and u = eta_{t+1} v, so the
/// plateau edge itself is eta_1 = 1.
struct MesaProfile {
    int n = 0;
    int m = 0;
    double kappa = 0.0;
    double eps2 = 0.0;
    std::vector<double> eta;          ///< eta_1..eta_{L}, L = tail length + 1
    std::vector<RootBranch> branch;   ///< roots used for eta_2..eta_L
    std::vector<double> u0;
    std::vector<double> v0;

    int tail_length() const noexcept { return static_cast<int>(eta.size()) - 1; }
    LatticeParams params() const;
    LatticeState leading_state() const;
};

/// Smallest inhibitor value kept in a leading-order profile; geometric
/// tails are floored here instead of underflowing to zero.
inline constexpr double kTailFloor = 1e-300;

/// Builds the leading-order profile; tail length is ceil((n - m)/2). An
/// empty `branch` means all-minus. Throws InvalidInput on bad sizes and
/// Nonexistence when the recursion fails.
MesaProfile leading_order_mesa(int n, int m, double kappa, double eps2,
                               std::span<const RootBranch> branch = {});

struct MesaSolution {
    MesaProfile profile;
    LatticeState state;
    int iterations = 0;
    double residual = 0.0;
};

/// Leading-order profile polished by refine_on_lattice.
MesaSolution mesa_profile(int n, int m, double kappa, double eps2,
                          std::span<const RootBranch> branch = {}, const NewtonOptions& newton = {});

/// Leading-order eigenvalue at every node: plateau nodes get
/// kMesaPlateauEigenvalue, a tail node at distance t gets 2 eta_{t+1} - 1.
std::vector<double> mesa_leading_spectrum(const MesaProfile& profile);

/// Leading-order plateau eigenvalue from linearizing u_t = -u + u^2/v with the
/// inhibitor slaved (psi = 2 u phi): 2u/v - 1 - 2u^3/v^2 at u = v = 1.
inline constexpr double kMesaPlateauEigenvalue = -1.0;

/// Seed made of several plateaus (inclusive node ranges) joined by
/// geometric tails, each tail node taking the distance to its nearest plateau.
LatticeState multi_mesa_seed(int n, const std::vector<std::pair<int, int>>& plateaus, double kappa,
                             double eps2);

struct FoldKappaOptions {
    double kappa_lo = 3.0;
    double kappa_hi = 8.0;
    double tolerance = 1e-3;
    NewtonOptions newton{};
};

/// Operational existence boundary of the m-mesa: the smallest kappa in
/// [kappa_lo, kappa_hi] at which Newton started from the leading-order
/// profile converges to an m-plateau state. Below kappa = 4 the recursion
/// has no real root; there the seed uses the double root (discriminant
/// clamped at zero) so the Newton test stays meaningful. Throws
/// NumericalFailure when both ends converge or both fail.
double fold_kappa(double eps2, int n, int m, const FoldKappaOptions& options = {});

/// True when refine from the (clamped) leading-order seed converges to a
/// state whose activator is above 1/2 exactly on the m plateau nodes.
bool mesa_exists(int n, int m, double kappa, double eps2, const NewtonOptions& newton = {});

}  // namespace gml
