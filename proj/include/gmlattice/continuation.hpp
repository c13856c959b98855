#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gmlattice/lattice.hpp"
#include "gmlattice/refine.hpp"

namespace gml {

/// Continuation parameter. `d` sets D_v = d^2 n^2, `kappa` sets
/// D_v = kappa D_u, `Dv` sets D_v directly. D_u and tau stay fixed.
enum class ContinuationParameter { d, kappa, Dv };

std::string_view to_string(ContinuationParameter p) noexcept;
ContinuationParameter continuation_parameter_from_string(std::string_view name);

LatticeParams with_parameter(const LatticeParams& base, ContinuationParameter p, double value);
double parameter_value(const LatticeParams& params, ContinuationParameter p);
/// dD_v / dp at the given parameter value.
double dDv_dparameter(const LatticeParams& base, ContinuationParameter p, double value);

struct BranchPoint {
    double parameter = 0.0;
    double max_u = 0.0;
    LatticeState state;
    bool stable = false;
    double max_real = 0.0;
    bool fold = false;      ///< refined turning point inserted into the branch
    double residual = 0.0;
};

struct Branch {
    ContinuationParameter parameter = ContinuationParameter::d;
    std::vector<BranchPoint> points;
    std::vector<double> folds;
    /// Parameter values where the stability flag changed away from a fold.
    std::vector<double> stability_changes;
    bool truncated = false;
    std::string diagnostic;
};

struct ContinuationOptions {
    double step0 = 0.0;      ///< initial arclength step in parameter units; 0 means 0.01 * width
    double min_step = 1e-5;
    double max_step_fraction = 0.05;  ///< max step = fraction * |end - start|
    double growth = 1.3;
    int successes_to_grow = 3;
    int max_points = 4000;
    int corrector_iterations = 12;
    double corrector_tolerance = 1e-11;
    double accept_residual = 1e-9;
    double fold_relative_tolerance = 1e-4;
    double marginal_tol = kDefaultMarginalTol;
    /// Stability flips are localized until the step falls below this
    /// fraction of the range width.
    double flip_resolution = 1e-3;
};

/// Pseudo-arclength continuation of a converged steady state.
///
/// Arclength is measured in scaled coordinates x / max|x0| and
/// p / |end - start|, so the parameter and the state contribute on equal
/// footing. The branch starts towards `end_value` and stops when the
/// parameter leaves the closed range spanned by the two values or after
/// max_points. A corrector failure at the minimum step truncates the
/// branch and fills `diagnostic`. Throws InvalidInput when `start` is not
/// converged at start_value.
Branch continue_branch(const LatticeParams& params, const LatticeState& start, ContinuationParameter parameter,
                       double start_value, double end_value, const ContinuationOptions& options = {});

struct BranchContact {
    double distance = 0.0;   ///< in (parameter, max_u / measure scale) coordinates
    double parameter = 0.0;
    double measure = 0.0;
    bool touching = false;   ///< distance <= tolerance
};

/// Closest approach of two branches as polylines in (parameter, max_u),
/// with max_u divided by the largest max_u found on either branch.
BranchContact branch_contact(const Branch& a, const Branch& b, double tolerance = 1e-3);

struct FoldScanPoint {
    double D_u = 0.0;
    std::optional<double> kappa_fold;
    /// Some point past the fold has a central dimple (see has_central_dimple).
    bool reaches_dimple = false;
    std::string diagnostic;
};

struct FoldScanOptions {
    /// The downward sweep runs from kappa_start to kappa_end. The start state
    /// is a leading-order one-spike profile at kappa = 8 and D_u = min(D_u, 0.01)
    /// carried to kappa_start and then to D_u.
    double kappa_start = 40.0;
    double kappa_end = 2.0;
    ContinuationOptions continuation{};
    unsigned threads = 1;
};

struct FoldScan {
    std::vector<FoldScanPoint> points;
    bool monotone = true;
    std::vector<std::string> warnings;
};

/// For each D_u the one-spike state is continued downward in kappa and the
/// first fold recorded. Grid points run concurrently up to `threads`.
/// Non-monotone kappa_f(D_u) is reported as a warning.
FoldScan fold_scan_kappa(const std::vector<double>& Du_grid, int n, const FoldScanOptions& options = {});

/// A single spike run of at least three nodes whose activator has a strict
/// local minimum at an interior node of the run.
bool has_central_dimple(const LatticeState& state);

}  // namespace gml
