#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gmlattice/lattice.hpp"

namespace gml {

enum class StepMode {
    explicit_euler,  ///< forward Euler on both species (tau > 0)
    imex,            ///< linear diffusion/decay implicit, reaction explicit
    dae,             ///< tau = 0: v solved from (D_v L - I) v = -u^2 every step
};

std::string_view to_string(StepMode mode) noexcept;
StepMode step_mode_from_string(std::string_view name);

struct SimConfig {
    double dt = 1e-3;
    double t_end = 200.0;
    StepMode mode = StepMode::dae;
    int sample_every = 1000;
    std::uint64_t seed = 0;
    double perturb_amp = 1e-3;
    /// Split a step into substeps whenever dt exceeds the explicit reaction
    /// limit instead of failing. A substep below min_dt counts as blow-up.
    bool adaptive = false;
    double min_dt = 1e-9;

    void validate(const LatticeParams& params) const;
};

struct SampleDiagnostics {
    double max_u = 0.0;
    std::vector<int> spike_nodes;  ///< nodes with u > max(u)/2
    double residual_norm = 0.0;    ///< max|steady_residual|
};

struct Trajectory {
    std::vector<double> times;
    std::vector<LatticeState> states;
    std::vector<SampleDiagnostics> diagnostics;
    bool blew_up = false;
    double blowup_time = 0.0;
    std::string blowup_report;
};

/// Nodes where u exceeds half of its maximum (empty when max u <= 0).
std::vector<int> spike_nodes(const LatticeState& state);

/// Time integration of the full system. Samples are stored at t = 0 and
/// every `sample_every` steps (plus the final time). A non-finite value or
/// v <= 0 ends the run with `blew_up` set. Throws InvalidInput for a bad
/// configuration and NumericalFailure when the reaction stability monitor
/// trips (dt too large for the explicit reaction terms and not adaptive).
Trajectory integrate(const LatticeParams& params, const LatticeState& initial, const SimConfig& cfg);

/// Mean-zero seeded noise of maximal magnitude `amplitude` added to u.
LatticeState perturb_activator(const LatticeState& state, double amplitude, std::uint64_t seed);

enum class SimVerdict { stable, unstable, inconclusive };
std::string_view to_string(SimVerdict verdict) noexcept;

struct SimClassification {
    SimVerdict verdict = SimVerdict::inconclusive;
    double initial_deviation = 0.0;
    double final_deviation = 0.0;
    double decision_time = 0.0;
    bool blew_up = false;
};

/// Perturbs a converged steady state with seeded activator noise and
/// integrates. Unstable as soon as the max-norm deviation of u exceeds 10x
/// its initial value (or on blow-up); stable when it is below 0.1x at
/// t_end; inconclusive otherwise.
SimClassification classify_by_simulation(const LatticeParams& params, const LatticeState& state,
                                         const SimConfig& cfg);

struct SpikeTrack {
    std::vector<std::vector<int>> nodes;
    std::vector<int> counts;  ///< number of separate spikes (contiguous runs of spike nodes)
};

SpikeTrack track_spikes(const Trajectory& trajectory);

/// Number of contiguous (cyclic) runs in a sorted node set on n nodes.
int count_runs(const std::vector<int>& nodes, int n);

}  // namespace gml
