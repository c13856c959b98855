#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmlattice/continuation.hpp"
#include "gmlattice/dynamics.hpp"
#include "gmlattice/lattice.hpp"
#include "gmlattice/mesa.hpp"
#include "gmlattice/spikes.hpp"
#include "gmlattice/stability_report.hpp"

namespace gml::io {

using json = nlohmann::json;

/// Shortest round-trip decimal form of a double ("nan"/"inf" for non-finite).
std::string format_double(double x);

/// CSV `node,u,v`.
void write_lattice_csv(std::ostream& os, const LatticeState& state);
LatticeState read_lattice_csv(std::istream& is);

/// JSON object with keys `n`, `u`, `v`.
json lattice_to_json(const LatticeState& state);
LatticeState lattice_from_json(const json& j);

/// Keys `K`, `d`, `positions`, `heights`, `residual_norm`.
json spike_config_to_json(const SpikeConfiguration& config);

/// Keys `eigenvalues_re`, `eigenvalues_im`, `max_real`, `classification`.
json stability_report_to_json(const StabilityReport& report);

struct ExactSweepRow {
    int n = 0;
    int K = 0;
    int m = 0;
    double Dvc = 0.0;
};

/// CSV `n,K,m,Dvc,sqrtDvc_over_m`.
void write_exact_sweep_csv(std::ostream& os, const std::vector<ExactSweepRow>& rows);

/// CSV `k,eta,branch`; k starts at 1 and the first row has branch 0 (the
/// plateau edge is not a root choice).
void write_eta_trace_csv(std::ostream& os, const MesaProfile& profile);

/// Long-format CSV `t,node,u,v`.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
/// CSV `t,spike_count,max_u,residual_norm`.
void write_trajectory_summary_csv(std::ostream& os, const Trajectory& traj);

/// CSV `param,max_u,stable,fold_flag`.
void write_branch_csv(std::ostream& os, const Branch& branch);
/// One lattice CSV per branch point, `state_<index>.csv`, in `dir`.
void write_branch_states(const std::filesystem::path& dir, const Branch& branch);

/// Writes through a temporary file and renames, so readers never see a
/// partially written file.
void write_file(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace gml::io
