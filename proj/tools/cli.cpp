#include "cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "gmlattice/continuation.hpp"
#include "gmlattice/discrete_exact.hpp"
#include "gmlattice/dynamics.hpp"
#include "gmlattice/errors.hpp"
#include "gmlattice/io.hpp"
#include "gmlattice/mesa.hpp"
#include "gmlattice/reduced_stability.hpp"
#include "gmlattice/refine.hpp"
#include "gmlattice/spikes.hpp"

namespace gml::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "1.0.0";

struct KeySpec {
    std::string name;
    std::string type;  // int, number, string, bool, int[], number[]
    json def;          // null marks a required key
    std::string help;
};

struct RunContext {
    fs::path dir;
    unsigned threads = 1;
    std::ostream& out;
    std::ostream& err;
    std::vector<std::string> artifacts;
    json extra = json::object();  // merged into the manifest

    void write(const std::string& name, const std::string& contents) {
        io::write_file(dir / name, contents);
        artifacts.push_back(name);
    }
};

// Numerical failure that is an outcome rather than an exception from the
// library (e.g. a blow-up), mapped to exit code 1.
struct OutcomeFailure : Error {
    using Error::Error;
};

using Handler = std::function<void(const json&, RunContext&)>;

struct Subcommand {
    std::string name;
    std::string help;
    std::vector<KeySpec> keys;
    Handler handler;
};

// ---------------------------------------------------------------- helpers

std::vector<double> numbers(const json& j) { return j.get<std::vector<double>>(); }

LatticeState load_state(const std::string& path) {
    std::istringstream is(io::read_file(path));
    return io::read_lattice_csv(is);
}

std::string csv_of(const LatticeState& s) {
    std::ostringstream os;
    io::write_lattice_csv(os, s);
    return os.str();
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

std::string sig4(double x) {
    std::ostringstream os;
    os << std::setprecision(4) << x;
    return os.str();
}

double inhibitor_diffusion(const json& cfg, int n) {
    const double Dv = cfg.at("Dv").get<double>();
    if (Dv > 0.0) return Dv;
    const double d = cfg.at("d").get<double>();
    if (!(d > 0.0)) throw InvalidInput("either Dv or d must be positive");
    return d * d * n * n;
}

SpikeConfiguration pick_solution(const std::vector<double>& positions, double d, int index, unsigned threads) {
    const auto outcome = solve_heights(positions, d, default_height_guesses(positions, d), {},
                                       static_cast<int>(threads));
    if (outcome.solutions.empty()) throw ConvergenceFailure("no spike-height solution found", 0, 0.0);
    if (index == -1) {
        auto spread = [](const SpikeConfiguration& c) {
            const auto [lo, hi] = std::minmax_element(c.heights.begin(), c.heights.end());
            return *hi - *lo;
        };
        return *std::min_element(outcome.solutions.begin(), outcome.solutions.end(),
                                 [&](const auto& a, const auto& b) { return spread(a) < spread(b); });
    }
    if (index < 0 || index >= static_cast<int>(outcome.solutions.size())) {
        std::ostringstream os;
        os << "solution index " << index << " out of range (found " << outcome.solutions.size() << ")";
        throw InvalidInput(os.str());
    }
    return outcome.solutions[index];
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_hex(const std::string& sub, const json& cfg) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(sub + "\n" + cfg.dump());
    return os.str();
}

// ---------------------------------------------------------------- handlers

void run_construct(const json& cfg, RunContext& ctx) {
    const int n = cfg.at("n").get<int>();
    const double d = cfg.at("d").get<double>();
    const auto positions = numbers(cfg.at("positions"));
    const auto outcome = solve_heights(positions, d, default_height_guesses(positions, d), {},
                                       static_cast<int>(ctx.threads));
    const LatticeParams params = spike_regime_params(n, d);
    json sols = json::array();
    for (std::size_t i = 0; i < outcome.solutions.size(); ++i) {
        const auto& c = outcome.solutions[i];
        json entry = io::spike_config_to_json(c);
        if (cfg.at("refine").get<bool>()) {
            try {
                const auto r = refine_on_lattice(assemble_profile(c, n), params);
                const std::string name = "solution_" + std::to_string(i) + ".csv";
                ctx.write(name, csv_of(r.state));
                entry["lattice_state"] = name;
                entry["lattice_residual"] = r.residual;
            } catch (const NumericalFailure& e) {
                entry["lattice_error"] = e.what();
            }
        }
        sols.push_back(entry);
    }
    json failures = json::array();
    for (const auto& f : outcome.failures) failures.push_back({{"guess", f.guess_index}, {"reason", f.reason}});
    ctx.write("solutions.json", pretty({{"solutions", sols}, {"guess_failures", failures}}));
    ctx.out << "found " << outcome.solutions.size() << " solution(s)\n";
    for (const auto& s : sols) {
        ctx.out << "  heights";
        for (double h : s.at("heights")) ctx.out << ' ' << io::format_double(h);
        ctx.out << '\n';
    }
}

void run_stability(const json& cfg, RunContext& ctx) {
    const std::string mode = cfg.at("mode").get<std::string>();
    const double tol = cfg.at("marginal_tol").get<double>();
    if (mode == "full") {
        const std::string path = cfg.at("state").get<std::string>();
        if (path.empty()) throw InvalidInput("stability mode 'full' needs 'state' (lattice CSV)");
        const LatticeState s = load_state(path);
        LatticeParams p{s.size(), cfg.at("Du").get<double>(), inhibitor_diffusion(cfg, s.size()),
                        cfg.at("tau").get<double>()};
        p.validate();
        const double res = max_abs_residual(p, s);
        const StabilityReport rep = pencil_spectrum(p, s, tol);
        json j = io::stability_report_to_json(rep);
        j["residual"] = res;
        ctx.write("report.json", pretty(j));
        if (res > 1e-8) ctx.err << "warning: state residual " << res << " (not a converged steady state)\n";
        ctx.out << to_string(rep.classification) << " (max real part " << io::format_double(rep.max_real) << ")\n";
    } else if (mode == "reduced") {
        const double d = cfg.at("d").get<double>();
        const auto positions = numbers(cfg.at("positions"));
        const auto outcome = solve_heights(positions, d, default_height_guesses(positions, d), {},
                                           static_cast<int>(ctx.threads));
        json reports = json::array();
        for (const auto& c : outcome.solutions) {
            const StabilityReport rep = reduced_spectrum(c, tol);
            json j = io::stability_report_to_json(rep);
            j["configuration"] = io::spike_config_to_json(c);
            reports.push_back(j);
            ctx.out << to_string(rep.classification) << " heights";
            for (double h : c.heights) ctx.out << ' ' << io::format_double(h);
            ctx.out << '\n';
        }
        ctx.write("reports.json", pretty(reports));
    } else {
        throw InvalidInput("stability 'mode' must be 'full' or 'reduced'");
    }
}

void run_threshold(const json& cfg, RunContext& ctx) {
    const int K = cfg.at("K").get<int>();
    const double l = cfg.at("l").get<double>();
    double dc = 0.0;
    if (l > 0.0) {
        if (K != 2) throw InvalidInput("a separation 'l' is only meaningful for K = 2");
        dc = two_spike_threshold(l);
    } else {
        dc = symmetric_threshold(K);
    }
    ctx.write("threshold.json", pretty({{"K", K}, {"l", l}, {"d_c", dc}}));
    ctx.out << "d_c = " << sig4(dc) << '\n';
}

void run_exact(const json& cfg, RunContext& ctx) {
    const int n = cfg.at("n").get<int>();
    const int K = cfg.at("K").get<int>();
    const double Dv = cfg.at("Dv").get<double>();
    const auto sol = exact_symmetric_solution(n, K, Dv);
    const LatticeState s = sol.state();
    const StabilityReport rep = exact_spectrum(sol);
    json j = io::stability_report_to_json(rep);
    j["m"] = sol.m;
    j["residual"] = max_abs_residual(sol.params(), s);
    j["critical_Dv"] = critical_Dv(n, K);
    if (cfg.at("dense_check").get<bool>()) j["dense_max_real"] = pencil_spectrum(sol.params(), s).max_real;
    ctx.write("state.csv", csv_of(s));
    ctx.write("report.json", pretty(j));
    ctx.out << to_string(rep.classification) << " (max real part " << io::format_double(rep.max_real)
            << ", critical Dv " << io::format_double(j["critical_Dv"].get<double>()) << ")\n";
}

void run_mesa(const json& cfg, RunContext& ctx) {
    const int n = cfg.at("n").get<int>();
    const int m = cfg.at("m").get<int>();
    std::vector<RootBranch> branch;
    for (int b : cfg.at("branch").get<std::vector<int>>()) {
        if (b != 1 && b != -1) throw InvalidInput("mesa 'branch' entries must be +1 or -1");
        branch.push_back(b > 0 ? RootBranch::plus : RootBranch::minus);
    }
    const auto sol = mesa_profile(n, m, cfg.at("kappa").get<double>(), cfg.at("eps2").get<double>(), branch);
    const StabilityReport rep = pencil_spectrum(sol.profile.params(), sol.state);
    json j = io::stability_report_to_json(rep);
    j["residual"] = sol.residual;
    j["iterations"] = sol.iterations;
    std::ostringstream eta;
    io::write_eta_trace_csv(eta, sol.profile);
    ctx.write("mesa.csv", csv_of(sol.state));
    ctx.write("eta.csv", eta.str());
    ctx.write("report.json", pretty(j));
    ctx.out << to_string(rep.classification) << " (max real part " << io::format_double(rep.max_real) << ")\n";
}

void run_simulate(const json& cfg, RunContext& ctx) {
    const int n = cfg.at("n").get<int>();
    LatticeParams p{n, cfg.at("Du").get<double>(), inhibitor_diffusion(cfg, n), cfg.at("tau").get<double>()};
    p.validate();
    SimConfig sim;
    sim.dt = cfg.at("dt").get<double>();
    sim.t_end = cfg.at("t_end").get<double>();
    sim.mode = step_mode_from_string(cfg.at("mode").get<std::string>());
    sim.sample_every = cfg.at("sample_every").get<int>();
    sim.seed = cfg.at("seed").get<std::uint64_t>();
    sim.perturb_amp = cfg.at("perturb_amp").get<double>();
    sim.adaptive = cfg.at("adaptive").get<bool>();
    sim.validate(p);

    LatticeState start;
    const std::string initial = cfg.at("initial").get<std::string>();
    if (!initial.empty()) {
        start = load_state(initial);
        if (start.size() != n) throw InvalidInput("initial state has a different node count than 'n'");
    } else {
        const double d = std::sqrt(p.D_v) / n;
        const auto c = pick_solution(numbers(cfg.at("positions")), d, cfg.at("solution").get<int>(), ctx.threads);
        start = refine_on_lattice(assemble_profile(c, n), p).state;
    }

    if (cfg.at("classify").get<bool>()) {
        const auto c = classify_by_simulation(p, start, sim);
        ctx.write("result.json", pretty({{"verdict", std::string(to_string(c.verdict))},
                                         {"initial_deviation", c.initial_deviation},
                                         {"final_deviation", c.final_deviation},
                                         {"decision_time", c.decision_time},
                                         {"blew_up", c.blew_up}}));
        ctx.out << to_string(c.verdict) << " (decided at t = " << io::format_double(c.decision_time) << ")\n";
        return;
    }

    const Trajectory traj = integrate(p, perturb_activator(start, sim.perturb_amp, sim.seed), sim);
    std::ostringstream long_csv;
    std::ostringstream summary;
    io::write_trajectory_csv(long_csv, traj);
    io::write_trajectory_summary_csv(summary, traj);
    ctx.write("trajectory.csv", long_csv.str());
    ctx.write("summary.csv", summary.str());
    const SpikeTrack track = track_spikes(traj);
    ctx.write("result.json", pretty({{"blew_up", traj.blew_up},
                                     {"blowup_time", traj.blowup_time},
                                     {"blowup_report", traj.blowup_report},
                                     {"spike_counts", track.counts}}));
    if (traj.blew_up) throw OutcomeFailure("blow-up at t = " + io::format_double(traj.blowup_time) + ": " +
                                           traj.blowup_report);
    ctx.out << "integrated to t = " << io::format_double(traj.times.back()) << ", final spike count "
            << track.counts.back() << '\n';
}

void run_continue(const json& cfg, RunContext& ctx) {
    const int n = cfg.at("n").get<int>();
    const auto param = continuation_parameter_from_string(cfg.at("parameter").get<std::string>());
    const double start = cfg.at("start").get<double>();
    const double end = cfg.at("end").get<double>();
    const std::string seed = cfg.at("seed").get<std::string>();

    LatticeParams base;
    LatticeState state;
    if (seed == "spikes") {
        base = LatticeParams{n, cfg.at("Du").get<double>(), 1.0, cfg.at("tau").get<double>()};
        if (param == ContinuationParameter::kappa) throw InvalidInput("spike seeds need parameter 'd' or 'Dv'");
        base = with_parameter(base, param, start);
        const double d = std::sqrt(base.D_v) / n;
        const auto c = pick_solution(numbers(cfg.at("positions")), d, cfg.at("solution").get<int>(), ctx.threads);
        state = refine_on_lattice(assemble_profile(c, n), base).state;
    } else if (seed == "mesa") {
        if (param != ContinuationParameter::kappa) throw InvalidInput("mesa seeds need parameter 'kappa'");
        const auto sol = mesa_profile(n, cfg.at("m").get<int>(), start, cfg.at("eps2").get<double>());
        base = sol.profile.params();
        state = sol.state;
    } else {
        throw InvalidInput("continue 'seed' must be 'spikes' or 'mesa'");
    }

    ContinuationOptions opt;
    opt.step0 = cfg.at("step0").get<double>();
    opt.max_points = cfg.at("max_points").get<int>();
    const Branch br = continue_branch(base, state, param, start, end, opt);

    std::ostringstream csv;
    io::write_branch_csv(csv, br);
    ctx.write("branch.csv", csv.str());
    if (cfg.at("archive_states").get<bool>()) {
        io::write_branch_states(ctx.dir / "states", br);
        ctx.artifacts.push_back("states/");
    }
    ctx.write("branch.json", pretty({{"parameter", std::string(to_string(param))},
                                     {"points", br.points.size()},
                                     {"folds", br.folds},
                                     {"stability_changes", br.stability_changes},
                                     {"truncated", br.truncated},
                                     {"diagnostic", br.diagnostic}}));
    ctx.out << br.points.size() << " points";
    for (double f : br.folds) ctx.out << ", fold at " << to_string(param) << " = " << io::format_double(f);
    ctx.out << '\n';
    if (br.truncated) ctx.err << "warning: " << br.diagnostic << '\n';
}

// Resumable grid: rows already present in the CSV are skipped, new rows are
// appended in grid order as soon as every earlier pending row is done.
void run_sweep(const json& cfg, RunContext& ctx) {
    const std::string kind = cfg.at("kind").get<std::string>();
    const int n = cfg.at("n").get<int>();

    std::string header;
    std::vector<std::string> keys;
    std::function<std::string(std::size_t)> compute;
    std::vector<double> Du;
    std::vector<int> Ks;
    if (kind == "exact") {
        header = "n,K,m,Dvc,sqrtDvc_over_m";
        Ks = cfg.at("K").get<std::vector<int>>();
        for (int K : Ks) {
            if (K < 1 || n % K != 0) throw InvalidInput("every K must divide n");
            keys.push_back(std::to_string(n) + "," + std::to_string(K));
        }
        compute = [&](std::size_t i) {
            std::ostringstream os;
            io::write_exact_sweep_csv(os, {{n, Ks[i], n / Ks[i], critical_Dv(n, Ks[i])}});
            std::string s = os.str();
            return s.substr(s.find('\n') + 1);
        };
    } else if (kind == "fold_kappa") {
        header = "D_u,kappa_f,reaches_dimple";
        Du = numbers(cfg.at("Du"));
        for (double x : Du) {
            if (!(x > 0.0)) throw InvalidInput("every Du must be positive");
            keys.push_back(io::format_double(x));
        }
        compute = [&](std::size_t i) {
            FoldScanOptions opt;
            opt.kappa_start = cfg.at("kappa_start").get<double>();
            opt.kappa_end = cfg.at("kappa_end").get<double>();
            const FoldScan scan = fold_scan_kappa({Du[i]}, n, opt);
            const auto& pt = scan.points.front();
            if (!pt.kappa_fold) throw ConvergenceFailure("no fold for D_u = " + keys[i] + ": " + pt.diagnostic, 0, 0.0);
            return keys[i] + "," + io::format_double(*pt.kappa_fold) + "," + (pt.reaches_dimple ? "1" : "0") + "\n";
        };
    } else {
        throw InvalidInput("sweep 'kind' must be 'exact' or 'fold_kappa'");
    }

    const fs::path csv_path = ctx.dir / "sweep.csv";
    std::set<std::string> done;
    if (fs::exists(csv_path)) {
        std::istringstream is(io::read_file(csv_path));
        std::string line;
        std::getline(is, line);
        if (line != header) throw InvalidInput("existing sweep.csv has an unexpected header");
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            const std::size_t cut = kind == "exact" ? line.find(',', line.find(',') + 1) : line.find(',');
            done.insert(line.substr(0, cut));
        }
    } else {
        io::write_file(csv_path, header + "\n");
    }
    ctx.artifacts.push_back("sweep.csv");

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (!done.count(keys[i])) pending.push_back(i);
    }
    std::vector<std::optional<std::string>> rows(pending.size());
    std::vector<std::string> failures(pending.size());
    std::size_t written = 0;
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    json completed = json::array();
    for (const auto& k : keys) {
        if (done.count(k)) completed.push_back(k);
    }
    auto flush = [&] {
        std::string chunk;
        while (written < pending.size() && (rows[written] || !failures[written].empty())) {
            if (rows[written]) {
                chunk += *rows[written];
                completed.push_back(keys[pending[written]]);
            }
            ++written;
        }
        if (chunk.empty()) return;
        io::write_file(csv_path, io::read_file(csv_path) + chunk);
    };
    auto work = [&] {
        for (std::size_t j = next++; j < pending.size(); j = next++) {
            std::optional<std::string> row;
            std::string failure;
            try {
                row = compute(pending[j]);
            } catch (const Error& e) {
                failure = e.what();
            }
            std::lock_guard lock(mu);
            failures[j] = row ? "" : (failure.empty() ? "unknown failure" : failure);
            rows[j] = std::move(row);
            flush();
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(ctx.threads, std::max<std::size_t>(pending.size(), 1)));
    if (threads == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    }

    ctx.extra["completed"] = completed;
    std::size_t failed = 0;
    for (std::size_t j = 0; j < pending.size(); ++j) {
        if (!failures[j].empty()) {
            ++failed;
            ctx.err << "grid point " << keys[pending[j]] << " failed: " << failures[j] << '\n';
        }
    }
    ctx.out << pending.size() - failed << " new row(s), " << done.size() << " skipped, " << failed << " failed\n";
    if (failed > 0) throw OutcomeFailure("some sweep grid points failed");
}

// ---------------------------------------------------------------- schema

const std::vector<Subcommand>& subcommands() {
    static const std::vector<Subcommand> subs = {
        {"construct",
         "Solve the reduced spike-height system and polish every solution on the lattice",
         {{"n", "int", 60, "number of lattice nodes"},
          {"d", "number", 0.2, "diffusion length (D_v = d^2 n^2)"},
          {"positions", "number[]", json::array({0.0, 0.5}), "spike positions in [0,1), on the node grid"},
          {"refine", "bool", true, "polish each solution on the full lattice"}},
         run_construct},
        {"stability",
         "Stability of a lattice state (dense eigensolve) or of reduced spike solutions",
         {{"mode", "string", "full", "'full' (lattice CSV) or 'reduced' (spike positions)"},
          {"state", "string", "", "lattice CSV (node,u,v) for mode 'full'"},
          {"Du", "number", 0.0, "activator diffusion"},
          {"Dv", "number", 0.0, "inhibitor diffusion; 0 means d^2 n^2"},
          {"d", "number", 0.2, "diffusion length"},
          {"tau", "number", 0.0, "inhibitor time constant"},
          {"positions", "number[]", json::array({0.0, 0.5}), "spike positions for mode 'reduced'"},
          {"marginal_tol", "number", kDefaultMarginalTol, "|max real part| below this is marginal"}},
         run_stability},
        {"threshold",
         "Critical diffusion length of the symmetric K-spike pattern",
         {{"K", "int", 2, "number of spikes"},
          {"l", "number", 0.0, "two-spike separation in (0, 1/2]; 0 means evenly spaced"}},
         run_threshold},
        {"exact",
         "Exact symmetric K-spike lattice solution and its spectrum",
         {{"n", "int", 60, "number of lattice nodes"},
          {"K", "int", 30, "number of spikes (divides n)"},
          {"Dv", "number", 1.0, "inhibitor diffusion"},
          {"dense_check", "bool", true, "also run the dense eigensolve"}},
         run_exact},
        {"mesa",
         "Mesa steady state of the small-D_u system and its stability",
         {{"n", "int", 49, "number of lattice nodes"},
          {"m", "int", 10, "plateau width"},
          {"kappa", "number", 5.0, "D_v / D_u"},
          {"eps2", "number", 0.001, "D_u"},
          {"branch", "int[]", json::array(), "root choices (+1/-1) for the tail recursion; empty means all -1"}},
         run_mesa},
        {"simulate",
         "Time integration from a lattice CSV or a refined spike state",
         {{"n", "int", 60, "number of lattice nodes"},
          {"Du", "number", 0.0, "activator diffusion"},
          {"Dv", "number", 0.0, "inhibitor diffusion; 0 means d^2 n^2"},
          {"d", "number", 0.2, "diffusion length"},
          {"tau", "number", 0.0, "inhibitor time constant"},
          {"initial", "string", "", "initial lattice CSV; empty means a refined spike state"},
          {"positions", "number[]", json::array({0.0, 0.5}), "spike positions when no initial CSV is given"},
          {"solution", "int", -1, "index into the sorted spike-height solutions; -1 means the most equal heights"},
          {"dt", "number", 1e-3, "time step"},
          {"t_end", "number", 200.0, "horizon"},
          {"mode", "string", "dae", "explicit, imex or dae"},
          {"sample_every", "int", 1000, "steps between stored samples"},
          {"seed", "int", 0, "noise seed"},
          {"perturb_amp", "number", 1e-3, "activator noise amplitude"},
          {"adaptive", "bool", false, "split steps that exceed the reaction stability limit"},
          {"classify", "bool", false, "classify stability instead of writing a trajectory"}},
         run_simulate},
        {"continue",
         "Pseudo-arclength continuation with fold detection",
         {{"n", "int", 60, "number of lattice nodes"},
          {"seed", "string", "spikes", "'spikes' or 'mesa'"},
          {"positions", "number[]", json::array({0.0, 0.5}), "spike positions for seed 'spikes'"},
          {"solution", "int", -1, "index into the sorted spike-height solutions; -1 means the most equal heights"},
          {"m", "int", 1, "plateau width for seed 'mesa'"},
          {"eps2", "number", 1e-3, "D_u for seed 'mesa'"},
          {"Du", "number", 0.0, "activator diffusion for seed 'spikes'"},
          {"tau", "number", 0.0, "inhibitor time constant"},
          {"parameter", "string", "d", "d, kappa or Dv"},
          {"start", "number", 0.2, "start value (the seed is converged here)"},
          {"end", "number", 0.35, "end value"},
          {"step0", "number", 0.0, "initial step; 0 means 1% of the range"},
          {"max_points", "int", 4000, "maximum number of branch points"},
          {"archive_states", "bool", true, "write every branch state to states/"}},
         run_continue},
        {"sweep",
         "Resumable parameter sweeps",
         {{"kind", "string", "exact", "'exact' (critical Dv over K) or 'fold_kappa' (fold over Du)"},
          {"n", "int", 60, "number of lattice nodes"},
          {"K", "int[]", json::array({2, 4, 6, 10, 12, 15, 20, 30}), "spike counts for kind 'exact'"},
          {"Du", "number[]", json::array({1e-3, 1e-2, 0.05, 0.1, 0.3, 1.0}), "D_u grid for kind 'fold_kappa'"},
          {"kappa_start", "number", 40.0, "upper end of the kappa continuation"},
          {"kappa_end", "number", 2.0, "lower end of the kappa continuation"}},
         run_sweep},
    };
    return subs;
}

// ---------------------------------------------------------------- parsing

json check_type(const KeySpec& k, const json& v) {
    auto bad = [&] { throw InvalidInput("key '" + k.name + "' must be of type " + k.type); };
    if (k.type == "int") {
        if (!v.is_number_integer()) bad();
    } else if (k.type == "number") {
        if (!v.is_number()) bad();
    } else if (k.type == "string") {
        if (!v.is_string()) bad();
    } else if (k.type == "bool") {
        if (!v.is_boolean()) bad();
    } else if (k.type == "int[]" || k.type == "number[]") {
        if (!v.is_array()) bad();
        for (const auto& e : v) {
            if (k.type == "int[]" ? !e.is_number_integer() : !e.is_number()) bad();
        }
    }
    return v;
}

json parse_flag(const KeySpec& k, const std::string& text) {
    auto parse_int = [&](const std::string& s) -> json {
        std::size_t pos = 0;
        long long x = 0;
        try {
            x = std::stoll(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != s.size()) throw InvalidInput("--" + k.name + ": '" + s + "' is not an integer");
        return x;
    };
    auto parse_num = [&](const std::string& s) -> json {
        std::size_t pos = 0;
        double x = 0.0;
        try {
            x = std::stod(s, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != s.size()) throw InvalidInput("--" + k.name + ": '" + s + "' is not a number");
        return x;
    };
    if (k.type == "int") return parse_int(text);
    if (k.type == "number") return parse_num(text);
    if (k.type == "string") return text;
    if (k.type == "bool") {
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        throw InvalidInput("--" + k.name + ": expected true or false");
    }
    json arr = json::array();
    if (!text.empty()) {
        std::istringstream is(text);
        std::string item;
        while (std::getline(is, item, ',')) arr.push_back(k.type == "int[]" ? parse_int(item) : parse_num(item));
    }
    return arr;
}

json resolve_config(const Subcommand& sub, const std::string& config_path,
                    const std::map<std::string, std::string>& flags) {
    json file = json::object();
    if (!config_path.empty()) {
        try {
            file = json::parse(io::read_file(config_path));
        } catch (const json::parse_error& e) {
            throw InvalidInput("config file is not valid JSON: " + std::string(e.what()));
        }
        if (!file.is_object()) throw InvalidInput("config file must hold a JSON object");
    }
    for (const auto& [key, _] : file.items()) {
        const bool known = std::any_of(sub.keys.begin(), sub.keys.end(), [&](const KeySpec& k) { return k.name == key; });
        if (!known) throw InvalidInput("unknown config key '" + key + "' for subcommand " + sub.name);
    }
    json cfg = json::object();
    for (const auto& k : sub.keys) {
        json v = k.def;
        if (file.contains(k.name)) v = file.at(k.name);
        if (auto it = flags.find(k.name); it != flags.end()) v = parse_flag(k, it->second);
        if (v.is_null()) throw InvalidInput("missing required key '" + k.name + "'");
        cfg[k.name] = check_type(k, v);
    }
    return cfg;
}

fs::path default_output_root() {
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return "gml-out";
}

}  // namespace

json config_schema() {
    json schema = json::object();
    for (const auto& sub : subcommands()) {
        json keys = json::object();
        for (const auto& k : sub.keys) keys[k.name] = {{"type", k.type}, {"default", k.def}, {"help", k.help}};
        schema[sub.name] = {{"description", sub.help}, {"keys", keys}};
    }
    return schema;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Localized patterns of the discrete Gierer-Meinhardt system on a cycle graph"};
    app.fallthrough();
    app.require_subcommand(0, 1);
    std::string out_dir;
    unsigned threads = 1;
    bool print_schema = false;
    app.add_option("--out", out_dir, std::string("output root (default $") + kOutputDirEnv + " or ./gml-out)");
    app.add_option("--threads", threads, "maximum worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--print-schema", print_schema, "print the config schema of every subcommand and exit");

    std::string config_path;
    std::map<std::string, std::map<std::string, std::string>> flag_values;
    std::map<std::string, CLI::App*> apps;
    for (const auto& sub : subcommands()) {
        CLI::App* s = app.add_subcommand(sub.name, sub.help);
        s->add_option("--config", config_path, "JSON config file (strict schema)");
        for (const auto& k : sub.keys) {
            const std::string def = k.def.is_null() ? "required" : k.def.dump();
            s->add_option("--" + k.name, flag_values[sub.name][k.name], k.help + " [" + k.type + ", default " + def + "]");
        }
        apps[sub.name] = s;
    }

    std::vector<std::string> argv_store{"gml"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitInvalid;
    }

    if (print_schema) {
        out << config_schema().dump(2) << '\n';
        return kExitOk;
    }
    const auto chosen = app.get_subcommands();
    if (chosen.empty()) {
        err << app.help();
        return kExitInvalid;
    }
    const std::string name = chosen.front()->get_name();
    const Subcommand& sub = *std::find_if(subcommands().begin(), subcommands().end(),
                                          [&](const Subcommand& s) { return s.name == name; });

    std::map<std::string, std::string> given;
    for (const auto& k : sub.keys) {
        if (apps[name]->count("--" + k.name) > 0) given[k.name] = flag_values[name][k.name];
    }

    try {
        const json cfg = resolve_config(sub, config_path, given);
        const fs::path root = out_dir.empty() ? default_output_root() : fs::path(out_dir);
        RunContext ctx{root / (name + "-" + hash_hex(name, cfg)), threads, out, err, {}, json::object()};
        int code = kExitOk;
        std::string failure;
        try {
            sub.handler(cfg, ctx);
        } catch (const OutcomeFailure& e) {
            code = kExitNumerical;
            failure = e.what();
        }
        json manifest = {{"tool", "gml"},
                         {"version", kVersion},
                         {"subcommand", name},
                         {"config", cfg},
                         {"config_hash", hash_hex(name, cfg)},
                         {"artifacts", ctx.artifacts}};
        for (const auto& [k, v] : ctx.extra.items()) manifest[k] = v;
        if (code != kExitOk) manifest["failure"] = failure;
        io::write_file(ctx.dir / "manifest.json", manifest.dump(2) + "\n");
        out << "outputs: " << ctx.dir.string() << '\n';
        if (code != kExitOk) err << "error: " << failure << '\n';
        return code;
    } catch (const InvalidInput& e) {
        err << "invalid input: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const NumericalFailure& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const nlohmann::json::exception& e) {
        err << "invalid input: " << e.what() << '\n';
        return kExitInvalid;
    }
}

}  // namespace gml::cli
