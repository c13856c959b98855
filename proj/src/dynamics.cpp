#include "gmlattice/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>

#include "gmlattice/errors.hpp"

namespace gml {

namespace {

// Forward Euler on a decay rate r is stable for dt * r < 2.
constexpr double kExplicitStabilityLimit = 2.0;

bool all_finite(const std::vector<double>& w) {
    return std::all_of(w.begin(), w.end(), [](double x) { return std::isfinite(x); });
}

// Advances one state by one time step; returns false on blow-up.
class Stepper {
public:
    Stepper(const LatticeParams& params, const SimConfig& cfg)
        : params_(params), cfg_(cfg), n_(params.n), scratch_(static_cast<std::size_t>(n_)),
          rhs_(static_cast<std::size_t>(n_)) {
        if (cfg.mode == StepMode::dae) v_solver_.emplace(n_, 1.0, params.D_v);
        prepare(cfg.dt);
    }

    // Makes v consistent with u in dae mode (the algebraic constraint).
    void initialize(LatticeState& s) const {
        if (cfg_.mode == StepMode::dae) solve_constraint(s);
    }

    bool step(LatticeState& s, std::string& report) {
        if (!cfg_.adaptive) {
            const double r = rate(s);
            if (cfg_.dt * r > kExplicitStabilityLimit) {
                std::ostringstream os;
                os << "time step too large: dt * rate = " << cfg_.dt * r << " exceeds " << kExplicitStabilityLimit;
                throw NumericalFailure(os.str());
            }
            return substep(s, cfg_.dt, report);
        }
        double remaining = cfg_.dt;
        while (remaining > 0.0) {
            const double r = rate(s);
            int pieces = 1;
            if (remaining * r > kAdaptiveLimit) pieces = static_cast<int>(std::ceil(remaining * r / kAdaptiveLimit));
            const double h = remaining / pieces;
            if (h < cfg_.min_dt) {
                // The reaction rate diverges: finite-time blow-up.
                std::ostringstream os;
                os << "reaction rate " << r << " needs a step below min_dt = " << cfg_.min_dt;
                report = os.str();
                return false;
            }
            if (!substep(s, h, report)) return false;
            remaining = pieces == 1 ? 0.0 : remaining - h;
        }
        return true;
    }

private:
    // Substeps keep dt * rate at half the forward Euler limit.
    static constexpr double kAdaptiveLimit = 1.0;

    void prepare(double h) {
        if (h == prepared_dt_ || cfg_.mode == StepMode::explicit_euler) return;
        if (params_.D_u > 0.0) u_solver_.emplace(n_, 1.0, h * params_.D_u);
        if (cfg_.mode == StepMode::imex) v_solver_.emplace(n_, params_.tau + h, h * params_.D_v);
        prepared_dt_ = h;
    }

    bool substep(LatticeState& s, double h, std::string& report) {
        prepare(h);
        switch (cfg_.mode) {
            case StepMode::explicit_euler: {
                const auto Lu = laplacian_apply(s.u);
                const auto Lv = laplacian_apply(s.v);
                for (int k = 0; k < n_; ++k) {
                    const double u = s.u[k];
                    const double v = s.v[k];
                    scratch_[k] = u + h * (params_.D_u * Lu[k] - u + u * u / v);
                    s.v[k] = v + h / params_.tau * (params_.D_v * Lv[k] - v + u * u);
                }
                s.u.swap(scratch_);
                break;
            }
            case StepMode::imex: {
                advance_activator(s, h);
                for (int k = 0; k < n_; ++k) rhs_[k] = params_.tau * s.v[k] + h * s.u[k] * s.u[k];
                v_solver_->solve(rhs_, s.v);
                break;
            }
            case StepMode::dae: {
                advance_activator(s, h);
                solve_constraint(s);
                break;
            }
        }
        return healthy(s, report);
    }

    void advance_activator(LatticeState& s, double h) {
        for (int k = 0; k < n_; ++k) {
            const double u = s.u[k];
            rhs_[k] = u + h * (-u + u * u / s.v[k]);
        }
        if (u_solver_) {
            u_solver_->solve(rhs_, s.u);
        } else {
            s.u = rhs_;
        }
    }

    void solve_constraint(LatticeState& s) const {
        std::vector<double> rhs(static_cast<std::size_t>(n_));
        for (int k = 0; k < n_; ++k) rhs[k] = s.u[k] * s.u[k];
        v_solver_->solve(rhs, s.v);
    }

    // Largest explicit rate: the reaction linearization, plus the explicit
    // diffusion and inhibitor relaxation in explicit mode.
    double rate(const LatticeState& s) const {
        double r = 0.0;
        for (int k = 0; k < n_; ++k) {
            if (s.v[k] > 0.0) r = std::max(r, std::abs(2.0 * s.u[k] / s.v[k] - 1.0));
        }
        if (cfg_.mode == StepMode::explicit_euler) {
            r += 4.0 * params_.D_u;
            r = std::max(r, (1.0 + 4.0 * params_.D_v) / params_.tau);
        }
        return r;
    }

    bool healthy(const LatticeState& s, std::string& report) const {
        if (!all_finite(s.u) || !all_finite(s.v)) {
            report = "non-finite state";
            return false;
        }
        for (int k = 0; k < n_; ++k) {
            if (!(s.v[k] > 0.0)) {
                std::ostringstream os;
                os << "inhibitor left the domain: v(" << k << ") = " << s.v[k];
                report = os.str();
                return false;
            }
        }
        return true;
    }

    LatticeParams params_;
    SimConfig cfg_;
    int n_;
    std::optional<CyclicDiffusionSolver> u_solver_;
    std::optional<CyclicDiffusionSolver> v_solver_;
    std::vector<double> scratch_;
    std::vector<double> rhs_;
    double prepared_dt_ = 0.0;
};

SampleDiagnostics diagnose(const LatticeParams& params, const LatticeState& s) {
    SampleDiagnostics d;
    d.max_u = *std::max_element(s.u.begin(), s.u.end());
    d.spike_nodes = spike_nodes(s);
    d.residual_norm = max_abs_residual(params, s);
    return d;
}

double max_deviation(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

long long step_count(const SimConfig& cfg) { return std::llround(std::ceil(cfg.t_end / cfg.dt - 1e-9)); }

}  // namespace

std::string_view to_string(StepMode mode) noexcept {
    switch (mode) {
        case StepMode::explicit_euler: return "explicit";
        case StepMode::imex: return "imex";
        case StepMode::dae: return "dae";
    }
    return "dae";
}

StepMode step_mode_from_string(std::string_view name) {
    if (name == "explicit") return StepMode::explicit_euler;
    if (name == "imex") return StepMode::imex;
    if (name == "dae") return StepMode::dae;
    throw InvalidInput("unknown step mode '" + std::string(name) + "' (expected explicit, imex or dae)");
}

std::string_view to_string(SimVerdict verdict) noexcept {
    switch (verdict) {
        case SimVerdict::stable: return "stable";
        case SimVerdict::unstable: return "unstable";
        case SimVerdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

void SimConfig::validate(const LatticeParams& params) const {
    params.validate();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("dt must be positive");
    if (!(t_end >= dt) || !std::isfinite(t_end)) throw InvalidInput("t_end must be at least dt");
    if (sample_every < 1) throw InvalidInput("sample_every must be at least 1");
    if (adaptive && !(min_dt > 0.0 && min_dt <= dt)) throw InvalidInput("min_dt must lie in (0, dt]");
    if (!(perturb_amp >= 0.0)) throw InvalidInput("perturb_amp must be nonnegative");
    if (mode == StepMode::dae && params.tau != 0.0) throw InvalidInput("dae mode requires tau = 0");
    if (mode == StepMode::explicit_euler && !(params.tau > 0.0))
        throw InvalidInput("explicit mode requires tau > 0 (use dae or imex for tau = 0)");
}

std::vector<int> spike_nodes(const LatticeState& state) {
    std::vector<int> out;
    if (state.u.empty()) return out;
    const double top = *std::max_element(state.u.begin(), state.u.end());
    if (!(top > 0.0)) return out;
    for (int k = 0; k < state.size(); ++k) {
        if (state.u[k] > 0.5 * top) out.push_back(k);
    }
    return out;
}

Trajectory integrate(const LatticeParams& params, const LatticeState& initial, const SimConfig& cfg) {
    cfg.validate(params);
    initial.validate();
    if (initial.size() != params.n) throw InvalidInput("initial state size does not match params.n");

    Stepper stepper(params, cfg);
    LatticeState s = initial;
    stepper.initialize(s);

    Trajectory traj;
    auto record = [&](double t) {
        traj.times.push_back(t);
        traj.diagnostics.push_back(diagnose(params, s));
        traj.states.push_back(s);
    };
    record(0.0);

    const long long steps = step_count(cfg);
    for (long long i = 1; i <= steps; ++i) {
        const double t = static_cast<double>(i) * cfg.dt;
        std::string report;
        if (!stepper.step(s, report)) {
            traj.blew_up = true;
            traj.blowup_time = t;
            traj.blowup_report = report;
            return traj;
        }
        if (i % cfg.sample_every == 0 || i == steps) record(t);
    }
    return traj;
}

LatticeState perturb_activator(const LatticeState& state, double amplitude, std::uint64_t seed) {
    LatticeState out = state;
    if (amplitude == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> noise(state.u.size());
    for (auto& x : noise) x = dist(rng);
    double mean = 0.0;
    for (double x : noise) mean += x;
    mean /= static_cast<double>(noise.size());
    double peak = 0.0;
    for (auto& x : noise) {
        x -= mean;
        peak = std::max(peak, std::abs(x));
    }
    if (peak == 0.0) return out;
    for (std::size_t k = 0; k < noise.size(); ++k) out.u[k] += amplitude * noise[k] / peak;
    return out;
}

SimClassification classify_by_simulation(const LatticeParams& params, const LatticeState& state,
                                         const SimConfig& cfg) {
    cfg.validate(params);
    if (!(cfg.perturb_amp > 0.0)) throw InvalidInput("classification needs perturb_amp > 0");
    const double res = max_abs_residual(params, state);
    if (!(res < 1e-9)) {
        std::ostringstream os;
        os << "classification needs a converged steady state (residual " << res << ")";
        throw InvalidInput(os.str());
    }

    Stepper stepper(params, cfg);
    LatticeState s = perturb_activator(state, cfg.perturb_amp, cfg.seed);
    stepper.initialize(s);

    SimClassification out;
    out.initial_deviation = max_deviation(s.u, state.u);
    const long long steps = step_count(cfg);
    for (long long i = 1; i <= steps; ++i) {
        std::string report;
        const double t = static_cast<double>(i) * cfg.dt;
        if (!stepper.step(s, report)) {
            out.verdict = SimVerdict::unstable;
            out.blew_up = true;
            out.decision_time = t;
            return out;
        }
        const double dev = max_deviation(s.u, state.u);
        out.final_deviation = dev;
        if (dev > 10.0 * out.initial_deviation) {
            out.verdict = SimVerdict::unstable;
            out.decision_time = t;
            return out;
        }
    }
    // Decay is only judged at the horizon: the fast -1 modes shrink the
    // deviation long before a weakly unstable mode becomes visible.
    out.decision_time = static_cast<double>(steps) * cfg.dt;
    if (out.final_deviation < 0.1 * out.initial_deviation) out.verdict = SimVerdict::stable;
    return out;
}

int count_runs(const std::vector<int>& nodes, int n) {
    if (nodes.empty()) return 0;
    if (static_cast<int>(nodes.size()) == n) return 1;
    std::vector<bool> on(static_cast<std::size_t>(n), false);
    for (int k : nodes) on[((k % n) + n) % n] = true;
    int runs = 0;
    for (int k = 0; k < n; ++k) {
        if (on[k] && !on[(k + n - 1) % n]) ++runs;
    }
    return runs;
}

SpikeTrack track_spikes(const Trajectory& trajectory) {
    if (trajectory.states.empty()) throw InvalidInput("trajectory has no samples");
    SpikeTrack track;
    for (const auto& s : trajectory.states) {
        auto nodes = spike_nodes(s);
        track.counts.push_back(count_runs(nodes, s.size()));
        track.nodes.push_back(std::move(nodes));
    }
    return track;
}

}  // namespace gml
