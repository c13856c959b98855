#include "gmlattice/continuation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>
#include <utility>

#include "gmlattice/dynamics.hpp"
#include "gmlattice/errors.hpp"
#include "gmlattice/mesa.hpp"

namespace gml {

namespace {

// Minimum cosine between consecutive tangents; a sharper turn is taken as
// a jump to a neighbouring branch and the step is retried smaller.
constexpr double kMinTangentCosine = 0.8;

double max_of(const std::vector<double>& w) { return *std::max_element(w.begin(), w.end()); }

struct Tangent {
    Eigen::VectorXd x;  // scaled by 1/sx
    double p = 0.0;     // scaled by 1/sp
};

// Arclength geometry and residual evaluation for one continuation run.
class Problem {
public:
    Problem(const LatticeParams& base, ContinuationParameter param, double sx, double sp,
            const ContinuationOptions& opt)
        : base_(base), param_(param), n_(base.n), sx_(sx), sp_(sp), opt_(opt) {}

    LatticeParams at(double p) const { return with_parameter(base_, param_, p); }

    // Extended Jacobian [F_x F_p; tx/sx tp/sp].
    Eigen::MatrixXd bordered(const LatticeState& s, double p, const Tangent& t) const {
        const int N = 2 * n_;
        Eigen::MatrixXd A(N + 1, N + 1);
        A.topLeftCorner(N, N) = full_jacobian(at(p), s);
        A.col(N).setZero();
        const auto Lv = laplacian_apply(s.v);
        const double dD = dDv_dparameter(base_, param_, p);
        for (int k = 0; k < n_; ++k) A(n_ + k, N) = Lv[k] * dD;
        A.row(N).head(N) = t.x.transpose() / sx_;
        A(N, N) = t.p / sp_;
        return A;
    }

    static Eigen::VectorXd hint(const LatticeState& s, double p) {
        const Eigen::VectorXd x = s.stacked();
        Eigen::VectorXd h(x.size() + 1);
        h.head(x.size()) = x.cwiseAbs();
        h[x.size()] = std::abs(p);
        return h;
    }

    // Newton on F = 0 with the plane through (x_pred, p_pred) normal to t.
    bool correct(LatticeState& s, double& p, const Tangent& t, const Eigen::VectorXd& x_pred,
                 double p_pred) const {
        const int N = 2 * n_;
        Eigen::VectorXd x = s.stacked();
        for (int it = 0; it <= opt_.corrector_iterations; ++it) {
            LatticeState cur = LatticeState::from_stacked(x);
            const auto F = steady_residual(at(p), cur);
            double res = 0.0;
            for (double f : F) res = std::max(res, std::abs(f));
            const double g = t.x.dot(x - x_pred) / sx_ + t.p * (p - p_pred) / sp_;
            const double target = newton_target(at(p), cur, opt_.corrector_tolerance);
            if (res < target && std::abs(g) < 1e-10) {
                if (!(res < opt_.accept_residual)) return false;
                s = std::move(cur);
                return true;
            }
            if (it == opt_.corrector_iterations || !std::isfinite(res)) return false;
            Eigen::VectorXd rhs(N + 1);
            for (int i = 0; i < N; ++i) rhs[i] = -F[i];
            rhs[N] = -g;
            Eigen::VectorXd step;
            try {
                step = equilibrated_solve(bordered(cur, p, t), rhs, hint(cur, p));
            } catch (const NumericalFailure&) {
                return false;
            }
            x += step.head(N);
            p += step[N];
            for (int k = 0; k < n_; ++k) {
                if (!(x[n_ + k] > 0.0) || !std::isfinite(x[k])) return false;
            }
            if (!(p > 0.0) || !std::isfinite(p)) return false;
        }
        return false;
    }

    // Unit tangent at (s, p) oriented along `prev`.
    Tangent tangent(const LatticeState& s, double p, const Tangent& prev) const {
        const int N = 2 * n_;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N + 1);
        rhs[N] = 1.0;
        const Eigen::VectorXd z = equilibrated_solve(bordered(s, p, prev), rhs, hint(s, p));
        return normalized(z);
    }

    // Tangent of the parameterized branch x(p) at the start point.
    Tangent initial_tangent(const LatticeState& s, double p, double direction) const {
        const int N = 2 * n_;
        const Eigen::MatrixXd J = full_jacobian(at(p), s);
        Eigen::VectorXd Fp = Eigen::VectorXd::Zero(N);
        const auto Lv = laplacian_apply(s.v);
        const double dD = dDv_dparameter(base_, param_, p);
        for (int k = 0; k < n_; ++k) Fp[n_ + k] = Lv[k] * dD;
        const Eigen::VectorXd dx = equilibrated_solve(J, -Fp, s.stacked().cwiseAbs());
        Eigen::VectorXd z(N + 1);
        z.head(N) = dx;
        z[N] = 1.0;
        Tangent t = normalized(z);
        if (direction < 0.0) {
            t.x = -t.x;
            t.p = -t.p;
        }
        return t;
    }

    double sx() const { return sx_; }
    double sp() const { return sp_; }

private:
    Tangent normalized(const Eigen::VectorXd& z) const {
        const int N = 2 * n_;
        Tangent t;
        t.x = z.head(N) / sx_;
        t.p = z[N] / sp_;
        const double norm = std::sqrt(t.x.squaredNorm() + t.p * t.p);
        if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericalFailure("degenerate branch tangent");
        t.x /= norm;
        t.p /= norm;
        return t;
    }

    LatticeParams base_;
    ContinuationParameter param_;
    int n_;
    double sx_;
    double sp_;
    ContinuationOptions opt_;
};

BranchPoint make_point(const Problem& prob, const LatticeState& s, double p, const ContinuationOptions& opt) {
    BranchPoint bp;
    bp.parameter = p;
    bp.state = s;
    bp.max_u = max_of(s.u);
    const LatticeParams lp = prob.at(p);
    bp.residual = max_abs_residual(lp, s);
    const StabilityReport rep = pencil_spectrum(lp, s, opt.marginal_tol);
    bp.max_real = rep.max_real;
    bp.stable = rep.classification == Stability::stable;
    return bp;
}

struct FoldRefinement {
    std::optional<BranchPoint> point;
    double parameter = 0.0;
};

// Bisection in arclength between a (tangent ta) and a point ds further on
// whose tangent has the opposite parameter sign.
FoldRefinement refine_fold(const Problem& prob, const BranchPoint& a, const Tangent& ta, double ds,
                           double tp_b, double p_b, const ContinuationOptions& opt) {
    const double sign_a = ta.p > 0.0 ? 1.0 : -1.0;
    double lo = 0.0;
    double hi = ds;
    std::optional<BranchPoint> best;
    double best_p = a.parameter;
    const Eigen::VectorXd xa = a.state.stacked();
    const double tol = opt.fold_relative_tolerance * std::max(std::abs(a.parameter), 1e-12);
    bool failed = false;
    for (int it = 0; it < 60 && (hi - lo) * prob.sp() > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const Eigen::VectorXd x_pred = xa + mid * prob.sx() * ta.x;
        const double p_pred = a.parameter + mid * prob.sp() * ta.p;
        LatticeState s = LatticeState::from_stacked(x_pred);
        double p = p_pred;
        if (!prob.correct(s, p, ta, x_pred, p_pred)) {
            failed = true;
            break;
        }
        Tangent tm;
        try {
            tm = prob.tangent(s, p, ta);
        } catch (const NumericalFailure&) {
            failed = true;
            break;
        }
        if ((tm.p > 0.0 ? 1.0 : -1.0) == sign_a) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (!best || sign_a * (p - best_p) > 0.0) {
            best_p = p;
            best = make_point(prob, s, p, opt);
        }
    }
    FoldRefinement out;
    if (!failed && best) {
        out.point = std::move(best);
        out.point->fold = true;
        out.parameter = out.point->parameter;
        return out;
    }
    // Hermite estimate: dp/ds varies linearly between the two tangents.
    const double sigma = ds * ta.p / (ta.p - tp_b);
    out.parameter = a.parameter + 0.5 * prob.sp() * ta.p * sigma;
    const double edge = sign_a > 0.0 ? std::max(a.parameter, p_b) : std::min(a.parameter, p_b);
    if (!std::isfinite(out.parameter) || sign_a * (out.parameter - edge) < 0.0) out.parameter = edge;
    return out;
}

double point_segment_distance(double px, double py, double ax, double ay, double bx, double by, double& cx,
                              double& cy) {
    const double dx = bx - ax;
    const double dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    cx = ax + t * dx;
    cy = ay + t * dy;
    return std::hypot(px - cx, py - cy);
}

bool segments_intersect(double ax, double ay, double bx, double by, double cx, double cy, double dx, double dy,
                        double& ix, double& iy) {
    const double rx = bx - ax;
    const double ry = by - ay;
    const double sx = dx - cx;
    const double sy = dy - cy;
    const double den = rx * sy - ry * sx;
    if (den == 0.0) return false;
    const double t = ((cx - ax) * sy - (cy - ay) * sx) / den;
    const double u = ((cx - ax) * ry - (cy - ay) * rx) / den;
    if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) return false;
    ix = ax + t * rx;
    iy = ay + t * ry;
    return true;
}

}  // namespace

std::string_view to_string(ContinuationParameter p) noexcept {
    switch (p) {
        case ContinuationParameter::d: return "d";
        case ContinuationParameter::kappa: return "kappa";
        case ContinuationParameter::Dv: return "Dv";
    }
    return "d";
}

ContinuationParameter continuation_parameter_from_string(std::string_view name) {
    if (name == "d") return ContinuationParameter::d;
    if (name == "kappa") return ContinuationParameter::kappa;
    if (name == "Dv") return ContinuationParameter::Dv;
    throw InvalidInput("unknown continuation parameter '" + std::string(name) + "' (expected d, kappa or Dv)");
}

LatticeParams with_parameter(const LatticeParams& base, ContinuationParameter p, double value) {
    if (!(value > 0.0) || !std::isfinite(value)) throw InvalidInput("continuation parameter must be positive");
    LatticeParams out = base;
    switch (p) {
        case ContinuationParameter::d: out.D_v = value * value * base.n * base.n; break;
        case ContinuationParameter::kappa:
            if (!(base.D_u > 0.0)) throw InvalidInput("kappa continuation needs D_u > 0");
            out.D_v = value * base.D_u;
            break;
        case ContinuationParameter::Dv: out.D_v = value; break;
    }
    return out;
}

double parameter_value(const LatticeParams& params, ContinuationParameter p) {
    switch (p) {
        case ContinuationParameter::d: return std::sqrt(params.D_v) / params.n;
        case ContinuationParameter::kappa:
            if (!(params.D_u > 0.0)) throw InvalidInput("kappa is undefined for D_u = 0");
            return params.D_v / params.D_u;
        case ContinuationParameter::Dv: return params.D_v;
    }
    return params.D_v;
}

double dDv_dparameter(const LatticeParams& base, ContinuationParameter p, double value) {
    switch (p) {
        case ContinuationParameter::d: return 2.0 * value * base.n * base.n;
        case ContinuationParameter::kappa: return base.D_u;
        case ContinuationParameter::Dv: return 1.0;
    }
    return 1.0;
}

Branch continue_branch(const LatticeParams& params, const LatticeState& start, ContinuationParameter parameter,
                       double start_value, double end_value, const ContinuationOptions& options) {
    params.validate();
    start.validate();
    if (start.size() != params.n) throw InvalidInput("start state size does not match params.n");
    if (!std::isfinite(start_value) || !std::isfinite(end_value) || start_value == end_value)
        throw InvalidInput("continuation range must be finite and nonempty");
    if (!(options.min_step > 0.0) || !(options.growth >= 1.0) || options.max_points < 1)
        throw InvalidInput("invalid continuation step options");

    const LatticeParams p0 = with_parameter(params, parameter, start_value);
    const double r0 = max_abs_residual(p0, start);
    if (!(r0 < options.accept_residual)) {
        std::ostringstream os;
        os << "start state is not converged at " << to_string(parameter) << " = " << start_value << " (residual "
           << r0 << ")";
        throw InvalidInput(os.str());
    }

    const double width = std::abs(end_value - start_value);
    const double lo = std::min(start_value, end_value);
    const double hi = std::max(start_value, end_value);
    const double sx = std::max(start.stacked().cwiseAbs().maxCoeff(), 1e-300);
    const Problem prob(params, parameter, sx, width, options);

    const double ds_min = options.min_step / width;
    const double ds_max = options.max_step_fraction;
    double ds = std::clamp(options.step0 > 0.0 ? options.step0 / width : 0.01, ds_min, ds_max);
    const double flip_ds = options.flip_resolution;

    Branch branch;
    branch.parameter = parameter;
    branch.points.push_back(make_point(prob, start, start_value, options));
    Tangent t = prob.initial_tangent(start, start_value, end_value > start_value ? 1.0 : -1.0);

    int successes = 0;
    while (static_cast<int>(branch.points.size()) < options.max_points) {
        const BranchPoint& cur = branch.points.back();
        const Eigen::VectorXd x_pred = cur.state.stacked() + ds * sx * t.x;
        const double p_pred = cur.parameter + ds * width * t.p;

        LatticeState s = cur.state;
        bool ok = true;
        for (int k = 0; k < params.n && ok; ++k) ok = x_pred[params.n + k] > 0.0;
        if (ok) s = LatticeState::from_stacked(x_pred);
        double p = p_pred;
        ok = ok && p > 0.0 && prob.correct(s, p, t, x_pred, p_pred);

        Tangent t_new;
        if (ok) {
            try {
                t_new = prob.tangent(s, p, t);
                ok = t_new.x.dot(t.x) + t_new.p * t.p > kMinTangentCosine;
            } catch (const NumericalFailure&) {
                ok = false;
            }
        }
        if (!ok) {
            if (ds <= ds_min * (1.0 + 1e-12)) {
                std::ostringstream os;
                os << "corrector failed at minimum step near " << to_string(parameter) << " = " << cur.parameter;
                branch.truncated = true;
                branch.diagnostic = os.str();
                break;
            }
            ds = std::max(0.5 * ds, ds_min);
            successes = 0;
            continue;
        }
        if (p < lo - 1e-12 * width || p > hi + 1e-12 * width) break;

        BranchPoint next = make_point(prob, s, p, options);
        const bool fold = (t_new.p > 0.0) != (t.p > 0.0);
        if (next.stable != cur.stable && !fold) {
            if (ds > flip_ds && ds > ds_min) {
                ds = std::max(0.5 * ds, ds_min);
                successes = 0;
                continue;
            }
            branch.stability_changes.push_back(0.5 * (cur.parameter + p));
        }
        if (fold) {
            FoldRefinement fr = refine_fold(prob, cur, t, ds, t_new.p, p, options);
            branch.folds.push_back(fr.parameter);
            if (fr.point) {
                branch.points.push_back(std::move(*fr.point));
            } else {
                next.fold = true;
            }
        }
        branch.points.push_back(std::move(next));
        t = t_new;
        if (++successes >= options.successes_to_grow) {
            ds = std::min(ds * options.growth, ds_max);
            successes = 0;
        }
    }
    return branch;
}

BranchContact branch_contact(const Branch& a, const Branch& b, double tolerance) {
    if (a.points.empty() || b.points.empty()) throw InvalidInput("branch_contact needs nonempty branches");
    double scale = 0.0;
    for (const auto& q : a.points) scale = std::max(scale, q.max_u);
    for (const auto& q : b.points) scale = std::max(scale, q.max_u);
    if (!(scale > 0.0)) scale = 1.0;

    BranchContact best;
    best.distance = std::numeric_limits<double>::infinity();
    auto consider = [&](double dist, double x, double y) {
        if (dist < best.distance) {
            best.distance = dist;
            best.parameter = x;
            best.measure = y * scale;
        }
    };
    const auto& A = a.points;
    const auto& B = b.points;
    auto seg = [&](const std::vector<BranchPoint>& P, std::size_t i, std::size_t j, double& x0, double& y0,
                   double& x1, double& y1) {
        x0 = P[i].parameter;
        y0 = P[i].max_u / scale;
        x1 = P[j].parameter;
        y1 = P[j].max_u / scale;
    };
    const std::size_t na = A.size() > 1 ? A.size() - 1 : 1;
    const std::size_t nb = B.size() > 1 ? B.size() - 1 : 1;
    for (std::size_t i = 0; i < na; ++i) {
        double ax, ay, bx, by;
        seg(A, i, std::min(i + 1, A.size() - 1), ax, ay, bx, by);
        for (std::size_t j = 0; j < nb; ++j) {
            double cx, cy, dx, dy;
            seg(B, j, std::min(j + 1, B.size() - 1), cx, cy, dx, dy);
            double ix, iy;
            if (segments_intersect(ax, ay, bx, by, cx, cy, dx, dy, ix, iy)) {
                consider(0.0, ix, iy);
                continue;
            }
            double qx, qy;
            consider(point_segment_distance(ax, ay, cx, cy, dx, dy, qx, qy), ax, ay);
            consider(point_segment_distance(bx, by, cx, cy, dx, dy, qx, qy), bx, by);
            consider(point_segment_distance(cx, cy, ax, ay, bx, by, qx, qy), cx, cy);
            consider(point_segment_distance(dx, dy, ax, ay, bx, by, qx, qy), dx, dy);
        }
    }
    best.touching = best.distance <= tolerance;
    return best;
}

bool has_central_dimple(const LatticeState& state) {
    const int n = state.size();
    const auto nodes = spike_nodes(state);
    if (nodes.size() < 3 || static_cast<int>(nodes.size()) == n || count_runs(nodes, n) != 1) return false;
    // Walk the run in cyclic order starting from its first node.
    std::vector<bool> on(static_cast<std::size_t>(n), false);
    for (int k : nodes) on[k] = true;
    int first = nodes.front();
    while (on[(first + n - 1) % n]) first = (first + n - 1) % n;
    const int len = static_cast<int>(nodes.size());
    for (int i = 1; i + 1 < len; ++i) {
        const int k = (first + i) % n;
        const double left = state.u[(k + n - 1) % n];
        const double right = state.u[(k + 1) % n];
        if (state.u[k] < left && state.u[k] < right) return true;
    }
    return false;
}

namespace {

// One-spike state at the requested D_u and (close to) kappa_start. The
// leading-order profile is only accurate for kappa D_u << 1, so it is built
// at a small D_u and carried over by continuation in kappa and small
// refined steps in D_u.
std::pair<LatticeState, double> one_spike_start(int n, double Du, const FoldScanOptions& options) {
    constexpr double kSeedKappa = 8.0;
    constexpr double kSeedDu = 0.01;
    const double seed_Du = std::min(Du, kSeedDu);
    const MesaSolution seed = mesa_profile(n, 1, kSeedKappa, seed_Du);
    LatticeState state = seed.state;
    double kappa = kSeedKappa;
    if (options.kappa_start != kSeedKappa) {
        const Branch br = continue_branch(seed.profile.params(), seed.state, ContinuationParameter::kappa,
                                          kSeedKappa, options.kappa_start, options.continuation);
        state = br.points.back().state;
        kappa = br.points.back().parameter;
    }
    double current = seed_Du;
    double factor = 1.15;
    while (current < Du) {
        const double trial = std::min(Du, current * factor);
        try {
            state = refine_on_lattice(state, LatticeParams{n, trial, kappa * trial, 0.0}).state;
            current = trial;
        } catch (const NumericalFailure&) {
            factor = 1.0 + 0.5 * (factor - 1.0);
            if (factor < 1.001) throw;
        }
    }
    return {state, kappa};
}

}  // namespace

FoldScan fold_scan_kappa(const std::vector<double>& Du_grid, int n, const FoldScanOptions& options) {
    if (Du_grid.empty()) throw InvalidInput("fold scan grid is empty");
    for (double Du : Du_grid) {
        if (!(Du > 0.0) || !std::isfinite(Du)) throw InvalidInput("fold scan grid values must be positive");
    }
    if (!(options.kappa_start > options.kappa_end) || !(options.kappa_end > 0.0))
        throw InvalidInput("fold scan needs kappa_start > kappa_end > 0");

    FoldScan scan;
    scan.points.resize(Du_grid.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < Du_grid.size(); i = next++) {
            FoldScanPoint& out = scan.points[i];
            out.D_u = Du_grid[i];
            try {
                const auto [start, kappa] = one_spike_start(n, out.D_u, options);
                const LatticeParams base{n, out.D_u, kappa * out.D_u, 0.0};
                const Branch br = continue_branch(base, start, ContinuationParameter::kappa, kappa,
                                                  options.kappa_end, options.continuation);
                if (!br.folds.empty()) out.kappa_fold = br.folds.front();
                bool past = false;
                for (const auto& q : br.points) {
                    past = past || q.fold;
                    if (past && has_central_dimple(q.state)) {
                        out.reaches_dimple = true;
                        break;
                    }
                }
                if (br.truncated) out.diagnostic = br.diagnostic;
            } catch (const Error& e) {
                out.diagnostic = e.what();
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, Du_grid.size()));
    if (threads == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned k = 0; k < threads; ++k) pool.emplace_back(work);
    }

    std::vector<std::size_t> order(Du_grid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return Du_grid[x] < Du_grid[y]; });
    std::optional<double> prev;
    double prev_Du = 0.0;
    for (std::size_t i : order) {
        const auto& pt = scan.points[i];
        if (!pt.kappa_fold) {
            std::ostringstream os;
            os << "no fold found for D_u = " << pt.D_u;
            if (!pt.diagnostic.empty()) os << " (" << pt.diagnostic << ")";
            scan.warnings.push_back(os.str());
            continue;
        }
        if (prev && *pt.kappa_fold < *prev) {
            scan.monotone = false;
            std::ostringstream os;
            os << "fold kappa decreases from " << *prev << " (D_u = " << prev_Du << ") to " << *pt.kappa_fold
               << " (D_u = " << pt.D_u << ")";
            scan.warnings.push_back(os.str());
        }
        prev = pt.kappa_fold;
        prev_Du = pt.D_u;
    }
    return scan;
}

}  // namespace gml
