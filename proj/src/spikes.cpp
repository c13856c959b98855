#include "gmlattice/spikes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "gmlattice/errors.hpp"
#include "gmlattice/greens.hpp"

namespace gml {

namespace {

constexpr double kGridTol = 1e-9;

SpikeConfiguration make_config(std::vector<double> positions, std::vector<double> heights, double d) {
    SpikeConfiguration c;
    c.positions = std::move(positions);
    c.heights = std::move(heights);
    c.d = d;
    return c;
}

struct GuessResult {
    bool converged = false;
    std::vector<double> heights;
    std::string reason;
};

GuessResult newton_heights(const Eigen::MatrixXd& G, Eigen::VectorXd V, const HeightSolveOptions& opt) {
    const Eigen::Index K = G.rows();
    for (int it = 0; it <= opt.max_iterations; ++it) {
        const Eigen::VectorXd F = V - G * V.cwiseAbs2();
        if (!F.allFinite()) return {false, {}, "non-finite iterate"};
        if (F.cwiseAbs().maxCoeff() < opt.tolerance) {
            // One extra step polishes the solution to rounding level.
            const Eigen::MatrixXd J = Eigen::MatrixXd::Identity(K, K) - 2.0 * G * V.asDiagonal();
            const Eigen::VectorXd polish = J.partialPivLu().solve(-F);
            if (polish.allFinite()) {
                const Eigen::VectorXd W = V + polish;
                if ((W - G * W.cwiseAbs2()).cwiseAbs().maxCoeff() <= F.cwiseAbs().maxCoeff()) V = W;
            }
            return {true, std::vector<double>(V.data(), V.data() + K), {}};
        }
        if (it == opt.max_iterations) break;
        const Eigen::MatrixXd J = Eigen::MatrixXd::Identity(K, K) - 2.0 * G * V.asDiagonal();
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
        if (!(lu.rcond() > 1e-14)) return {false, {}, "singular height Jacobian"};
        V += lu.solve(-F);
    }
    return {false, {}, "no convergence"};
}

bool same_heights(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (std::abs(a[k] - b[k]) > tol) return false;
    }
    return true;
}

void check_positions(const std::vector<double>& positions) {
    if (positions.empty()) throw InvalidInput("need at least one spike position");
    for (std::size_t k = 0; k < positions.size(); ++k) {
        const double x = positions[k];
        if (!(x >= 0.0 && x < 1.0)) throw InvalidInput("spike positions must lie in [0, 1)");
        if (k > 0 && !(x > positions[k - 1])) throw InvalidInput("spike positions must be strictly increasing");
    }
}

}  // namespace

Eigen::MatrixXd green_matrix(const std::vector<double>& positions, double d) {
    const auto K = static_cast<Eigen::Index>(positions.size());
    Eigen::MatrixXd G(K, K);
    for (Eigen::Index k = 0; k < K; ++k) {
        for (Eigen::Index j = 0; j < K; ++j) G(k, j) = greens::periodic(positions[k], positions[j], d);
    }
    return G;
}

void SpikeConfiguration::validate() const {
    check_positions(positions);
    if (heights.size() != positions.size()) throw InvalidInput("need one height per spike position");
    if (!(d > 0.0)) throw InvalidInput("diffusion length d must be positive");
    for (double h : heights) {
        if (!(h > 0.0) || !std::isfinite(h)) throw InvalidInput("spike heights must be positive");
    }
}

double SpikeConfiguration::residual_norm() const {
    const Eigen::MatrixXd G = green_matrix(positions, d);
    const Eigen::Map<const Eigen::VectorXd> V(heights.data(), static_cast<Eigen::Index>(heights.size()));
    return (V - G * V.cwiseAbs2()).cwiseAbs().maxCoeff();
}

TwoSpikeCoefficients TwoSpikeCoefficients::at(double l, double d) {
    if (!(l > 0.0 && l <= 0.5)) throw InvalidInput("two-spike separation must lie in (0, 1/2]");
    return {greens::periodic_at_separation(0.0, d), greens::periodic_at_separation(l, d), l};
}

std::vector<double> even_positions(int K) {
    if (K < 1) throw InvalidInput("spike count must be positive");
    std::vector<double> x(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) x[k] = static_cast<double>(k) / K;
    return x;
}

std::vector<std::vector<double>> default_height_guesses(const std::vector<double>& positions, double d) {
    check_positions(positions);
    const Eigen::MatrixXd G = green_matrix(positions, d);
    const auto K = static_cast<int>(positions.size());
    std::vector<double> base(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) base[k] = 1.0 / G.row(k).sum();
    std::vector<std::vector<double>> guesses{base};
    if (K <= 6) {
        for (unsigned mask = 0; mask < (1u << K); ++mask) {
            std::vector<double> g = base;
            for (int k = 0; k < K; ++k) g[k] *= (mask >> k) & 1u ? 1.3 : 0.7;
            guesses.push_back(std::move(g));
        }
        // Large spikes on the subset `mask` see only each other; a small
        // spike solves V = a V^2 + c with c the forcing from the large ones.
        for (unsigned mask = 1; mask + 1 < (1u << K); ++mask) {
            std::vector<double> g(static_cast<std::size_t>(K));
            for (int k = 0; k < K; ++k) {
                if (!((mask >> k) & 1u)) continue;
                double row = 0.0;
                for (int j = 0; j < K; ++j) row += (mask >> j) & 1u ? G(k, j) : 0.0;
                g[k] = 1.0 / row;
            }
            for (int k = 0; k < K; ++k) {
                if ((mask >> k) & 1u) continue;
                double c = 0.0;
                for (int j = 0; j < K; ++j) c += (mask >> j) & 1u ? g[j] * g[j] * G(k, j) : 0.0;
                const double disc = 1.0 - 4.0 * G(k, k) * c;
                g[k] = disc >= 0.0 ? 2.0 * c / (1.0 + std::sqrt(disc)) : 0.5 / G(k, k);
            }
            guesses.push_back(std::move(g));
        }
    }
    return guesses;
}

HeightSolveOutcome solve_heights(const std::vector<double>& positions, double d,
                                 const std::vector<std::vector<double>>& guesses,
                                 const HeightSolveOptions& options, int threads) {
    check_positions(positions);
    if (!(d > 0.0)) throw InvalidInput("diffusion length d must be positive");
    if (guesses.empty()) throw InvalidInput("solve_heights needs at least one guess");
    const auto K = static_cast<Eigen::Index>(positions.size());
    for (const auto& g : guesses) {
        if (static_cast<Eigen::Index>(g.size()) != K) throw InvalidInput("guess length must equal spike count");
    }
    const Eigen::MatrixXd G = green_matrix(positions, d);

    std::vector<GuessResult> results(guesses.size());
    auto work = [&](std::size_t begin, std::size_t stride) {
        for (std::size_t i = begin; i < guesses.size(); i += stride) {
            results[i] = newton_heights(G, Eigen::Map<const Eigen::VectorXd>(guesses[i].data(), K), options);
        }
    };
    const auto workers = static_cast<std::size_t>(std::clamp<int>(threads, 1, static_cast<int>(guesses.size())));
    if (workers == 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    }

    HeightSolveOutcome out;
    std::vector<std::vector<double>> found;
    for (std::size_t i = 0; i < results.size(); ++i) {
        auto& r = results[i];
        if (!r.converged) {
            out.failures.push_back({static_cast<int>(i), r.reason});
            continue;
        }
        const bool degenerate = std::any_of(r.heights.begin(), r.heights.end(),
                                            [&](double h) { return h <= options.degenerate_height; });
        if (degenerate) continue;
        const bool duplicate = std::any_of(found.begin(), found.end(), [&](const auto& f) {
            return same_heights(f, r.heights, options.dedup_tolerance);
        });
        if (!duplicate) found.push_back(std::move(r.heights));
    }
    std::sort(found.begin(), found.end());
    for (auto& h : found) out.solutions.push_back(make_config(positions, std::move(h), d));
    return out;
}

double two_spike_discriminant(double l, double d) {
    const auto c = TwoSpikeCoefficients::at(l, d);
    return c.a * c.a - 2.0 * c.a * c.b - 3.0 * c.b * c.b;
}

std::vector<SpikeConfiguration> two_spike_closed_form(double l, double d) {
    const auto [a, b, sep] = TwoSpikeCoefficients::at(l, d);
    const std::vector<double> positions{0.0, sep};
    std::vector<SpikeConfiguration> out;
    const double V = 1.0 / (a + b);
    out.push_back(make_config(positions, {V, V}, d));
    const double disc = a * a - 2.0 * a * b - 3.0 * b * b;
    if (disc >= 0.0) {
        const double root = std::sqrt(disc);
        const double denom = 2.0 * (a + b) * (a - b);
        const double hi = (a + b + root) / denom;
        const double lo = (a + b - root) / denom;
        out.push_back(make_config(positions, {hi, lo}, d));
        out.push_back(make_config(positions, {lo, hi}, d));
    }
    return out;
}

double three_spike_discriminant(double d) {
    const double a = greens::periodic_at_separation(0.0, d);
    const double b = greens::periodic_at_separation(1.0 / 3.0, d);
    return a * a - 2.0 * a * b - 7.0 * b * b;
}

std::vector<SpikeConfiguration> three_spike_even_closed_form(double d) {
    const double a = greens::periodic_at_separation(0.0, d);
    const double b = greens::periodic_at_separation(1.0 / 3.0, d);
    const auto positions = even_positions(3);
    std::vector<SpikeConfiguration> out;
    const double V = 1.0 / (a + 2.0 * b);
    out.push_back(make_config(positions, {V, V, V}, d));
    const double disc = a * a - 2.0 * a * b - 7.0 * b * b;
    if (disc >= 0.0) {
        const double root = std::sqrt(disc);
        const double denom = 2.0 * (a + 2.0 * b) * (a - b);
        for (double sign : {1.0, -1.0}) {
            const double odd = (a + 3.0 * b + sign * root) / denom;
            const double pair = (a + b - sign * root) / denom;
            // The odd spike at each of the three sites.
            out.push_back(make_config(positions, {odd, pair, pair}, d));
            out.push_back(make_config(positions, {pair, odd, pair}, d));
            out.push_back(make_config(positions, {pair, pair, odd}, d));
        }
    }
    return out;
}

LatticeParams spike_regime_params(int n, double d) {
    LatticeParams p;
    p.n = n;
    p.D_u = 0.0;
    p.D_v = d * d * static_cast<double>(n) * static_cast<double>(n);
    p.tau = 0.0;
    p.validate();
    return p;
}

LatticeState assemble_profile(const SpikeConfiguration& config, int n) {
    config.validate();
    if (n < 3) throw InvalidInput("cycle needs at least 3 nodes");
    const double nd = static_cast<double>(n);
    std::vector<int> nodes;
    for (int k = 0; k < config.K(); ++k) {
        const double grid = config.positions[k] * nd;
        const double node = std::round(grid);
        if (std::abs(grid - node) > kGridTol) {
            std::ostringstream os;
            os << "spike " << k << " at x = " << config.positions[k] << " is not on the " << n << "-node grid";
            throw InvalidInput(os.str());
        }
        nodes.push_back(static_cast<int>(node) % n);
    }
    LatticeState s = LatticeState::homogeneous(n, 0.0, 0.0);
    for (int j = 0; j < n; ++j) {
        double v = 0.0;
        for (int k = 0; k < config.K(); ++k) {
            const double V = config.heights[k];
            v += nd * V * V * greens::periodic(j / nd, config.positions[k], config.d);
        }
        s.v[j] = v;
    }
    for (int k = 0; k < config.K(); ++k) s.u[nodes[k]] = nd * config.heights[k];
    return s;
}

}  // namespace gml
