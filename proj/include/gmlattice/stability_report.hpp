#pragma once

#include <complex>
#include <string_view>
#include <vector>

namespace gml {

enum class Stability { stable, unstable, marginal };

std::string_view to_string(Stability s) noexcept;

inline constexpr double kDefaultMarginalTol = 1e-8;

/// Spectrum of a linearization together with its stability verdict.
///
/// `classification` is derived from `max_real`: stable when it is below
/// `-marginal_tol`, unstable above `+marginal_tol`, marginal in between.
/// Eigenvalues are stored in descending order of real part.
struct StabilityReport {
    std::vector<std::complex<double>> eigenvalues;
    double max_real = 0.0;
    Stability classification = Stability::marginal;
    double marginal_tol = kDefaultMarginalTol;

    static StabilityReport from_eigenvalues(std::vector<std::complex<double>> eigenvalues,
                                            double marginal_tol = kDefaultMarginalTol);

    /// Number of eigenvalues with real part above +marginal_tol.
    int unstable_count() const noexcept;
};

Stability classify(double max_real, double marginal_tol) noexcept;

}  // namespace gml
