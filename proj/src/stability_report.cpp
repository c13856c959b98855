#include "gmlattice/stability_report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gmlattice/errors.hpp"

namespace gml {

std::string_view to_string(Stability s) noexcept {
    switch (s) {
        case Stability::stable: return "stable";
        case Stability::unstable: return "unstable";
        case Stability::marginal: return "marginal";
    }
    return "marginal";
}

Stability classify(double max_real, double marginal_tol) noexcept {
    if (max_real < -marginal_tol) return Stability::stable;
    if (max_real > marginal_tol) return Stability::unstable;
    return Stability::marginal;
}

StabilityReport StabilityReport::from_eigenvalues(std::vector<std::complex<double>> eigenvalues,
                                                  double marginal_tol) {
    if (eigenvalues.empty()) throw InvalidInput("empty spectrum");
    if (!(marginal_tol >= 0.0)) throw InvalidInput("marginal tolerance must be nonnegative");
    for (const auto& z : eigenvalues) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw NumericalFailure("eigensolver returned a non-finite eigenvalue");
    }
    // Descending real part; ties broken by imaginary part so the order is reproducible.
    std::sort(eigenvalues.begin(), eigenvalues.end(), [](const auto& a, const auto& b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    StabilityReport report;
    report.max_real = eigenvalues.front().real();
    report.eigenvalues = std::move(eigenvalues);
    report.marginal_tol = marginal_tol;
    report.classification = classify(report.max_real, marginal_tol);
    return report;
}

int StabilityReport::unstable_count() const noexcept {
    return static_cast<int>(std::count_if(eigenvalues.begin(), eigenvalues.end(),
                                          [&](const auto& z) { return z.real() > marginal_tol; }));
}

}  // namespace gml
