#include "gmlattice/errors.hpp"

#include <sstream>

namespace gml {

namespace {

std::string domain_message(int node, double value) {
    std::ostringstream os;
    os << "inhibitor must be positive: v(" << node << ") = " << value;
    return os.str();
}

std::string convergence_message(const std::string& what, int iterations, double residual) {
    std::ostringstream os;
    os << what << " (iterations=" << iterations << ", last residual=" << residual << ")";
    return os.str();
}

}  // namespace

DomainError::DomainError(int node, double value)
    : InvalidInput(domain_message(node, value)), node_(node), value_(value) {}

ConvergenceFailure::ConvergenceFailure(const std::string& what, int iterations, double last_residual)
    : NumericalFailure(convergence_message(what, iterations, last_residual)),
      iterations_(iterations),
      last_residual_(last_residual) {}

Nonexistence::Nonexistence(const std::string& what, int step) : NumericalFailure(what), step_(step) {}

}  // namespace gml
