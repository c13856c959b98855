#include "gmlattice/greens.hpp"

#include <cmath>

#include "gmlattice/errors.hpp"

namespace gml::greens {

namespace {

void check_d(double d) {
    if (!(d > 0.0) || !std::isfinite(d)) throw InvalidInput("diffusion length d must be positive");
}

double wrap_unit(double x) {
    double r = std::fmod(x, 1.0);
    if (r < 0.0) r += 1.0;
    return r;
}

// 1 / (1 - exp(-2c)) for c > 0, accurate for small c as well.
double inv_one_minus_exp(double c) { return -1.0 / std::expm1(-2.0 * c); }

}  // namespace

double neumann(double x, double x0, double d) {
    check_d(d);
    if (!(x >= 0.0 && x <= 1.0 && x0 >= 0.0 && x0 <= 1.0))
        throw InvalidInput("Neumann Green's function needs positions in [0, 1]");
    const double lo = std::min(x, x0);
    const double hi = std::max(x, x0);
    // cosh(lo/d) cosh((1-hi)/d) / (d sinh(1/d)), expanded into decaying exponentials.
    const double a = lo / d;
    const double b = (1.0 - hi) / d;
    const double c = 1.0 / d;
    const double num = std::exp(a + b - c) + std::exp(a - b - c) + std::exp(b - a - c) +
                       std::exp(-a - b - c);
    return num * inv_one_minus_exp(c) / (2.0 * d);
}

double circle_separation(double x, double x0) {
    const double diff = std::abs(wrap_unit(x) - wrap_unit(x0));
    return std::min(diff, 1.0 - diff);
}

double periodic_at_separation(double l, double d) {
    check_d(d);
    if (!(l >= 0.0 && l <= 0.5)) throw InvalidInput("separation must lie in [0, 1/2]");
    // cosh(A)/sinh(B) with A = (1/2 - l)/d <= B = 1/(2d).
    const double A = (0.5 - l) / d;
    const double B = 0.5 / d;
    const double ratio = (std::exp(A - B) + std::exp(-A - B)) * inv_one_minus_exp(B);
    return ratio / (2.0 * d);
}

double periodic(double x, double x0, double d) {
    return periodic_at_separation(circle_separation(x, x0), d);
}

PeriodicDerivatives periodic_derivatives(double l, double d) {
    check_d(d);
    if (!(l > 0.0 && l <= 0.5))
        throw InvalidInput("periodic Green's derivatives need 0 < l <= 1/2");
    const double A = (0.5 - l) / d;
    const double B = 0.5 / d;
    const double inv = inv_one_minus_exp(B);
    const double cosh_ratio = (std::exp(A - B) + std::exp(-A - B)) * inv;
    // d/dl cosh((l - 1/2)/d) = sinh((l - 1/2)/d) / d = -sinh(A) / d.
    const double sinh_ratio = (std::exp(A - B) - std::exp(-A - B)) * inv;
    PeriodicDerivatives out;
    out.G = cosh_ratio / (2.0 * d);
    out.G_x = -sinh_ratio / (2.0 * d * d);
    out.G_xx = out.G / (d * d);
    return out;
}

}  // namespace gml::greens
