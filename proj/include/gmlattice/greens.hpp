#pragma once

namespace gml {

/// Green's functions of d^2 G'' - G = -delta(x - x0) on the unit interval.
///
/// All cosh/sinh ratios are evaluated through exponentials of non-positive
/// arguments, so d down to ~1e-3 is safe.
namespace greens {

/// Neumann ends (G'(0) = G'(1) = 0). Requires 0 <= x, x0 <= 1, d > 0.
double neumann(double x, double x0, double d);

/// Periodic (unit circle). Positions are reduced mod 1 first; the value
/// depends only on the wrap-around separation l = min(|x-x0|, 1-|x-x0|):
///     G(l) = cosh((l - 1/2)/d) / (2 d sinh(1/(2d))).
double periodic(double x, double x0, double d);

/// Same as `periodic` but takes the separation l in [0, 1/2] directly.
double periodic_at_separation(double l, double d);

/// Wrap-around separation of two positions on the unit circle, in [0, 1/2].
double circle_separation(double x, double x0);

struct PeriodicDerivatives {
    double G;     ///< value at separation l
    double G_x;   ///< derivative with respect to l
    double G_xx;  ///< second derivative, equals G / d^2 away from the source
};

/// Closed-form derivatives of the periodic Green's function with respect to
/// the separation. Requires 0 < l <= 1/2 (G_x jumps at l = 0).
PeriodicDerivatives periodic_derivatives(double l, double d);

}  // namespace greens
}  // namespace gml
