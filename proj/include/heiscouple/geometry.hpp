// Geometry of the three-dimensional Heisenberg group.
//
// Points are written in exponential coordinates (x, y, z) with group law
//   (x1,y1,z1) * (x2,y2,z2) = (x1+x2, y1+y2, z1+z2 + (x1*y2 - x2*y1)),
// identity (0,0,0) and inverse (-x,-y,-z).  Two left-invariant distances are
// provided: the square-root homogeneous quasi-distance `rho`, which is cheap
// and used throughout the coupling machinery, and the Carnot–Caratheodory
// distance `cc_distance`, evaluated through the classical one-parameter
// geodesic formula.  The two are equivalent; `cc_rho_band` reports the
// numeric range of their ratio.
#pragma once

#include <cstddef>

namespace heis {

/// A point of the group in exponential coordinates.
struct GroupPoint {
    double x{0.0};
    double y{0.0};
    double z{0.0};
};

/// Group identity (0, 0, 0).
constexpr GroupPoint identity() noexcept { return {0.0, 0.0, 0.0}; }

/// Group product p * q.
GroupPoint multiply(const GroupPoint& p, const GroupPoint& q) noexcept;

/// Group inverse (-x, -y, -z).
GroupPoint inverse(const GroupPoint& p) noexcept;

/// Anisotropic dilation (r*x, r*y, r^2*z); a group automorphism for r != 0.
GroupPoint dilate(const GroupPoint& p, double r) noexcept;

/// Left-invariant square-root quasi-distance
///   rho(p,q) = ( dx^2 + dy^2 + |z_q - z_p + x_p*y_q - y_p*x_q| )^(1/2).
double rho(const GroupPoint& p, const GroupPoint& q) noexcept;

/// Horizontal rotation about the z-axis; a group automorphism.
struct PlanarRotation {
    double c{1.0};  ///< cos(angle)
    double s{0.0};  ///< sin(angle)

    static PlanarRotation from_angle(double theta) noexcept;

    /// (x, y, z) -> (c*x - s*y, s*x + c*y, z).
    GroupPoint apply(const GroupPoint& p) const noexcept;
};

/// Result of aligning two starting points by a common rotation.
struct AlignedPair {
    PlanarRotation rotation;
    GroupPoint p;
    GroupPoint q;
};

/// Rotate both points by the same horizontal rotation so that their first
/// planar coordinates agree (p.x == q.x after rotation).  The rotation is an
/// automorphism, so every left-invariant quantity is preserved.
AlignedPair reduce_to_common_b1(const GroupPoint& p, const GroupPoint& q) noexcept;

/// Geodesic parameter function mu(t) = t/sin^2(t) - cot(t) on [0, pi).
/// Strictly increasing with mu(0) = 0 and mu(t) -> +inf as t -> pi-.
/// Evaluated by series below t = 1e-4.  Throws DomainError outside [0, pi).
double mu(double theta);

/// Geodesic scale function nu(t) = t^2 / (t + sin^2(t) - sin(t)cos(t)) on
/// [0, pi), with the boundary value pinned to nu(0) = 2 by convention.
/// Evaluated by series below t = 1e-4 (away from 0 itself).
/// Throws DomainError outside [0, pi).
double nu(double theta);

/// Carnot–Caratheodory distance: with w = p^{-1} q, s = w.x^2 + w.y^2 and
/// the geodesic angle th solving mu(th) * s = |w.z|,
///   cc(p,q) = sqrt( nu(th) * (s + |w.z|) ).
/// For w.z == 0 this reduces to sqrt(2 s); when the root lies beyond the
/// bracket (s vanishingly small against |w.z|) the th -> pi limit
/// sqrt(pi * (s + |w.z|)) is returned.  Root-finding is plain bisection on
/// [0, pi - 1e-12] with tolerance 1e-12 and at most 200 iterations.
double cc_distance(const GroupPoint& p, const GroupPoint& q);

/// Closed numeric range of the ratio cc_distance/rho over the group,
/// computed once at first use by scanning nu over a dense geodesic-angle
/// grid (and including the pinned boundary value nu(0) = 2).
struct Band {
    double lo{0.0};
    double hi{0.0};
};
const Band& cc_rho_band();

}  // namespace heis
