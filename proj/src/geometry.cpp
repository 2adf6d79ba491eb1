#include "heiscouple/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>

#include "heiscouple/errors.hpp"

namespace heis {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kSeriesCutoff = 1e-4;     // switch to series expansions below this angle
constexpr double kThetaMax = kPi - 1e-12;  // upper end of the bisection bracket
constexpr double kThetaTol = 1e-12;        // bisection tolerance on the angle
constexpr int kMaxBisect = 200;

double mu_series(double t) {
    const double t2 = t * t;
    return t * (2.0 / 3.0 +
                t2 * (4.0 / 45.0 +
                      t2 * (4.0 / 315.0 + t2 * (8.0 / 4725.0 + t2 * (4.0 / 18711.0)))));
}

double nu_series(double t) {
    return 1.0 + t * (-2.0 / 3.0 + t * (7.0 / 9.0 + t * (-82.0 / 135.0 + t * (43.0 / 81.0))));
}

void require_angle_domain(double theta, const char* fn) {
    if (!(theta >= 0.0) || !(theta < kPi)) {
        throw DomainError(std::string(fn) + ": angle " + std::to_string(theta) +
                          " outside [0, pi)");
    }
}

}  // namespace

GroupPoint multiply(const GroupPoint& p, const GroupPoint& q) noexcept {
    return {p.x + q.x, p.y + q.y, p.z + q.z + (p.x * q.y - q.x * p.y)};
}

GroupPoint inverse(const GroupPoint& p) noexcept { return {-p.x, -p.y, -p.z}; }

GroupPoint dilate(const GroupPoint& p, double r) noexcept {
    return {r * p.x, r * p.y, r * r * p.z};
}

double rho(const GroupPoint& p, const GroupPoint& q) noexcept {
    const double dx = q.x - p.x;
    const double dy = q.y - p.y;
    // Vertical coordinate of the group displacement p^{-1} * q; using the
    // displacement (rather than the bare difference q.z - p.z) is what makes
    // the pseudo-metric left-invariant.
    const double w = q.z - p.z - (p.x * q.y - q.x * p.y);
    return std::sqrt(dx * dx + dy * dy + std::abs(w));
}

PlanarRotation PlanarRotation::from_angle(double theta) noexcept {
    return {std::cos(theta), std::sin(theta)};
}

GroupPoint PlanarRotation::apply(const GroupPoint& p) const noexcept {
    return {c * p.x - s * p.y, s * p.x + c * p.y, p.z};
}

AlignedPair reduce_to_common_b1(const GroupPoint& p, const GroupPoint& q) noexcept {
    const double dx = q.x - p.x;
    const double dy = q.y - p.y;
    // Angle chosen so the rotated planar offset has zero first coordinate:
    // cos(th)*dx - sin(th)*dy == 0 for th = atan2(dx, dy).
    const PlanarRotation rot = PlanarRotation::from_angle(std::atan2(dx, dy));
    AlignedPair out{rot, rot.apply(p), rot.apply(q)};
    // The rotated offset is analytically (0, |(dx,dy)|); snap the residual
    // rounding so downstream code can rely on exact planar alignment.
    out.q.x = out.p.x;
    return out;
}

double mu(double theta) {
    require_angle_domain(theta, "mu");
    if (theta < kSeriesCutoff) return mu_series(theta);
    const double s = std::sin(theta);
    return theta / (s * s) - std::cos(theta) / s;
}

double nu(double theta) {
    require_angle_domain(theta, "nu");
    if (theta == 0.0) return 2.0;  // boundary value pinned by convention
    if (theta < kSeriesCutoff) return nu_series(theta);
    const double s = std::sin(theta);
    const double denom = theta + s * s - s * std::cos(theta);
    return theta * theta / denom;
}

double cc_distance(const GroupPoint& p, const GroupPoint& q) {
    const GroupPoint w = multiply(inverse(p), q);
    const double s = w.x * w.x + w.y * w.y;
    const double az = std::abs(w.z);
    if (s == 0.0 && az == 0.0) return 0.0;
    if (az == 0.0) return std::sqrt(2.0 * s);  // geodesic angle 0, nu(0) = 2

    // Bracket the root of f(th) = mu(th) * s - az on [0, theta_max].
    // f(0) = -az < 0.  If f stays negative at the upper end the planar part
    // is negligible against |z|; return the th -> pi limit.
    if (!(mu(kThetaMax) * s > az)) return std::sqrt(kPi * (s + az));

    double lo = 0.0;
    double hi = kThetaMax;
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < kMaxBisect; ++it) {
        mid = 0.5 * (lo + hi);
        if (mu(mid) * s - az < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < kThetaTol) {
            return std::sqrt(nu(0.5 * (lo + hi)) * (s + az));
        }
    }
    throw SolverError("cc_distance: bisection failed to converge");
}

const Band& cc_rho_band() {
    static Band band = [] {
        // Scan nu over the geodesic-angle range and include the pinned
        // boundary value nu(0) = 2; the ratio cc/rho equals sqrt(nu(angle)).
        constexpr int kGridPoints = 200000;
        double lo = 2.0;
        double hi = 2.0;
        for (int i = 1; i <= kGridPoints; ++i) {
            const double t = (kPi - 1e-9) * static_cast<double>(i) / kGridPoints;
            const double v = nu(t);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return Band{std::sqrt(lo), std::sqrt(hi)};
    }();
    return band;
}

}  // namespace heis
