#include <cmath>
#include <vector>

#include "doctest.h"
#include "heiscouple/errors.hpp"
#include "heiscouple/geometry.hpp"
#include "heiscouple/rng.hpp"

using namespace heis;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

/// Deterministic batch of points with coordinates in [-2,2]^2 x [-4,4].
std::vector<GroupPoint> random_points(std::size_t n, std::uint64_t label_offset) {
    UniformStream u({2026, label_offset, kUSim, 0});
    std::vector<GroupPoint> pts;
    pts.reserve(n);
    std::uint64_t at = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = 4.0 * u.at(at++) - 2.0;
        const double y = 4.0 * u.at(at++) - 2.0;
        const double z = 8.0 * u.at(at++) - 4.0;
        pts.push_back({x, y, z});
    }
    return pts;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("group law: identity, inverse, associativity") {
    const GroupPoint e = identity();
    CHECK(e.x == 0.0);
    CHECK(e.y == 0.0);
    CHECK(e.z == 0.0);

    const GroupPoint p{1.0, 2.0, 3.0};
    const GroupPoint q{-0.5, 0.25, 1.0};
    const GroupPoint pq = multiply(p, q);
    // Cross term x1*y2 - x2*y1 = 1*0.25 - (-0.5)*2 = 1.25
    CHECK(pq.x == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(pq.y == doctest::Approx(2.25).epsilon(1e-15));
    CHECK(pq.z == doctest::Approx(5.25).epsilon(1e-15));

    const auto pts = random_points(2000, 1);
    for (std::size_t i = 0; i + 2 < pts.size(); i += 3) {
        const GroupPoint a = pts[i], b = pts[i + 1], c = pts[i + 2];
        const GroupPoint ab_c = multiply(multiply(a, b), c);
        const GroupPoint a_bc = multiply(a, multiply(b, c));
        CHECK(ab_c.x == doctest::Approx(a_bc.x).epsilon(1e-12));
        CHECK(ab_c.y == doctest::Approx(a_bc.y).epsilon(1e-12));
        CHECK(ab_c.z == doctest::Approx(a_bc.z).epsilon(1e-10));

        const GroupPoint ai = multiply(a, inverse(a));
        CHECK(std::abs(ai.x) <= 1e-15);
        CHECK(std::abs(ai.y) <= 1e-15);
        CHECK(std::abs(ai.z) <= 1e-12);
    }
}

TEST_CASE("rho: pinned values and metric basics") {
    const GroupPoint e = identity();
    CHECK(rho(e, {1.0, 1.0, 1.0}) == doctest::Approx(1.7320508075688773).epsilon(1e-14));
    CHECK(rho({0.7, -1.1, 0.4}, {1.7, -0.1, 1.4}) ==
          doctest::Approx(1.6733200530681511).epsilon(1e-14));
    CHECK(rho(e, e) == 0.0);

    const auto pts = random_points(600, 2);
    for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
        CHECK(rho(pts[i], pts[i + 1]) == doctest::Approx(rho(pts[i + 1], pts[i]))
                                             .epsilon(1e-12));
        CHECK(rho(pts[i], pts[i + 1]) >= 0.0);
    }
}

TEST_CASE("mu: pinned values, series window, monotone increasing") {
    CHECK(mu(0.001) == doctest::Approx(0.00066666675555556825).epsilon(1e-11));
    CHECK(mu(1.0) == doctest::Approx(0.77019031150306121).epsilon(1e-12));
    CHECK(mu(3.0) == doctest::Approx(157.65655763266073).epsilon(1e-10));
    CHECK(mu(0.0) == 0.0);

    // Series branch must join the direct formula smoothly near the switch:
    // straddle the cutoff with a tiny gap and demand near-continuity
    // (the slope there is about 2/3, so the true increment is ~1.3e-12).
    const double lo = 1e-4 * (1.0 - 1e-9), hi = 1e-4 * (1.0 + 1e-9);
    CHECK(mu(hi) > mu(lo));
    CHECK(mu(hi) - mu(lo) < 1e-9);

    double prev = mu(0.0);
    for (int i = 1; i <= 2000; ++i) {
        const double theta = (kPi - 1e-9) * static_cast<double>(i) / 2000.0;
        const double cur = mu(theta);
        CHECK(cur > prev);
        prev = cur;
    }

    CHECK_THROWS_AS(mu(-0.1), DomainError);
    CHECK_THROWS_AS(mu(kPi), DomainError);
}

TEST_CASE("nu: pinned values including the boundary convention") {
    CHECK(nu(0.0) == 2.0);  // exact boundary convention
    CHECK(nu(kPi / 4.0) == doctest::Approx(0.78539816339744831).epsilon(1e-15));
    CHECK(nu(1.0) == doctest::Approx(0.79781417752661202).epsilon(1e-12));
    CHECK(nu(0.5) == doctest::Approx(0.80876479851016838).epsilon(1e-12));
    CHECK(nu(kPi - 1e-8) == doctest::Approx(3.1415926335897932).epsilon(1e-9));

    // pi/4 is the interior minimum of nu on (0, pi).
    const double at_min = nu(kPi / 4.0);
    for (double theta : {0.05, 0.3, 0.6, 1.2, 1.8, 2.4, 3.0}) {
        CHECK(nu(theta) >= at_min);
    }

    CHECK_THROWS_AS(nu(-1.0), DomainError);
    CHECK_THROWS_AS(nu(kPi), DomainError);
}

TEST_CASE("cc distance: pinned values") {
    const GroupPoint e = identity();
    CHECK(cc_distance(e, e) == 0.0);
    CHECK(cc_distance(e, {1.0, 1.0, 1.0}) ==
          doctest::Approx(1.5369251616017419).epsilon(1e-9));
    CHECK(cc_distance(e, {0.3, -0.2, 0.05}) ==
          doctest::Approx(0.3796313976483168).epsilon(1e-9));
    CHECK(cc_distance(e, {2.0, 1.0, 0.5}) ==
          doctest::Approx(2.2444250858142201).epsilon(1e-9));
    // Planar displacement: cc = sqrt(2 (x^2 + y^2)).
    CHECK(cc_distance(e, {3.0, 4.0, 0.0}) ==
          doctest::Approx(std::sqrt(50.0)).epsilon(1e-12));
    // Purely vertical displacement: cc = sqrt(pi (s + |z|)) with s = 0.
    CHECK(cc_distance(e, {0.0, 0.0, 1.0}) ==
          doctest::Approx(1.7724538509055161).epsilon(1e-12));
    CHECK(cc_distance(e, {0.0, 0.0, 2.0}) ==
          doctest::Approx(std::sqrt(2.0 * kPi)).epsilon(1e-12));
}

TEST_CASE("left invariance of both distances") {
    const auto pts = random_points(900, 3);
    for (std::size_t i = 0; i + 2 < pts.size(); i += 3) {
        const GroupPoint g = pts[i], p = pts[i + 1], q = pts[i + 2];
        const GroupPoint gp = multiply(g, p), gq = multiply(g, q);
        CHECK(rho(gp, gq) == doctest::Approx(rho(p, q)).epsilon(1e-9));
        CHECK(cc_distance(gp, gq) == doctest::Approx(cc_distance(p, q)).epsilon(1e-9));
    }
}

TEST_CASE("dilations scale both distances by r (homogeneity)") {
    const auto pts = random_points(400, 4);
    UniformStream u({2026, 99, kUSim, 0});
    std::uint64_t at = 0;
    for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
        const double r = 0.25 + 2.0 * u.at(at++);
        const GroupPoint dp = dilate(pts[i], r), dq = dilate(pts[i + 1], r);
        CHECK(cc_distance(dp, dq) ==
              doctest::Approx(r * cc_distance(pts[i], pts[i + 1])).epsilon(1e-9));
        CHECK(rho(dp, dq) ==
              doctest::Approx(r * rho(pts[i], pts[i + 1])).epsilon(1e-9));
    }
}

TEST_CASE("planar rotations are isometries for cc and rho") {
    const auto pts = random_points(400, 5);
    UniformStream u({2026, 98, kUSim, 0});
    std::uint64_t at = 0;
    for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
        const PlanarRotation rot = PlanarRotation::from_angle(2.0 * kPi * u.at(at++));
        const GroupPoint rp = rot.apply(pts[i]), rq = rot.apply(pts[i + 1]);
        CHECK(cc_distance(rp, rq) ==
              doctest::Approx(cc_distance(pts[i], pts[i + 1])).epsilon(1e-9));
        CHECK(rho(rp, rq) == doctest::Approx(rho(pts[i], pts[i + 1])).epsilon(1e-9));
    }
}

TEST_CASE("reduce_to_common_b1 aligns first coordinates and preserves geometry") {
    const auto pts = random_points(300, 6);
    for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
        const AlignedPair al = reduce_to_common_b1(pts[i], pts[i + 1]);
        CHECK(al.p.x == al.q.x);  // exact snap
        CHECK(cc_distance(al.p, al.q) ==
              doctest::Approx(cc_distance(pts[i], pts[i + 1])).epsilon(1e-9));
        CHECK(rho(al.p, al.q) ==
              doctest::Approx(rho(pts[i], pts[i + 1])).epsilon(1e-9));
    }
}

TEST_CASE("cc/rho ratio lies in the proven band") {
    const Band& band = cc_rho_band();
    CHECK(band.lo == doctest::Approx(std::sqrt(kPi / 4.0)).epsilon(1e-6));
    CHECK(band.hi == doctest::Approx(std::sqrt(kPi)).epsilon(1e-6));

    const auto pts = random_points(10000, 7);
    for (std::size_t i = 0; i + 1 < pts.size(); i += 2) {
        const double r = rho(pts[i], pts[i + 1]);
        if (r <= 0.0) continue;
        const double ratio = cc_distance(pts[i], pts[i + 1]) / r;
        CHECK(ratio >= band.lo - 1e-9);
        CHECK(ratio <= band.hi + 1e-9);
    }
}

}  // TEST_SUITE
