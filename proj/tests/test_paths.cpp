#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "doctest.h"
#include "heiscouple/errors.hpp"
#include "heiscouple/grid.hpp"
#include "heiscouple/paths.hpp"
#include "heiscouple/rng.hpp"

using namespace heis;

namespace {

/// Two-sample Kolmogorov-Smirnov statistic (both samples sorted internally).
double two_sample_ks(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    // Evaluate |F_a - F_b| only after consuming every entry tied at the
    // current value from both samples; measuring mid-tie inflates the
    // statistic on atomic distributions.
    while (i < a.size() || j < b.size()) {
        double v;
        if (i < a.size() && j < b.size()) {
            v = std::min(a[i], b[j]);
        } else {
            v = i < a.size() ? a[i] : b[j];
        }
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na -
                                 static_cast<double>(j) / nb));
    }
    return d;
}

}  // namespace

TEST_SUITE("paths") {

TEST_CASE("sample_bm: start, grid and increment law") {
    const TimeGrid grid{2.0, 0.25, 16};
    NormalStream ns({5, 0, kSimB1, 0});
    const NormalStream pos({5, 0, kSimB1, 0});
    const ScalarPath b = sample_bm(grid, 1.5, ns);
    REQUIRE(b.values.size() == 17);
    CHECK(b.grid == grid);
    CHECK(b.values[0] == 1.5);
    const double sdt = std::sqrt(0.25);
    for (std::size_t i = 0; i < 16; ++i) {
        CHECK(b.values[i + 1] - b.values[i] ==
              doctest::Approx(sdt * pos.at(i)).epsilon(1e-14));
    }
}

TEST_CASE("bridge: endpoints exactly zero, pinned variance and covariance") {
    const TimeGrid grid{0.0, 1.0 / 256.0, 256};  // T = 1
    const std::size_t n = 20000;
    double s_half = 0.0, s2_half = 0.0, s_quart = 0.0, s_cross = 0.0;
    NormalStream ns({77, 0, kBridgeDyadic, 0});
    for (std::size_t k = 0; k < n; ++k) {
        const ScalarPath br = sample_bridge(grid, ns);
        CHECK(br.values.front() == 0.0);
        CHECK(br.values.back() == 0.0);
        const double h = br.values[128];  // u = T/2
        const double q = br.values[64];   // u = T/4
        s_half += h;
        s2_half += h * h;
        s_quart += q;
        s_cross += h * q;
    }
    const double nn = static_cast<double>(n);
    const double var_half = s2_half / nn - (s_half / nn) * (s_half / nn);
    const double cov = s_cross / nn - (s_half / nn) * (s_quart / nn);
    // Var br(T/2) = T/4, Cov(br(T/4), br(T/2)) = T/8 for T = 1.
    CHECK(std::abs(var_half - 0.25) < 4.0 * 0.25 * std::sqrt(2.0 / nn));
    CHECK(std::abs(cov - 0.125) < 0.01);
}

TEST_CASE("kl_basis: closed-form pins and domain errors") {
    CHECK(kl_basis(1.0, 1, 0.5) ==
          doctest::Approx(0.45015815807855303).epsilon(1e-15));  // sqrt(2)/pi
    CHECK(kl_basis(4.0, 2, 1.0) ==
          doctest::Approx(0.22507907903927652).epsilon(1e-15));  // sqrt(2)/(2 pi)
    CHECK(kl_basis(1.0, 1, 0.0) == 0.0);
    CHECK(std::abs(kl_basis(1.0, 3, 1.0)) < 1e-15);
    CHECK_THROWS_AS(kl_basis(1.0, 0, 0.5), DomainError);
    CHECK_THROWS_AS(kl_basis(-1.0, 1, 0.5), DomainError);
    CHECK_THROWS_AS(kl_basis(1.0, 1, 2.0), DomainError);
}

TEST_CASE("kl_project recovers coefficients of synthetic bridges") {
    const double T = 4.0;
    const TimeGrid grid{1.0, T / 4096.0, 4096};
    ScalarPath br;
    br.grid = grid;
    br.values.resize(grid.steps + 1);
    const double c1 = 0.8, c3 = -1.7;
    for (std::size_t i = 0; i <= grid.steps; ++i) {
        const double u = static_cast<double>(i) * grid.dt;
        br.values[i] = std::sqrt(T) * (c1 * kl_basis(T, 1, u) + c3 * kl_basis(T, 3, u));
    }
    CHECK(kl_project(br, 1) == doctest::Approx(c1).epsilon(1e-4));
    CHECK(kl_project(br, 3) == doctest::Approx(c3).epsilon(1e-4));
    CHECK(std::abs(kl_project(br, 2)) < 1e-4);
    CHECK_THROWS_AS(kl_project(br, 0), DomainError);
}

TEST_CASE("replace_first_kl: surgical exchange of the first coefficient") {
    const TimeGrid grid{3.0, 4.0 / 2048.0, 2048};  // T = 4 starting at t0 = 3
    NormalStream ns({13, 4, kBridgeDyadic, 2});
    const ScalarPath br = sample_bridge(grid, ns);
    const double z2_before = kl_project(br, 2);
    const double z5_before = kl_project(br, 5);

    const double target = 0.7;
    const ScalarPath out = replace_first_kl(br, target);
    REQUIRE(out.values.size() == br.values.size());
    CHECK(out.values.front() == 0.0);
    CHECK(out.values.back() == 0.0);
    CHECK(kl_project(out, 1) == doctest::Approx(target).epsilon(1e-6));
    // Higher coefficients are untouched (the correction is a pure first mode).
    CHECK(kl_project(out, 2) == doctest::Approx(z2_before).epsilon(1e-6));
    CHECK(kl_project(out, 5) == doctest::Approx(z5_before).epsilon(1e-6));
}

TEST_CASE("assemble_bm inverts the bridge decomposition") {
    const TimeGrid grid{7.0, 8.0 / 512.0, 512};
    NormalStream ns({21, 9, kSimB2, 1});
    const ScalarPath b = sample_bm(grid, -2.5, ns);
    // Rebuild the bridge by hand and reassemble.
    ScalarPath br;
    br.grid = grid;
    br.values.resize(grid.steps + 1);
    const double inc = b.values.back() - b.values.front();
    for (std::size_t i = 0; i <= grid.steps; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(grid.steps);
        br.values[i] = b.values[i] - b.values.front() - frac * inc;
    }
    const ScalarPath back = assemble_bm(b.values.front(), br, inc);
    for (std::size_t i = 0; i <= grid.steps; ++i) {
        CHECK(back.values[i] == doctest::Approx(b.values[i]).epsilon(1e-12));
    }
}

TEST_CASE("ito_integral: deterministic refinement order is ~1") {
    // f = sin(u), g = cos(u) on [0,1]: exact integral of sin d(cos) is
    // -(1/2)(1 - sin(2)/2) = sin(2)/4 - 1/2.
    const double exact = std::sin(2.0) / 4.0 - 0.5;
    std::vector<double> errs;
    for (std::size_t steps : {256, 512, 1024, 2048}) {
        const TimeGrid grid{0.0, 1.0 / static_cast<double>(steps), steps};
        ScalarPath f, g;
        f.grid = g.grid = grid;
        f.values.resize(steps + 1);
        g.values.resize(steps + 1);
        for (std::size_t i = 0; i <= steps; ++i) {
            const double u = grid.node(i);
            f.values[i] = std::sin(u);
            g.values[i] = std::cos(u);
        }
        errs.push_back(std::abs(ito_integral(f, g) - exact));
    }
    for (std::size_t k = 0; k + 1 < errs.size(); ++k) {
        const double order = std::log2(errs[k] / errs[k + 1]);
        CHECK(order >= 0.9);
    }

    ScalarPath empty;
    CHECK_THROWS_AS(ito_integral(empty, empty), EmptyInputError);
    ScalarPath other;
    other.grid = TimeGrid{0.0, 0.5, 2};
    other.values = {0.0, 1.0, 2.0};
    ScalarPath mism;
    mism.grid = TimeGrid{0.0, 0.25, 2};
    mism.values = {0.0, 1.0, 2.0};
    CHECK_THROWS_AS(ito_integral(other, mism), GridMismatchError);
}

TEST_CASE("levy_area matches explicit left-point sums") {
    const TimeGrid grid{0.0, 1.0 / 128.0, 128};
    NormalStream n1({31, 2, kSimB1, 0});
    NormalStream n2({31, 2, kSimB2, 0});
    const ScalarPath b1 = sample_bm(grid, 0.4, n1);
    const ScalarPath b2 = sample_bm(grid, -0.9, n2);
    const ScalarPath x3 = levy_area(b1, b2, 5.0);
    REQUIRE(x3.values.size() == 129);
    CHECK(x3.values[0] == 5.0);
    double acc = 5.0;
    for (std::size_t i = 0; i < 128; ++i) {
        acc += b1.values[i] * (b2.values[i + 1] - b2.values[i]) -
               b2.values[i] * (b1.values[i + 1] - b1.values[i]);
        CHECK(x3.values[i + 1] == doctest::Approx(acc).epsilon(1e-13));
    }
}

TEST_CASE("lambda_functional: zero start and exact first-mode identity") {
    const double T = 4.0;
    const TimeGrid grid{3.0, T / 1024.0, 1024};
    NormalStream ns({47, 6, kB1Dyadic, 1});
    const ScalarPath b1 = sample_bm(grid, 0.3, ns);
    const ScalarPath lam = lambda_functional(b1);
    REQUIRE(lam.values.size() == b1.values.size());
    CHECK(lam.values.front() == 0.0);
    CHECK(lam.grid == b1.grid);
    // Left-point sum of the first basis mode against dB1 equals lambda_end/2.
    double manual = 0.0;
    for (std::size_t i = 0; i < grid.steps; ++i) {
        const double u = static_cast<double>(i) * grid.dt;
        manual += kl_basis(T, 1, u) * (b1.values[i + 1] - b1.values[i]);
    }
    CHECK(manual == doctest::Approx(0.5 * lam.values.back()).epsilon(1e-12));
}

TEST_CASE("first_crossing: deterministic geometry") {
    UniformStream u({1, 1, kUReflect, 0});
    ScalarPath w;
    w.grid = TimeGrid{10.0, 0.5, 2};
    w.values = {0.0, 2.0, 3.0};
    const CrossingResult hit = first_crossing(w, 1.0, u, false);
    REQUIRE(hit.crossed);
    CHECK(hit.step == 0);
    CHECK(hit.time == doctest::Approx(10.25).epsilon(1e-15));  // halfway up the step

    // Exact touch at an interior node.
    w.values = {0.0, 1.0, 2.0};
    const CrossingResult node = first_crossing(w, 1.0, u, false);
    REQUIRE(node.crossed);
    CHECK(node.time == doctest::Approx(10.5).epsilon(1e-15));

    // Start exactly at the level.
    w.values = {1.0, 2.0, 3.0};
    const CrossingResult start = first_crossing(w, 1.0, u, false);
    REQUIRE(start.crossed);
    CHECK(start.time == 10.0);

    // Never reaches the level without refinement.
    w.values = {0.0, 0.5, 0.25};
    const CrossingResult none = first_crossing(w, 1.0, u, false);
    CHECK(!none.crossed);
}

TEST_CASE("first_crossing: refined hitting probability matches the exact law") {
    // P(max of standard BM over [0,1] >= 1) = 2 (1 - Phi(1)).
    const double exact = 0.3173105078629141;
    const std::size_t n = 20000, steps = 512;
    const TimeGrid grid{0.0, 1.0 / static_cast<double>(steps), steps};
    std::size_t crossed = 0;
    for (std::size_t k = 0; k < n; ++k) {
        NormalStream ns({99, k, kSimB1, 0});
        UniformStream us({99, k, kUSim, 0});
        const ScalarPath w = sample_bm(grid, 0.0, ns);
        if (first_crossing(w, 1.0, us).crossed) ++crossed;
    }
    const double p = static_cast<double>(crossed) / static_cast<double>(n);
    const double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(n));
    CHECK(std::abs(p - exact) < 4.0 * se);
}

TEST_CASE("first_crossing: refined law is stable under grid refinement") {
    const std::size_t n = 100000;
    std::vector<double> coarse, fine;
    coarse.reserve(n);
    fine.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        {
            const std::size_t steps = 2048;
            const TimeGrid grid{0.0, 1.0 / static_cast<double>(steps), steps};
            NormalStream ns({181, k, kSimB1, 0});
            UniformStream us({181, k, kUSim, 0});
            const ScalarPath w = sample_bm(grid, 0.0, ns);
            const CrossingResult hit = first_crossing(w, 0.5, us);
            if (hit.crossed) coarse.push_back(hit.time);
        }
        {
            const std::size_t steps = 4096;
            const TimeGrid grid{0.0, 1.0 / static_cast<double>(steps), steps};
            NormalStream ns({182, k, kSimB1, 0});
            UniformStream us({182, k, kUSim, 0});
            const ScalarPath w = sample_bm(grid, 0.0, ns);
            const CrossingResult hit = first_crossing(w, 0.5, us);
            if (hit.crossed) fine.push_back(hit.time);
        }
    }
    CHECK(two_sample_ks(coarse, fine) <= 0.01);
    // Sanity: both refinements see the expected amount of crossings.
    const double expect = 2.0 * (1.0 - 0.6914624612740131);  // 2 (1 - Phi(0.5))
    CHECK(std::abs(static_cast<double>(coarse.size()) / static_cast<double>(n) -
                   expect) < 0.01);
}

}  // TEST_SUITE
