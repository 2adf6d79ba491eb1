#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "doctest.h"
#include "heiscouple/analysis.hpp"
#include "heiscouple/coupling.hpp"
#include "heiscouple/errors.hpp"
#include "heiscouple/geometry.hpp"
#include "heiscouple/rng.hpp"
#include "heiscouple/stats.hpp"
#include "heiscouple/verify.hpp"

using namespace heis;

TEST_SUITE("analysis") {

TEST_CASE("area density: pinned values and domain") {
    CHECK(area_density(1.0, 1.0) == doctest::Approx(0.086266738334054415).epsilon(1e-14));
    CHECK(area_density(2.0, 4.0) == doctest::Approx(0.09963420383459667).epsilon(1e-14));
    CHECK(area_density(0.0, 2.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK_THROWS_AS(area_density(0.0, 0.0), DomainError);
}

TEST_CASE("tv lower bound: closed form pins") {
    CHECK(tv_lower_closed_form(1.0, 2.0) ==
          doctest::Approx(0.24381161703820196).epsilon(1e-14));
    CHECK(tv_lower_closed_form(1.0, 1.0) ==
          doctest::Approx(0.45533220077355701).epsilon(1e-14));
    CHECK(tv_lower_closed_form(4.0, 1.0) ==
          doctest::Approx(0.94501254199785103).epsilon(1e-14));
    CHECK(tv_lower_closed_form(0.0, 1.0) == 0.0);
}

TEST_CASE("tv lower bound: quadrature agrees with the closed form") {
    for (double a : {0.1, 0.5, 1.0, 2.0, 4.0, 16.0, 300.0}) {
        for (double t : {0.25, 1.0, 2.0, 8.0}) {
            CHECK(tv_lower_analytic(a, t) ==
                  doctest::Approx(tv_lower_closed_form(a, t)).epsilon(1e-8));
        }
    }
    CHECK(tv_lower_analytic(0.0, 1.0) == 0.0);
    CHECK(tv_lower_analytic(1e9, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tv lower bound: small-offset linearity has converged") {
    // With t = 1/2 the reduced offset equals a itself; the ratio bound/offset
    // moves by under 2% between offsets 1e-3 and 1e-4.
    const double r3 = tv_lower_analytic(1e-3, 0.5) / 1e-3;
    const double r4 = tv_lower_analytic(1e-4, 0.5) / 1e-4;
    CHECK(std::abs(r3 / r4 - 1.0) <= 0.02);
}

TEST_CASE("empirical tv: exact zero, Gaussian shift, and errors") {
    NormalStream g({909, 0, kGDyadic, 0});
    std::vector<double> first(100000), second(100000);
    g.fill(first.size(), first.data());
    NormalStream h({909, 1, kGDyadic, 0});
    h.fill(second.size(), second.data());
    for (double& v : second) v += 0.5;

    const TvEstimate same = empirical_tv(first, first);
    CHECK(same.value == 0.0);
    CHECK(same.bins == 203);  // 201 interior cells plus two overflow cells
    CHECK(same.n_first == first.size());

    // TV(N(0,1), N(1/2,1)) = 2 Phi(1/4) - 1.
    const TvEstimate shifted = empirical_tv(first, second);
    CHECK(std::abs(shifted.value - 0.19741265136584745) < 0.015);

    CHECK_THROWS_AS(empirical_tv({}, first), EmptyInputError);
    CHECK_THROWS_AS(empirical_tv(first, second, 2), PreconditionError);
}

TEST_CASE("endpoint areas: thread-count invariance and the endpoint law") {
    const std::vector<double> one = simulate_endpoint_areas(5.0, 1.0, 256, 20000, 77, 1);
    const std::vector<double> many = simulate_endpoint_areas(5.0, 1.0, 256, 20000, 77, 3);
    REQUIRE(one.size() == 20000);
    REQUIRE(many.size() == one.size());
    for (std::size_t i = 0; i < one.size(); ++i) REQUIRE(one[i] == many[i]);

    // Normalized endpoint areas follow the hyperbolic-secant law.
    std::vector<double> z;
    z.reserve(one.size());
    for (double v : one) z.push_back((v - 5.0) / 2.0);
    const KsResult ks = ks_test(z, [](double x) { return sech_cdf(x); });
    CHECK(ks.p_value > 1e-3);

    CHECK_THROWS_AS(simulate_endpoint_areas(0.0, 0.0, 256, 10, 1, 1), DomainError);
    CHECK_THROWS_AS(simulate_endpoint_areas(0.0, 1.0, 0, 10, 1, 1), PreconditionError);
}

TEST_CASE("tv experiment report is consistent with its inputs") {
    const TvExperimentReport r = run_tv_experiment(1.0, 2.0, 30000, 256, 5, 0, 201);
    CHECK(r.a_diff == 1.0);
    CHECK(r.t == 2.0);
    CHECK(r.n == 30000);
    CHECK(r.steps == 256);
    CHECK(r.closed_form == doctest::Approx(0.24381161703820196).epsilon(1e-14));
    CHECK(r.analytic_lower == doctest::Approx(r.closed_form).epsilon(1e-8));
    CHECK(r.empirical >= 0.0);
    CHECK(r.empirical <= 1.0);
    CHECK(std::abs(r.empirical - r.closed_form) < 0.03);
}

TEST_CASE("coupling ensembles are byte-identical across thread counts") {
    CouplingConfig cfg;
    cfg.steps_per_interval = 128;
    cfg.max_dyadic_index = 8;
    cfg.horizon = 255.0;
    const GroupPoint from{0, 0, 1}, to{0, 0, 0};
    const auto one = run_coupling_ensemble(from, to, cfg, 48, 31, 1);
    const auto four = run_coupling_ensemble(from, to, cfg, 48, 31, 4);
    REQUIRE(one.size() == 48);
    REQUIRE(four.size() == 48);
    for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(one[i].seed.trajectory == i);
        CHECK(one[i].coupled == four[i].coupled);
        CHECK(one[i].tau == four[i].tau);
        CHECK(one[i].censor_time == four[i].censor_time);
        CHECK(one[i].t1 == four[i].t1);
        CHECK(one[i].a_at_t1 == four[i].a_at_t1);
        CHECK(one[i].dyadic_intervals_used == four[i].dyadic_intervals_used);
        CHECK(one[i].role_swapped == four[i].role_swapped);
    }
}

TEST_CASE("dyadic probe times") {
    const std::vector<double> t = dyadic_times(2, 5);
    REQUIRE(t.size() == 4);
    CHECK(t[0] == 3.0);
    CHECK(t[1] == 7.0);
    CHECK(t[2] == 15.0);
    CHECK(t[3] == 31.0);
    CHECK_THROWS_AS(dyadic_times(3, 2), PreconditionError);
    CHECK_THROWS_AS(dyadic_times(-1, 2), PreconditionError);
}

TEST_CASE("tail estimator: exact small case") {
    std::vector<CouplingOutcome> outcomes(3);
    outcomes[0].coupled = true;
    outcomes[0].tau = 5.0;
    outcomes[1].coupled = true;
    outcomes[1].tau = 20.0;
    outcomes[2].coupled = false;
    outcomes[2].censor_time = 10.0;
    const auto tail = estimate_tail(outcomes, {3.0, 7.0, 15.0});
    REQUIRE(tail.size() == 3);
    CHECK(tail[0].p == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(tail[0].n == 3);
    CHECK(tail[0].survivors == 3);
    CHECK(tail[1].p == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(tail[1].n == 3);
    CHECK(tail[2].p == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(tail[2].n == 2);  // the censored pair drops out of the denominator
    CHECK_THROWS_AS(estimate_tail({}, {1.0}), EmptyInputError);
}

TEST_CASE("tail estimator is non-increasing in time") {
    UniformStream u({404, 0, kUSim, 0});
    std::uint64_t at = 0;
    std::vector<CouplingOutcome> outcomes(400);
    for (CouplingOutcome& o : outcomes) {
        const double roll = u.at(at++);
        if (roll < 0.6) {
            o.coupled = true;
            o.tau = 4096.0 * u.at(at++);
        } else {
            o.coupled = false;
            o.censor_time = 4096.0 * u.at(at++);
        }
    }
    const auto tail = estimate_tail(outcomes, dyadic_times(0, 12));
    for (std::size_t i = 0; i + 1 < tail.size(); ++i) {
        CHECK(tail[i].p >= tail[i + 1].p);
    }
}

TEST_CASE("integral tail check: bounds, censoring report, preconditions") {
    const IntegralTailReport r = lemma_tail_check(1.0, {1.0, 4.0, 16.0}, 3000, 0.02,
                                                  150.0, 99, 0);
    REQUIRE(r.rows.size() == 3);
    CHECK(r.n == 3000);
    CHECK(r.censored_gate == 0.02);
    CHECK(r.censored_fraction >= 0.0);
    CHECK(r.censored_fraction <= 1.0);
    for (const IntegralTailRow& row : r.rows) {
        CHECK(row.bound == doctest::Approx(2.0 / std::sqrt(row.y)).epsilon(1e-14));
        CHECK(row.within == (row.exceed_fraction <= row.bound + 3.0 * row.se));
        CHECK(row.within);  // the theoretical bound holds with margin
    }
    CHECK_THROWS_AS(lemma_tail_check(1.0, {0.5}, 100, 0.02, 10.0, 1, 1),
                    PreconditionError);
    CHECK_THROWS_AS(lemma_tail_check(-1.0, {1.0}, 100, 0.02, 10.0, 1, 1),
                    PreconditionError);
    CHECK_THROWS_AS(lemma_tail_check(1.0, {}, 100, 0.02, 10.0, 1, 1), PreconditionError);
    CHECK_THROWS_AS(lemma_tail_check(1.0, {1.0}, 0, 0.02, 10.0, 1, 1), PreconditionError);
}

TEST_CASE("area growth control: smoke and preconditions") {
    const AreaControlReport r = area_control_check(0.5, 0.25, 4.0, 1000, 256, 11, 0);
    CHECK(r.planar_gap == 0.5);
    CHECK(r.a0 == 0.25);
    CHECK(r.n == 1000);
    CHECK(r.mean_sup >= 0.25);  // the running sup starts at |a0|
    CHECK(r.se > 0.0);
    CHECK(r.fitted_c > 0.0);
    // t below max(gap^2, 2|a0|) is rejected.
    CHECK_THROWS_AS(area_control_check(2.0, 0.0, 1.0, 100, 64, 1, 1), PreconditionError);
    CHECK_THROWS_AS(area_control_check(0.5, 4.0, 1.0, 100, 64, 1, 1), PreconditionError);
}

TEST_CASE("moment scaling: truncated moments stay bounded over two decades") {
    const MomentScalingReport r = moment_scaling_check({0.01, 0.1, 1.0}, 600, 64, 13, 0);
    REQUIRE(r.gaps.size() == 3);
    REQUIRE(r.families.size() == 6);
    for (const MomentScalingFamily& f : r.families) {
        REQUIRE(f.values.size() == 3);
        for (double v : f.values) CHECK(v > 0.0);
        CHECK(f.spread >= 1.0);
    }
    // The first coupling checkpoint sits at the gap itself, so tau >= gap and
    // a unit gap makes the capped time exactly one.
    CHECK(r.families[0].name == "tau_capped_sq");
    CHECK(r.families[0].values[2] == 1.0);
    // Ratio families bounded across gaps spanning two decades.
    for (std::size_t fi = 3; fi < 6; ++fi) CHECK(r.families[fi].spread <= 10.0);
    CHECK(r.max_spread <= 10.0);

    // A zero gap couples instantly: zero moments, excluded from spreads.
    const MomentScalingReport z = moment_scaling_check({0.0, 0.5}, 60, 64, 13, 0);
    for (const MomentScalingFamily& f : z.families) {
        REQUIRE(f.values.size() == 2);
        CHECK(f.values[0] == 0.0);
        CHECK(f.values[1] > 0.0);
        CHECK(f.spread == 1.0);  // a single positive entry
    }

    CHECK_THROWS_AS(moment_scaling_check({}, 100, 64, 1, 1), PreconditionError);
    CHECK_THROWS_AS(moment_scaling_check({-0.5}, 100, 64, 1, 1), PreconditionError);
    CHECK_THROWS_AS(moment_scaling_check({0.5}, 0, 64, 1, 1), PreconditionError);
}

TEST_CASE("exit experiment: structure and hypothesis preconditions") {
    CouplingConfig base;
    base.steps_per_interval = 64;
    base.max_dyadic_index = 8;
    base.horizon = 63.0;
    const ExitReport r = exit_experiment(1.0, {0.01, 0.02}, ExitVariant::planar, 300,
                                         base, 21, 0);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.radius == 1.0);
    for (const ExitRow& row : r.rows) {
        CHECK(row.n == 300);
        CHECK(row.events + row.undetermined <= row.n);
        CHECK(row.p_hat >= 0.0);
        CHECK(row.p_hat <= 1.0);
        if (row.p_hat > 0.0) {
            CHECK(row.ratio == doctest::Approx(row.p_hat / row.offset).epsilon(1e-12));
        }
    }
    // Offsets must stay well inside the ball.
    CHECK_THROWS_AS(exit_experiment(1.0, {0.5}, ExitVariant::planar, 10, base, 1, 1),
                    PreconditionError);
    // Planar separations beyond 1 violate the mirror-phase hypothesis.
    CHECK_THROWS_AS(exit_experiment(64.0, {1.5}, ExitVariant::planar, 10, base, 1, 1),
                    PreconditionError);
    // Area separations beyond 1/2 violate the area-phase hypothesis.
    CHECK_THROWS_AS(exit_experiment(64.0, {1.0}, ExitVariant::area, 10, base, 1, 1),
                    PreconditionError);
    CHECK_THROWS_AS(exit_experiment(1.0, {}, ExitVariant::planar, 10, base, 1, 1),
                    PreconditionError);
}

TEST_CASE("oscillation-decay demo: envelope accounting and preconditions") {
    CouplingConfig cfg;
    cfg.steps_per_interval = 64;
    cfg.max_dyadic_index = 8;
    cfg.horizon = 255.0;
    const GroupPoint from{0, 1, 0}, to{0, 0, 0};
    const auto rows = liouville_demo(from, to, {1.0, 3.0, 7.0}, 500, cfg, 3, 0);
    REQUIRE(rows.size() == 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].envelope == doctest::Approx(2.0 * rows[i].p_tail).epsilon(1e-15));
        if (i > 0) CHECK(rows[i].p_tail <= rows[i - 1].p_tail);
    }
    // Hypotheses: planar gap at most 1, initial area gap at most 1/2, t >= 1.
    CHECK_THROWS_AS(liouville_demo({0, 2, 0}, to, {4.0}, 10, cfg, 1, 1),
                    PreconditionError);
    CHECK_THROWS_AS(liouville_demo({0, 0, 1}, to, {4.0}, 10, cfg, 1, 1),
                    PreconditionError);
    CHECK_THROWS_AS(liouville_demo(from, to, {0.5}, 10, cfg, 1, 1), PreconditionError);
}

TEST_CASE("marginal study: stream shapes and calibrated p-values at small n") {
    const MarginalsStudy s = run_marginals_study(200, 64, 5000, 17, 0);
    REQUIRE(s.ks.size() == 10);
    REQUIRE(s.chi2.size() == 2);
    for (const KsStudyRow& row : s.ks) {
        CHECK(row.n > 0);
        CHECK(row.n <= 5000);
        CHECK(row.p_value >= 0.0);
        CHECK(row.p_value <= 1.0);
    }
    CHECK(s.ks.back().name == "checkpoint_increment");
    CHECK(s.chi2[0].name == "area_t1");
    CHECK(s.chi2[1].name == "area_t3");
    for (const Chi2StudyRow& row : s.chi2) {
        CHECK(row.n == 200);
        CHECK(row.p_value >= 0.0);
        CHECK(row.p_value <= 1.0);
    }
    CHECK_THROWS_AS(run_marginals_study(0, 64, 100, 1, 1), PreconditionError);
    CHECK_THROWS_AS(run_marginals_study(10, 65, 100, 1, 1), PreconditionError);
}

}  // TEST_SUITE
