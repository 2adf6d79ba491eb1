#include "heiscouple/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "heiscouple/analysis.hpp"
#include "heiscouple/coupling.hpp"
#include "heiscouple/errors.hpp"
#include "heiscouple/geometry.hpp"
#include "heiscouple/grid.hpp"
#include "heiscouple/paths.hpp"
#include "heiscouple/rng.hpp"
#include "heiscouple/runner.hpp"
#include "heiscouple/stats.hpp"

namespace heis {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

/// Effort preset for one suite.
struct SuiteParams {
    std::uint64_t seed{7};
    unsigned threads{1};
    // coupling-rate ensembles
    std::size_t rate_n{0};
    std::size_t rate_steps{0};
    double rate_horizon{0.0};
    int rate_k_hi{0};
    double area_slope_lo{0.0}, area_slope_hi{0.0};
    double planar_slope_lo{0.0}, planar_slope_hi{0.0};
    double sandwich_slope_gap{0.0};
    // total-variation experiment
    std::size_t tv_n{0};
    std::size_t tv_steps{0};
    double tv_gate{0.0};
    // interval-functional variance
    std::size_t lam_n{0};
    std::size_t lam_steps{0};
    // marginal-law study
    std::size_t marg_n{0};
    std::size_t marg_steps{0};
    std::size_t marg_cap{0};
    // integral tail bound
    std::size_t tail_n{0};
    double tail_dt{0.0};
    // exit-probability linearity
    std::size_t exit_n{0};
    std::size_t exit_steps{0};
    std::vector<double> exit_offsets;
    double exit_gate{0.0};
};

SuiteParams quick_params(std::uint64_t seed, unsigned threads) {
    SuiteParams p;
    p.seed = seed;
    p.threads = threads;
    p.rate_n = 20000;
    p.rate_steps = 256;
    p.rate_horizon = 1023.0;
    p.rate_k_hi = 9;
    p.area_slope_lo = -1.35;
    p.area_slope_hi = -0.70;
    p.planar_slope_lo = -0.75;
    p.planar_slope_hi = -0.25;
    p.sandwich_slope_gap = 0.35;
    p.tv_n = 50000;
    p.tv_steps = 512;
    p.tv_gate = 0.03;
    p.lam_n = 20000;
    p.lam_steps = 512;
    p.marg_n = 10000;
    p.marg_steps = 512;
    p.marg_cap = 50000;
    p.tail_n = 10000;
    p.tail_dt = 0.02;
    p.exit_n = 5000;
    p.exit_steps = 256;
    p.exit_offsets = {1.0 / 128.0, 1.0 / 64.0};
    p.exit_gate = 2.5;
    return p;
}

SuiteParams full_params(std::uint64_t seed, unsigned threads) {
    SuiteParams p;
    p.seed = seed;
    p.threads = threads;
    p.rate_n = 200000;
    p.rate_steps = 2048;
    p.rate_horizon = 4095.0;
    p.rate_k_hi = 11;
    p.area_slope_lo = -1.15;
    p.area_slope_hi = -0.85;
    p.planar_slope_lo = -0.65;
    p.planar_slope_hi = -0.35;
    p.sandwich_slope_gap = 0.20;
    p.tv_n = 400000;
    p.tv_steps = 2048;
    p.tv_gate = 0.012;
    p.lam_n = 100000;
    p.lam_steps = 2048;
    p.marg_n = 100000;
    p.marg_steps = 2048;
    p.marg_cap = 250000;
    p.tail_n = 100000;
    p.tail_dt = 0.01;
    p.exit_n = 20000;
    p.exit_steps = 2048;
    p.exit_offsets = {1.0 / 256.0, 1.0 / 128.0, 1.0 / 64.0};
    p.exit_gate = 2.0;
    return p;
}

/// Distinct master seed per check so no two checks share streams.
std::uint64_t check_seed(std::uint64_t seed, unsigned k) {
    return seed + 1000003ULL * static_cast<std::uint64_t>(k);
}

// ---------------------------------------------------------------------------
// geometry
// ---------------------------------------------------------------------------

CheckResult check_geometry(const SuiteParams& p) {
    CheckResult res;
    res.name = "geometry";
    std::string fails;
    auto pin = [&fails](const char* what, double got, double want, double tol) {
        if (!(std::abs(got - want) <= tol)) {
            fails += std::string(" ") + what + "=" + fmt(got) + "(want " + fmt(want) + ")";
        }
    };

    pin("mu(0.001)", mu(0.001), 0.00066666675555556825, 1e-11);
    pin("mu(1)", mu(1.0), 0.77019031150306121, 1e-12);
    pin("mu(3)", mu(3.0), 157.65655763266073, 1e-10);
    pin("nu(0)", nu(0.0), 2.0, 0.0);
    pin("nu(0.5)", nu(0.5), 0.80876479851016838, 1e-12);
    pin("nu(1)", nu(1.0), 0.79781417752661202, 1e-12);
    pin("nu(pi/4)", nu(kPi / 4.0), 0.78539816339744831, 1e-12);
    pin("nu(pi-1e-8)", nu(kPi - 1e-8), 3.1415926335897932, 1e-9);
    pin("cc(1,1,1)", cc_distance(identity(), {1.0, 1.0, 1.0}), 1.5369251616017419, 1e-9);
    pin("cc(0.3,-0.2,0.05)", cc_distance(identity(), {0.3, -0.2, 0.05}),
        0.3796313976483168, 1e-9);
    pin("cc(2,1,0.5)", cc_distance(identity(), {2.0, 1.0, 0.5}), 2.2444250858142201, 1e-9);
    pin("cc_planar", cc_distance(identity(), {3.0, 4.0, 0.0}), std::sqrt(50.0), 1e-12);
    pin("cc_vertical", cc_distance(identity(), {0.0, 0.0, 2.0}), std::sqrt(2.0 * kPi),
        1e-12);
    pin("rho(1,1,1)", rho(identity(), {1.0, 1.0, 1.0}), 1.7320508075688773, 1e-14);
    pin("rho(shifted)", rho({0.7, -1.1, 0.4}, {1.7, -0.1, 1.4}), 1.6733200530681511, 1e-14);

    // mu is strictly increasing on a dense grid of [0, pi).
    double prev = mu(0.0);
    bool mono = true;
    for (int i = 1; i <= 2000; ++i) {
        const double th = (kPi - 1e-9) * static_cast<double>(i) / 2000.0;
        const double cur = mu(th);
        if (!(cur > prev)) mono = false;
        prev = cur;
    }
    if (!mono) fails += " mu_not_monotone";

    // Group axioms, invariance and scaling on seeded random points.
    UniformStream u({check_seed(p.seed, 0), 0, kUSim, 0});
    std::uint64_t at = 0;
    auto draw = [&u, &at](double half) { return half * (2.0 * u.at(at++) - 1.0); };
    auto draw_point = [&draw]() {
        return GroupPoint{draw(2.0), draw(2.0), draw(4.0)};
    };
    bool axioms = true;
    bool band_ok = true;
    const Band& band = cc_rho_band();
    for (int i = 0; i < 10000; ++i) {
        const GroupPoint a = draw_point();
        const GroupPoint b = draw_point();
        const GroupPoint g = draw_point();
        const GroupPoint ab_c = multiply(multiply(a, b), g);
        const GroupPoint a_bc = multiply(a, multiply(b, g));
        if (std::abs(ab_c.x - a_bc.x) > 1e-12 || std::abs(ab_c.y - a_bc.y) > 1e-12 ||
            std::abs(ab_c.z - a_bc.z) > 1e-10) {
            axioms = false;
        }
        const GroupPoint ia = multiply(inverse(a), a);
        if (ia.x != 0.0 || ia.y != 0.0 || std::abs(ia.z) > 1e-12) axioms = false;
        // Left-invariance of both distances.
        const double r0 = rho(a, b);
        const double r1 = rho(multiply(g, a), multiply(g, b));
        if (std::abs(r0 - r1) > 1e-9 * (1.0 + r0)) axioms = false;
        const double c0 = cc_distance(a, b);
        const double c1 = cc_distance(multiply(g, a), multiply(g, b));
        if (std::abs(c0 - c1) > 1e-9 * (1.0 + c0)) axioms = false;
        // Dilation scales both distances linearly.
        const double r = 0.25 + 2.0 * u.at(at++);
        const double rs = rho(dilate(a, r), dilate(b, r));
        if (std::abs(rs - r * r0) > 1e-9 * (1.0 + r * r0)) axioms = false;
        // The ratio cc/rho stays inside the published band.
        if (r0 > 0.0) {
            const double ratio = c0 / r0;
            if (ratio < band.lo - 1e-9 || ratio > band.hi + 1e-9) band_ok = false;
        }
    }
    if (!axioms) fails += " axioms";
    if (!band_ok) fails += " ratio_outside_band";
    const double want_lo = std::sqrt(kPi / 4.0);
    const double want_hi = std::sqrt(kPi);
    if (std::abs(band.lo - want_lo) > 1e-6 || std::abs(band.hi - want_hi) > 1e-6) {
        fails += " band=[" + fmt(band.lo) + "," + fmt(band.hi) + "]";
    }

    res.pass = fails.empty();
    res.details = res.pass ? "pins=ok axioms=ok band=[" + fmt(band.lo) + "," + fmt(band.hi) +
                                 "] ratios=ok"
                           : "failed:" + fails;
    return res;
}

// ---------------------------------------------------------------------------
// lambda_variance
// ---------------------------------------------------------------------------

CheckResult check_lambda_variance(const SuiteParams& p) {
    CheckResult res;
    res.name = "lambda_variance";
    const std::uint64_t seed = check_seed(p.seed, 1);
    const std::size_t n = p.lam_n;
    std::string devs;
    double max_dev = 0.0;
    for (int level = 0; level <= 4; ++level) {
        const double t0 = std::ldexp(1.0, level) - 1.0;
        const double T = std::ldexp(1.0, level);
        const TimeGrid grid{t0, T / static_cast<double>(p.lam_steps), p.lam_steps};
        std::vector<double> ends(n, 0.0);
        parallel_for(n, p.threads, [&](std::size_t i) {
            NormalStream ns({seed, i, kB1Dyadic, static_cast<std::uint32_t>(level)});
            const ScalarPath b1 = sample_bm(grid, 0.0, ns);
            ends[i] = lambda_functional(b1).values.back();
        });
        RunningMoments mom;
        for (double v : ends) mom.add(v);
        const double exact = std::ldexp(4.0, level) / (kPi * kPi);
        const double se = exact * std::sqrt(2.0 / static_cast<double>(n - 1));
        const double dev = std::abs(mom.variance() - exact) / se;
        max_dev = std::max(max_dev, dev);
        if (!devs.empty()) devs += ",";
        devs += fmt(dev);
    }
    res.pass = max_dev <= 3.0;
    res.details = "dev_se=[" + devs + "] gate=3";
    return res;
}

// ---------------------------------------------------------------------------
// marginals
// ---------------------------------------------------------------------------

/// Per-trajectory capture slots for the marginal-law study.
struct MarginalSlots {
    std::size_t steps{0};
    std::array<std::size_t, 3> lags{{1, 8, 64}};
    std::array<std::size_t, 3> traj_cap{{0, 0, 0}};
    std::array<std::vector<double>, 3> b1_s, b2_s, b2t_s;
    std::vector<double> ck_inc;
    std::size_t ck_cap{0};
    std::vector<double> x3_t1, x3_t3;
    std::vector<unsigned char> have1, have3;
};

class MarginalObserver final : public TrajectoryObserver {
public:
    MarginalObserver(MarginalSlots* slots, std::size_t traj) : s_(slots), traj_(traj) {}

    bool on_segment(const SegmentView& seg) override {
        if (seg.phase == SegmentPhase::dyadic && seg.interval_index == 0) {
            for (std::size_t li = 0; li < 3; ++li) {
                const std::size_t lag = s_->lags[li];
                if (traj_ >= s_->traj_cap[li]) continue;
                const std::size_t cnt = s_->steps / lag + 1;
                double* d1 = s_->b1_s[li].data() + traj_ * cnt;
                double* d2 = s_->b2_s[li].data() + traj_ * cnt;
                double* d3 = s_->b2t_s[li].data() + traj_ * cnt;
                for (std::size_t k = 0; k < cnt; ++k) {
                    d1[k] = (*seg.b1)[k * lag];
                    d2[k] = (*seg.b2)[k * lag];
                    d3[k] = (*seg.b2_tilde)[k * lag];
                }
            }
            if (traj_ < s_->ck_cap) {
                s_->ck_inc[traj_] = seg.b2->back() - seg.b2->front();
            }
        }
        if (seg.x3 != nullptr) {
            for (std::size_t i = 0; i <= seg.grid->steps; ++i) {
                const double t = seg.grid->node(i);
                if (s_->have1[traj_] == 0 && t == 1.0) {
                    s_->x3_t1[traj_] = (*seg.x3)[i];
                    s_->have1[traj_] = 1;
                } else if (s_->have3[traj_] == 0 && t == 3.0) {
                    s_->x3_t3[traj_] = (*seg.x3)[i];
                    s_->have3[traj_] = 1;
                }
            }
        }
        // Everything this study needs lies at or before time 3.
        return s_->have3[traj_] == 0;
    }

private:
    MarginalSlots* s_;
    std::size_t traj_;
};

}  // namespace

MarginalsStudy run_marginals_study(std::size_t n, std::size_t steps_per_interval,
                                   std::size_t cap_per_test, std::uint64_t master_seed,
                                   unsigned threads) {
    if (n == 0) throw EmptyInputError("run_marginals_study: n must be >= 1");
    if (steps_per_interval < 64 || steps_per_interval % 64 != 0) {
        throw PreconditionError(
            "run_marginals_study: steps_per_interval must be a positive multiple of 64");
    }
    if (cap_per_test == 0) {
        throw PreconditionError("run_marginals_study: cap_per_test must be >= 1");
    }
    MarginalSlots slots;
    slots.steps = steps_per_interval;
    for (std::size_t li = 0; li < 3; ++li) {
        const std::size_t per_traj = steps_per_interval / slots.lags[li];
        const std::size_t want = (cap_per_test + per_traj - 1) / per_traj;
        slots.traj_cap[li] = std::min(n, want);
        const std::size_t cnt = per_traj + 1;
        slots.b1_s[li].assign(slots.traj_cap[li] * cnt, 0.0);
        slots.b2_s[li].assign(slots.traj_cap[li] * cnt, 0.0);
        slots.b2t_s[li].assign(slots.traj_cap[li] * cnt, 0.0);
    }
    slots.ck_cap = std::min(n, cap_per_test);
    slots.ck_inc.assign(slots.ck_cap, 0.0);
    slots.x3_t1.assign(n, 0.0);
    slots.x3_t3.assign(n, 0.0);
    slots.have1.assign(n, 0);
    slots.have3.assign(n, 0);

    CouplingConfig cfg;
    cfg.strategy = Strategy::area_only_dyadic;
    cfg.steps_per_interval = steps_per_interval;
    cfg.max_dyadic_index = 11;
    cfg.horizon = 4095.0;
    cfg.record_until = 3.0;
    const GroupPoint from{0.0, 0.0, 1.0};
    parallel_for(n, threads, [&](std::size_t i) {
        MarginalObserver obs(&slots, i);
        couple(from, identity(), cfg, SeedKey{master_seed, i}, &obs);
    });

    MarginalsStudy study;
    const double dt = 1.0 / static_cast<double>(steps_per_interval);
    const char* series_name[3] = {"b1", "b2", "b2_tilde"};
    for (int series = 0; series < 3; ++series) {
        for (std::size_t li = 0; li < 3; ++li) {
            const std::size_t lag = slots.lags[li];
            const std::size_t cnt = steps_per_interval / lag + 1;
            const std::vector<double>& store = series == 0   ? slots.b1_s[li]
                                               : series == 1 ? slots.b2_s[li]
                                                             : slots.b2t_s[li];
            const double norm = 1.0 / std::sqrt(static_cast<double>(lag) * dt);
            std::vector<double> samples;
            samples.reserve(cap_per_test);
            for (std::size_t j = 0; j < slots.traj_cap[li] && samples.size() < cap_per_test;
                 ++j) {
                const double* v = store.data() + j * cnt;
                for (std::size_t w = 0; w + 1 < cnt && samples.size() < cap_per_test; ++w) {
                    samples.push_back((v[w + 1] - v[w]) * norm);
                }
            }
            const KsResult ks = ks_test(std::move(samples), std_normal_cdf);
            KsStudyRow row;
            row.name = std::string(series_name[series]) + "_lag" + std::to_string(lag);
            row.n = ks.n;
            row.statistic = ks.statistic;
            row.p_value = ks.p_value;
            study.ks.push_back(row);
        }
    }
    {
        std::vector<double> samples(slots.ck_inc.begin(), slots.ck_inc.end());
        const KsResult ks = ks_test(std::move(samples), std_normal_cdf);
        KsStudyRow row;
        row.name = "checkpoint_increment";
        row.n = ks.n;
        row.statistic = ks.statistic;
        row.p_value = ks.p_value;
        study.ks.push_back(row);
    }

    // Chi-square of the normalized area coordinate against its
    // hyperbolic-secant law, on 50 equal-probability bins.
    constexpr std::size_t kBins = 50;
    std::vector<double> edges;
    edges.reserve(kBins - 1);
    for (std::size_t j = 1; j < kBins; ++j) {
        edges.push_back(sech_quantile(static_cast<double>(j) / static_cast<double>(kBins)));
    }
    const std::vector<double> probs(kBins, 1.0 / static_cast<double>(kBins));
    for (int which = 0; which < 2; ++which) {
        const double t = which == 0 ? 1.0 : 3.0;
        const std::vector<double>& vals = which == 0 ? slots.x3_t1 : slots.x3_t3;
        const std::vector<unsigned char>& have = which == 0 ? slots.have1 : slots.have3;
        std::vector<std::size_t> counts(kBins, 0);
        std::size_t used = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (have[i] == 0) continue;
            const double v = (vals[i] - 1.0) / (2.0 * t);
            const std::size_t bin = static_cast<std::size_t>(
                std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
            counts[bin]++;
            ++used;
        }
        const Chi2Result c2 = chi2_test(counts, probs);
        Chi2StudyRow row;
        row.name = which == 0 ? "area_t1" : "area_t3";
        row.n = used;
        row.statistic = c2.statistic;
        row.p_value = c2.p_value;
        study.chi2.push_back(row);
    }
    return study;
}

namespace {

CheckResult check_marginals(const SuiteParams& p) {
    CheckResult res;
    res.name = "marginals";
    const MarginalsStudy study = run_marginals_study(p.marg_n, p.marg_steps, p.marg_cap,
                                                     check_seed(p.seed, 2), p.threads);
    double min_ks = 1.0;
    double min_chi2 = 1.0;
    std::string fails;
    for (const KsStudyRow& r : study.ks) {
        min_ks = std::min(min_ks, r.p_value);
        if (!(r.p_value > 0.001)) fails += " " + r.name + "(p=" + fmt(r.p_value) + ")";
    }
    for (const Chi2StudyRow& r : study.chi2) {
        min_chi2 = std::min(min_chi2, r.p_value);
        if (!(r.p_value > 0.01)) fails += " " + r.name + "(p=" + fmt(r.p_value) + ")";
    }
    res.pass = fails.empty();
    res.details = "ks_tests=" + std::to_string(study.ks.size()) +
                  " min_ks_p=" + fmt(min_ks) + " min_chi2_p=" + fmt(min_chi2) +
                  (fails.empty() ? std::string() : " failed:" + fails);
    return res;
}

// ---------------------------------------------------------------------------
// tv_bounds
// ---------------------------------------------------------------------------

CheckResult check_tv_bounds(const SuiteParams& p) {
    CheckResult res;
    res.name = "tv_bounds";
    std::string fails;
    // Quadrature and closed form must agree tightly.
    const double cases[4][2] = {{1.0, 2.0}, {1.0, 1.0}, {2.0, 1.0}, {0.5, 4.0}};
    for (const auto& c : cases) {
        const double q = tv_lower_analytic(c[0], c[1]);
        const double f = tv_lower_closed_form(c[0], c[1]);
        if (!(std::abs(q - f) <= 1e-8)) {
            fails += " quad(a=" + fmt(c[0]) + ",t=" + fmt(c[1]) + ")=" + fmt(q);
        }
    }
    // Frozen reference values.
    if (!(std::abs(tv_lower_closed_form(1.0, 2.0) - 0.24381161703820196) <= 1e-12)) {
        fails += " pin(1,2)";
    }
    if (!(std::abs(tv_lower_closed_form(2.0, 2.0) - 0.45533220077355701) <= 1e-12)) {
        fails += " pin(2,2)";
    }
    if (!(std::abs(tv_lower_closed_form(4.0, 1.0) - 0.94501254199785103) <= 1e-12)) {
        fails += " pin(4,1)";
    }
    const TvExperimentReport rep = run_tv_experiment(1.0, 2.0, p.tv_n, p.tv_steps,
                                                     check_seed(p.seed, 3), p.threads, 201);
    const double err = std::abs(rep.empirical - rep.analytic_lower);
    if (!(err <= p.tv_gate)) fails += " empirical_err=" + fmt(err);
    res.pass = fails.empty();
    res.details = "emp=" + fmt(rep.empirical) + " analytic=" + fmt(rep.analytic_lower) +
                  " err=" + fmt(err) + " gate=" + fmt(p.tv_gate) +
                  (fails.empty() ? std::string() : " failed:" + fails);
    return res;
}

// ---------------------------------------------------------------------------
// coupling-rate checks
// ---------------------------------------------------------------------------

CouplingConfig rate_config(const SuiteParams& p) {
    CouplingConfig cfg;
    cfg.strategy = Strategy::nonmarkovian_two_step;
    cfg.steps_per_interval = p.rate_steps;
    cfg.max_dyadic_index = 11;
    cfg.horizon = p.rate_horizon;
    cfg.record_until = 0.0;
    return cfg;
}

CheckResult check_area_rate(const SuiteParams& p, const std::vector<TailPoint>& tail) {
    CheckResult res;
    res.name = "area_rate";
    PowerLawFit fit;
    try {
        fit = fit_power_law(tail);
    } catch (const InsufficientPointsError&) {
        res.pass = false;
        res.details = "insufficient tail points";
        return res;
    }
    res.pass = fit.slope >= p.area_slope_lo && fit.slope <= p.area_slope_hi;
    res.details = "slope=" + fmt(fit.slope) + " se=" + fmt(fit.slope_se) +
                  " pts=" + std::to_string(fit.points_used) + " gate=[" +
                  fmt(p.area_slope_lo) + "," + fmt(p.area_slope_hi) + "]";
    return res;
}

CheckResult check_tv_sandwich(const SuiteParams& p,
                              const std::vector<CouplingOutcome>& outcomes,
                              const std::vector<TailPoint>& tail) {
    CheckResult res;
    res.name = "tv_sandwich";
    std::string fails;
    // The coupling tail must dominate the analytic total-variation lower
    // bound (within three standard errors) at each probe time.
    const std::vector<double> probes{3.0, 7.0, 15.0, 31.0, 63.0};
    const std::vector<TailPoint> at_probes = estimate_tail(outcomes, probes);
    std::size_t ok = 0;
    for (const TailPoint& pt : at_probes) {
        const double lower = tv_lower_closed_form(1.0, pt.t);
        if (pt.p >= lower - 3.0 * pt.se) {
            ++ok;
        } else {
            fails += " t=" + fmt(pt.t) + "(p=" + fmt(pt.p) + "<lower=" + fmt(lower) + ")";
        }
    }
    // The fitted tail exponent must track the exponent of the bound curve.
    std::vector<TailPoint> synth;
    for (const TailPoint& pt : tail) {
        TailPoint s;
        s.t = pt.t;
        s.p = tv_lower_closed_form(1.0, pt.t);
        s.se = 0.01 * s.p;
        s.survivors = 1000000;
        s.n = 1000000;
        synth.push_back(s);
    }
    double gap = std::numeric_limits<double>::infinity();
    try {
        const PowerLawFit emp = fit_power_law(tail);
        const PowerLawFit ref = fit_power_law(synth);
        gap = std::abs(emp.slope - ref.slope);
        if (!(gap <= p.sandwich_slope_gap)) fails += " slope_gap=" + fmt(gap);
    } catch (const InsufficientPointsError&) {
        fails += " insufficient_points";
    }
    res.pass = fails.empty();
    res.details = "bound_ok=" + std::to_string(ok) + "/" + std::to_string(probes.size()) +
                  " slope_gap=" + fmt(gap) + " gate=" + fmt(p.sandwich_slope_gap) +
                  (fails.empty() ? std::string() : " failed:" + fails);
    return res;
}

CheckResult check_planar_rate(const SuiteParams& p) {
    CheckResult res;
    res.name = "planar_rate";
    const std::vector<CouplingOutcome> outcomes =
        run_coupling_ensemble({0.0, 1.0, 0.0}, identity(), rate_config(p), p.rate_n,
                              check_seed(p.seed, 5), p.threads);
    const std::vector<TailPoint> tail =
        estimate_tail(outcomes, dyadic_times(2, p.rate_k_hi));
    PowerLawFit fit;
    try {
        fit = fit_power_law(tail);
    } catch (const InsufficientPointsError&) {
        res.pass = false;
        res.details = "insufficient tail points";
        return res;
    }
    res.pass = fit.slope >= p.planar_slope_lo && fit.slope <= p.planar_slope_hi;
    res.details = "slope=" + fmt(fit.slope) + " se=" + fmt(fit.slope_se) +
                  " pts=" + std::to_string(fit.points_used) + " gate=[" +
                  fmt(p.planar_slope_lo) + "," + fmt(p.planar_slope_hi) + "]";
    return res;
}

// ---------------------------------------------------------------------------
// integral_tail
// ---------------------------------------------------------------------------

CheckResult check_integral_tail(const SuiteParams& p) {
    CheckResult res;
    res.name = "integral_tail";
    const IntegralTailReport rep = lemma_tail_check(1.0, {1.0, 4.0, 16.0, 64.0}, p.tail_n,
                                                    p.tail_dt, 1000.0,
                                                    check_seed(p.seed, 6), p.threads);
    std::size_t ok = 0;
    for (const IntegralTailRow& r : rep.rows) ok += r.within ? 1 : 0;
    res.pass = rep.all_within && rep.censor_ok;
    res.details = "rows_ok=" + std::to_string(ok) + "/" + std::to_string(rep.rows.size()) +
                  " censored=" + fmt(rep.censored_fraction) +
                  " censor_gate=" + fmt(rep.censored_gate);
    return res;
}

// ---------------------------------------------------------------------------
// exit_linearity
// ---------------------------------------------------------------------------

CheckResult check_exit_linearity(const SuiteParams& p) {
    CheckResult res;
    res.name = "exit_linearity";
    CouplingConfig base;
    base.strategy = Strategy::nonmarkovian_two_step;
    base.steps_per_interval = p.exit_steps;
    base.horizon = 4095.0;
    base.record_until = 0.0;
    const ExitReport rep = exit_experiment(1.0, p.exit_offsets, ExitVariant::planar,
                                           p.exit_n, base, check_seed(p.seed, 7),
                                           p.threads);
    std::string ratios;
    for (const ExitRow& r : rep.rows) {
        if (!ratios.empty()) ratios += ",";
        ratios += fmt(r.ratio);
    }
    res.pass = rep.max_ratio_spread <= p.exit_gate;
    res.details = "ratios=[" + ratios + "] spread=" + fmt(rep.max_ratio_spread) +
                  " gate=" + fmt(p.exit_gate);
    return res;
}

}  // namespace

VerifyReport run_verify_suite(const VerifySettings& settings) {
    SuiteParams p;
    if (settings.suite == "quick") {
        p = quick_params(settings.seed, resolve_thread_count(settings.threads));
    } else if (settings.suite == "full") {
        p = full_params(settings.seed, resolve_thread_count(settings.threads));
    } else {
        throw PreconditionError("run_verify_suite: unknown suite '" + settings.suite +
                                "' (expected quick or full)");
    }
    VerifyReport rep;
    rep.suite = settings.suite;
    rep.seed = settings.seed;
    rep.checks.push_back(check_geometry(p));
    rep.checks.push_back(check_lambda_variance(p));
    rep.checks.push_back(check_marginals(p));
    rep.checks.push_back(check_tv_bounds(p));
    // The area-start ensemble feeds both the rate fit and the sandwich check.
    const std::vector<CouplingOutcome> area_outcomes =
        run_coupling_ensemble({0.0, 0.0, 1.0}, identity(), rate_config(p), p.rate_n,
                              check_seed(p.seed, 4), p.threads);
    const std::vector<TailPoint> area_tail =
        estimate_tail(area_outcomes, dyadic_times(2, p.rate_k_hi));
    rep.checks.push_back(check_area_rate(p, area_tail));
    rep.checks.push_back(check_tv_sandwich(p, area_outcomes, area_tail));
    rep.checks.push_back(check_planar_rate(p));
    rep.checks.push_back(check_integral_tail(p));
    rep.checks.push_back(check_exit_linearity(p));
    rep.all_pass = true;
    for (const CheckResult& c : rep.checks) rep.all_pass = rep.all_pass && c.pass;
    return rep;
}

}  // namespace heis
