#include "heiscouple/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "heiscouple/errors.hpp"
#include "heiscouple/rng.hpp"
#include "heiscouple/runner.hpp"

namespace heis {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kFillChunk = 8192;

double sech(double x) { return 1.0 / std::cosh(x); }

/// Classic adaptive Simpson refinement with Richardson correction.
template <typename F>
double adaptive_simpson_rec(const F& f, double a, double fa, double m, double fm, double b,
                            double fb, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double split = left + right;
    if (depth <= 0 || std::abs(split - whole) <= 15.0 * tol) {
        return split + (split - whole) / 15.0;
    }
    return adaptive_simpson_rec(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
    if (!(b > a)) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = f(a);
    const double fm = f(m);
    const double fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_rec(f, a, fa, m, fm, b, fb, whole, tol, 48);
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
    const double idx = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = idx - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

/// Chunked positional reader over a NormalStream, for loops whose length is
/// not known in advance.
class ChunkedNormals {
public:
    explicit ChunkedNormals(const StreamId& id) : stream_(id) {}
    double next() {
        if (pos_ == buf_.size()) {
            buf_.resize(kFillChunk);
            stream_.fill(kFillChunk, buf_.data(), base_);
            base_ += kFillChunk;
            pos_ = 0;
        }
        return buf_[pos_++];
    }

private:
    NormalStream stream_;
    std::vector<double> buf_;
    std::size_t pos_{0};
    std::uint64_t base_{0};
};

}  // namespace

double area_density(double z, double t) {
    if (!(t > 0.0)) throw DomainError("area_density: t must be positive");
    return sech(kPi * z / t) / t;
}

double tv_lower_closed_form(double a_diff, double t) {
    if (!(t > 0.0)) throw DomainError("tv_lower_closed_form: t must be positive");
    const double u = std::abs(a_diff) / (2.0 * t);
    return (2.0 / kPi) * std::atan(std::sinh(0.5 * kPi * u));
}

double tv_lower_analytic(double a_diff, double t) {
    if (!(t > 0.0)) throw DomainError("tv_lower_analytic: t must be positive");
    const double u = std::abs(a_diff) / (2.0 * t);
    if (u == 0.0) return 0.0;
    // Half the L1 distance between the two shifted area densities reduces,
    // by the symmetry of the difference about its sign change, to
    // 2 * Int_0^{u/2} sech(pi v) dv.  Beyond v = 45 the integrand is below
    // 1e-61, so the domain can be capped there.
    const double hi = std::min(0.5 * u, 45.0);
    const double val =
        2.0 * adaptive_simpson([](double v) { return sech(kPi * v); }, 0.0, hi, 1e-12);
    return std::min(1.0, std::max(0.0, val));
}

TvEstimate empirical_tv(const std::vector<double>& first, const std::vector<double>& second,
                        std::size_t bins) {
    if (first.empty() || second.empty()) {
        throw EmptyInputError("empirical_tv: empty sample set");
    }
    if (bins < 3) throw PreconditionError("empirical_tv: need at least 3 bins");
    std::vector<double> pooled;
    pooled.reserve(first.size() + second.size());
    pooled.insert(pooled.end(), first.begin(), first.end());
    pooled.insert(pooled.end(), second.begin(), second.end());
    std::sort(pooled.begin(), pooled.end());
    const double med = quantile_sorted(pooled, 0.5);
    const double iqr = quantile_sorted(pooled, 0.75) - quantile_sorted(pooled, 0.25);
    double lo = med - 8.0 * iqr;
    double hi = med + 8.0 * iqr;
    if (!(hi > lo)) {
        lo = med - 1.0;
        hi = med + 1.0;
    }
    const double scale = static_cast<double>(bins) / (hi - lo);
    // Cells: [0] underflow, [1..bins] interior, [bins+1] overflow.
    std::vector<std::size_t> c1(bins + 2, 0), c2(bins + 2, 0);
    auto cell = [&](double x) -> std::size_t {
        if (x < lo) return 0;
        if (x >= hi) return bins + 1;
        return 1 + static_cast<std::size_t>((x - lo) * scale);
    };
    for (double x : first) c1[std::min(cell(x), bins + 1)]++;
    for (double x : second) c2[std::min(cell(x), bins + 1)]++;
    const double n1 = static_cast<double>(first.size());
    const double n2 = static_cast<double>(second.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < bins + 2; ++i) {
        acc += std::abs(static_cast<double>(c1[i]) / n1 - static_cast<double>(c2[i]) / n2);
    }
    TvEstimate out;
    out.value = 0.5 * acc;
    out.bins = bins + 2;
    out.n_first = first.size();
    out.n_second = second.size();
    return out;
}

std::vector<double> simulate_endpoint_areas(double z0, double t, std::size_t steps,
                                            std::size_t n, std::uint64_t master_seed,
                                            unsigned threads) {
    if (!(t > 0.0)) throw DomainError("simulate_endpoint_areas: t must be positive");
    if (steps == 0) throw PreconditionError("simulate_endpoint_areas: steps must be >= 1");
    std::vector<double> out(n, 0.0);
    const double sdt = std::sqrt(t / static_cast<double>(steps));
    parallel_for(n, threads, [&](std::size_t i) {
        static thread_local std::vector<double> g1, g2;
        g1.resize(steps);
        g2.resize(steps);
        NormalStream({master_seed, i, kSimB1, 0}).fill(steps, g1.data());
        NormalStream({master_seed, i, kSimB2, 0}).fill(steps, g2.data());
        double b1 = 0.0, b2 = 0.0, x3 = z0;
        for (std::size_t k = 0; k < steps; ++k) {
            const double db1 = sdt * g1[k];
            const double db2 = sdt * g2[k];
            x3 += b1 * db2 - b2 * db1;
            b1 += db1;
            b2 += db2;
        }
        out[i] = x3;
    });
    return out;
}

TvExperimentReport run_tv_experiment(double a_diff, double t, std::size_t n,
                                     std::size_t steps, std::uint64_t master_seed,
                                     unsigned threads, std::size_t bins) {
    TvExperimentReport rep;
    rep.a_diff = a_diff;
    rep.t = t;
    rep.n = n;
    rep.steps = steps;
    const std::vector<double> shifted =
        simulate_endpoint_areas(a_diff, t, steps, n, master_seed, threads);
    const std::vector<double> reference =
        simulate_endpoint_areas(0.0, t, steps, n, master_seed + 1, threads);
    rep.empirical = empirical_tv(shifted, reference, bins).value;
    rep.analytic_lower = tv_lower_analytic(a_diff, t);
    rep.closed_form = tv_lower_closed_form(a_diff, t);
    return rep;
}

std::vector<CouplingOutcome> run_coupling_ensemble(const GroupPoint& from,
                                                   const GroupPoint& to,
                                                   const CouplingConfig& cfg, std::size_t n,
                                                   std::uint64_t master_seed,
                                                   unsigned threads) {
    cfg.validate();
    std::vector<CouplingOutcome> out(n);
    parallel_for(n, threads, [&](std::size_t i) {
        out[i] = couple(from, to, cfg, SeedKey{master_seed, i}, nullptr);
    });
    return out;
}

std::vector<double> dyadic_times(int k_lo, int k_hi) {
    if (k_lo < 0 || k_hi < k_lo) {
        throw PreconditionError("dyadic_times: need 0 <= k_lo <= k_hi");
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(k_hi - k_lo + 1));
    for (int k = k_lo; k <= k_hi; ++k) out.push_back(std::ldexp(1.0, k) - 1.0);
    return out;
}

std::vector<TailPoint> estimate_tail(const std::vector<CouplingOutcome>& outcomes,
                                     const std::vector<double>& times) {
    if (outcomes.empty()) throw EmptyInputError("estimate_tail: no outcomes");
    std::vector<TailPoint> out;
    out.reserve(times.size());
    for (double t : times) {
        std::size_t known = 0;
        std::size_t survivors = 0;
        for (const CouplingOutcome& o : outcomes) {
            if (o.coupled) {
                ++known;
                if (o.tau > t) ++survivors;
            } else if (o.censor_time >= t) {
                // Coupling exceeds the censor time, hence exceeds t.
                ++known;
                ++survivors;
            }
        }
        TailPoint p;
        p.t = t;
        p.survivors = survivors;
        p.n = known;
        p.p = known > 0 ? static_cast<double>(survivors) / static_cast<double>(known) : 0.0;
        p.se = known > 0 ? binomial_se(survivors, known) : 0.0;
        out.push_back(p);
    }
    return out;
}

IntegralTailReport lemma_tail_check(double start, const std::vector<double>& thresholds,
                                    std::size_t n, double step_size, double horizon,
                                    std::uint64_t master_seed, unsigned threads) {
    if (!(start > 0.0)) throw DomainError("lemma_tail_check: start must be positive");
    if (!(step_size > 0.0)) throw DomainError("lemma_tail_check: step_size must be positive");
    if (!(horizon > 0.0)) throw DomainError("lemma_tail_check: horizon must be positive");
    if (thresholds.empty()) throw EmptyInputError("lemma_tail_check: no thresholds");
    if (n == 0) throw EmptyInputError("lemma_tail_check: n must be >= 1");
    for (double y : thresholds) {
        if (!(y >= start * start)) {
            throw PreconditionError("lemma_tail_check: thresholds must satisfy y >= start^2");
        }
    }
    const std::size_t max_steps =
        static_cast<std::size_t>(std::ceil(horizon / step_size - 1e-9));
    std::vector<double> integral(n, 0.0);
    std::vector<unsigned char> censored(n, 0);
    const double sdt = std::sqrt(step_size);
    parallel_for(n, threads, [&](std::size_t i) {
        ChunkedNormals g1({master_seed, i, kSimB1, 0});
        ChunkedNormals g2({master_seed, i, kSimB2, 0});
        double b2 = start;
        double acc = 0.0;
        bool absorbed = false;
        for (std::size_t k = 0; k < max_steps; ++k) {
            const double db1 = sdt * g1.next();
            const double db2 = sdt * g2.next();
            acc += b2 * db1;
            b2 += db2;
            if (b2 <= 0.0) {
                absorbed = true;
                break;
            }
        }
        integral[i] = acc;
        censored[i] = absorbed ? 0 : 1;
    });
    IntegralTailReport rep;
    rep.start = start;
    rep.step_size = step_size;
    rep.horizon = horizon;
    rep.n = n;
    std::size_t n_cens = 0;
    for (unsigned char c : censored) n_cens += c;
    rep.censored_fraction = static_cast<double>(n_cens) / static_cast<double>(n);
    rep.censored_gate = 0.02;
    rep.censor_ok = rep.censored_fraction <= rep.censored_gate;
    rep.all_within = true;
    for (double y : thresholds) {
        std::size_t exceed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            // Censored runs count as non-exceeding.
            if (censored[i] == 0 && std::abs(integral[i]) > y) ++exceed;
        }
        IntegralTailRow row;
        row.y = y;
        row.exceed_fraction = static_cast<double>(exceed) / static_cast<double>(n);
        row.se = binomial_se(exceed, n);
        row.bound = 2.0 * start / std::sqrt(y);
        row.within = row.exceed_fraction <= row.bound + 3.0 * row.se;
        rep.all_within = rep.all_within && row.within;
        rep.rows.push_back(row);
    }
    return rep;
}

AreaControlReport area_control_check(double planar_gap, double a0, double t, std::size_t n,
                                     std::size_t steps, std::uint64_t master_seed,
                                     unsigned threads) {
    if (!(planar_gap >= 0.0)) throw DomainError("area_control_check: gap must be >= 0");
    if (steps == 0) throw PreconditionError("area_control_check: steps must be >= 1");
    if (n == 0) throw EmptyInputError("area_control_check: n must be >= 1");
    if (!(t >= std::max(planar_gap * planar_gap, 2.0 * std::abs(a0)))) {
        throw PreconditionError(
            "area_control_check: requires t >= max(planar_gap^2, 2*|a0|)");
    }
    std::vector<double> sups(n, 0.0);
    const double sdt = std::sqrt(t / static_cast<double>(steps));
    parallel_for(n, threads, [&](std::size_t i) {
        static thread_local std::vector<double> g1, g2;
        g1.resize(steps);
        g2.resize(steps);
        NormalStream({master_seed, i, kSimB1, 0}).fill(steps, g1.data());
        NormalStream({master_seed, i, kSimB2, 0}).fill(steps, g2.data());
        // Mirrored pair about zero: copies at +/- b2, difference 2*b2,
        // frozen once the copies meet.
        double b2 = 0.5 * planar_gap;
        double A = a0;
        double sup = std::abs(a0);
        for (std::size_t k = 0; k < steps; ++k) {
            A -= 4.0 * b2 * (sdt * g1[k]);
            sup = std::max(sup, std::abs(A));
            b2 += sdt * g2[k];
            if (b2 <= 0.0) break;  // met: the difference is frozen afterwards
        }
        sups[i] = sup;
    });
    RunningMoments mom;
    for (double s : sups) mom.add(s);
    AreaControlReport rep;
    rep.planar_gap = planar_gap;
    rep.a0 = a0;
    rep.t = t;
    rep.n = n;
    rep.mean_sup = mom.mean();
    rep.se = n > 1 ? std::sqrt(mom.variance() / static_cast<double>(n)) : 0.0;
    const double denom = std::abs(a0) + planar_gap * std::sqrt(t);
    rep.fitted_c = denom > 0.0 ? rep.mean_sup / denom : 0.0;
    return rep;
}

namespace {

/// Observer tracking the first copy's planar displacement suprema over grid
/// nodes with time at most `cap`, asking the engine to stop once the cap is
/// fully covered (the truncated moments never look past it).
class PlanarSupObserver final : public TrajectoryObserver {
public:
    explicit PlanarSupObserver(double cap) : cap_(cap) {}
    double sup1{0.0};
    double sup2{0.0};

    bool on_segment(const SegmentView& seg) override {
        const std::vector<double>& b1 = *seg.b1;
        const std::vector<double>& b2 = *seg.b2;
        if (!have_origin_) {
            o1_ = b1.front();
            o2_ = b2.front();
            have_origin_ = true;
        }
        for (std::size_t i = 0; i < b1.size(); ++i) {
            if (seg.grid->node(i) > cap_) break;
            sup1 = std::max(sup1, std::abs(b1[i] - o1_));
            sup2 = std::max(sup2, std::abs(b2[i] - o2_));
        }
        return seg.grid->end() < cap_;
    }

private:
    double cap_;
    double o1_{0.0}, o2_{0.0};
    bool have_origin_{false};
};

/// max/min over the positive entries of a family (0 when there are none).
double positive_spread(const std::vector<double>& values) {
    double mx = 0.0, mn = kInf;
    for (double v : values) {
        if (v > 0.0) {
            mx = std::max(mx, v);
            mn = std::min(mn, v);
        }
    }
    return mn < kInf ? mx / mn : 0.0;
}

}  // namespace

MomentScalingReport moment_scaling_check(const std::vector<double>& gaps, std::size_t n,
                                         std::size_t steps_per_interval,
                                         std::uint64_t master_seed, unsigned threads) {
    if (gaps.empty()) throw EmptyInputError("moment_scaling_check: no gaps");
    for (double g : gaps) {
        if (!(g >= 0.0)) throw DomainError("moment_scaling_check: gaps must be >= 0");
    }
    if (n == 0) throw EmptyInputError("moment_scaling_check: n must be >= 1");
    constexpr double kCap = 1.0;
    MomentScalingReport rep;
    rep.gaps = gaps;
    rep.families.resize(6);
    rep.families[0].name = "tau_capped_sq";
    rep.families[1].name = "sup_b1_fourth";
    rep.families[2].name = "sup_b2_fourth";
    rep.families[3].name = "tau_capped_sq_over_gap";
    rep.families[4].name = "sup_b1_fourth_over_tau_sq";
    rep.families[5].name = "sup_b2_fourth_over_tau_sq";
    for (std::size_t gi = 0; gi < gaps.size(); ++gi) {
        const double g = gaps[gi];
        if (g == 0.0) {
            // Coincident area coordinates couple instantly; every truncated
            // moment vanishes and no ratio is meaningful.
            for (int f = 0; f < 6; ++f) rep.families[f].values.push_back(0.0);
            continue;
        }
        CouplingConfig cfg;
        cfg.strategy = Strategy::area_only_dyadic;
        cfg.steps_per_interval = steps_per_interval;
        cfg.record_until = 0.0;
        // Interval ends sit at g*(2^{k+1} - 1); budget enough intervals (and
        // horizon) for the run to cover [0, cap] before any censoring, so the
        // capped coupling time of a censored run is exactly the cap.
        int k = 0;
        while (k < 62 && g * (std::ldexp(2.0, k) - 1.0) < 2.0 * kCap) ++k;
        cfg.max_dyadic_index = k;
        cfg.horizon = std::max(8.0 * kCap, 4.0 * g);
        cfg.validate();

        const GroupPoint from{0.0, 0.0, g};
        std::vector<double> tau2(n, 0.0), s1(n, 0.0), s2(n, 0.0);
        parallel_for(n, threads, [&](std::size_t i) {
            PlanarSupObserver obs(kCap);
            const CouplingOutcome o =
                couple(from, identity(), cfg, SeedKey{master_seed + gi, i}, &obs);
            if (!o.coupled && o.censor_time < kCap) {
                throw SolverError("moment_scaling_check: run censored below the cap");
            }
            const double tc = o.coupled ? std::min(o.tau, kCap) : kCap;
            tau2[i] = tc * tc;
            s1[i] = obs.sup1 * obs.sup1 * obs.sup1 * obs.sup1;
            s2[i] = obs.sup2 * obs.sup2 * obs.sup2 * obs.sup2;
        });
        const double dn = static_cast<double>(n);
        double mt2 = 0.0, m1 = 0.0, m2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mt2 += tau2[i];
            m1 += s1[i];
            m2 += s2[i];
        }
        mt2 /= dn;
        m1 /= dn;
        m2 /= dn;
        rep.families[0].values.push_back(mt2);
        rep.families[1].values.push_back(m1);
        rep.families[2].values.push_back(m2);
        rep.families[3].values.push_back(mt2 / std::min(g, 1.0));
        rep.families[4].values.push_back(mt2 > 0.0 ? m1 / mt2 : 0.0);
        rep.families[5].values.push_back(mt2 > 0.0 ? m2 / mt2 : 0.0);
    }
    rep.max_spread = 0.0;
    for (std::size_t f = 0; f < rep.families.size(); ++f) {
        rep.families[f].spread = positive_spread(rep.families[f].values);
        if (f >= 3) rep.max_spread = std::max(rep.max_spread, rep.families[f].spread);
    }
    return rep;
}

namespace {

/// Observer detecting the first grid time at which the first copy leaves the
/// quasi-distance ball around `center`.
class ExitObserver final : public TrajectoryObserver {
public:
    ExitObserver(const GroupPoint& center, double radius)
        : center_(center), radius_(radius) {}
    double exit_time{std::numeric_limits<double>::infinity()};

    bool on_segment(const SegmentView& seg) override {
        const std::vector<double>& b1 = *seg.b1;
        const std::vector<double>& b2 = *seg.b2;
        const std::vector<double>& x3 = *seg.x3;
        for (std::size_t i = 0; i < b1.size(); ++i) {
            const GroupPoint p{b1[i], b2[i], x3[i]};
            if (rho(center_, p) >= radius_) {
                exit_time = seg.grid->node(i);
                return false;
            }
        }
        return true;
    }

private:
    GroupPoint center_;
    double radius_;
};

}  // namespace

ExitReport exit_experiment(double radius, const std::vector<double>& offsets,
                           ExitVariant variant, std::size_t n, const CouplingConfig& base,
                           std::uint64_t master_seed, unsigned threads) {
    if (!(radius > 0.0)) throw DomainError("exit_experiment: radius must be positive");
    if (offsets.empty()) throw EmptyInputError("exit_experiment: no offsets");
    if (n == 0) throw EmptyInputError("exit_experiment: n must be >= 1");
    for (double off : offsets) {
        if (!(off > 0.0 && off < radius / 32.0)) {
            throw PreconditionError("exit_experiment: offsets must satisfy 0 < offset < radius/32");
        }
        // Coupling-theorem hypotheses on the constructed start pair.
        if (variant == ExitVariant::planar && !(off <= 1.0)) {
            throw PreconditionError("exit_experiment: planar variant requires |b - b_tilde| = offset <= 1");
        }
        if (variant == ExitVariant::area && !(off * off <= 0.5)) {
            throw PreconditionError("exit_experiment: area variant requires |A(0)| = offset^2 <= 1/2");
        }
    }
    CouplingConfig cfg = base;
    cfg.strategy = Strategy::nonmarkovian_two_step;
    cfg.record_until = 0.0;
    cfg.max_dyadic_index = std::max(cfg.max_dyadic_index, 30);
    cfg.validate();
    ExitReport rep;
    rep.radius = radius;
    rep.variant = variant;
    for (std::size_t oi = 0; oi < offsets.size(); ++oi) {
        const double off = offsets[oi];
        const GroupPoint from = identity();
        const GroupPoint to = variant == ExitVariant::planar ? GroupPoint{0.0, off, 0.0}
                                                             : GroupPoint{0.0, 0.0, off * off};
        const GroupPoint center = reduce_to_common_b1(from, to).p;
        std::vector<unsigned char> flags(n, 0);  // 0 none, 1 event, 2 undetermined
        parallel_for(n, threads, [&](std::size_t i) {
            ExitObserver obs(center, radius);
            const CouplingOutcome o =
                couple(from, to, cfg, SeedKey{master_seed + oi, i}, &obs);
            if (obs.exit_time < kInf) {
                const bool exit_first = o.coupled ? obs.exit_time < o.tau : true;
                flags[i] = exit_first ? 1 : 0;
            } else {
                flags[i] = o.coupled ? 0 : 2;
            }
        });
        ExitRow row;
        row.offset = off;
        row.n = n;
        for (unsigned char f : flags) {
            if (f == 1) ++row.events;
            if (f == 2) ++row.undetermined;
        }
        const std::size_t det = n - row.undetermined;
        row.p_hat = det > 0 ? static_cast<double>(row.events) / static_cast<double>(det) : 0.0;
        row.se = det > 0 ? binomial_se(row.events, det) : 0.0;
        row.ratio = row.p_hat / off;
        rep.rows.push_back(row);
    }
    double rmax = 0.0, rmin = kInf;
    for (const ExitRow& r : rep.rows) {
        rmax = std::max(rmax, r.ratio);
        rmin = std::min(rmin, r.ratio);
    }
    rep.max_ratio_spread = rmin > 0.0 ? rmax / rmin : kInf;
    return rep;
}

std::vector<LiouvilleRow> liouville_demo(const GroupPoint& from, const GroupPoint& to,
                                         const std::vector<double>& times, std::size_t n,
                                         const CouplingConfig& cfg,
                                         std::uint64_t master_seed, unsigned threads) {
    if (times.empty()) throw EmptyInputError("liouville_demo: no times");
    const double dx = from.x - to.x;
    const double dy = from.y - to.y;
    const double planar_gap2 = dx * dx + dy * dy;
    const AlignedPair al = reduce_to_common_b1(from, to);
    const double a0 = al.p.z - al.q.z + al.p.x * (al.q.y - al.p.y);
    // Coupling-theorem hypotheses on the start pair.
    if (!(std::sqrt(planar_gap2) <= 1.0)) {
        throw PreconditionError("liouville_demo: requires |b - b_tilde| <= 1");
    }
    if (!(std::abs(a0) <= 0.5)) {
        throw PreconditionError("liouville_demo: requires |A(0)| <= 1/2");
    }
    const double t_min = std::max({planar_gap2, 2.0 * std::abs(a0), 1.0});
    for (double t : times) {
        if (!(t >= t_min)) {
            throw PreconditionError(
                "liouville_demo: each t must satisfy t >= max(planar_gap^2, 2*|A(0)|, 1)");
        }
    }
    const std::vector<CouplingOutcome> outcomes =
        run_coupling_ensemble(from, to, cfg, n, master_seed, threads);
    const std::vector<TailPoint> tail = estimate_tail(outcomes, times);
    std::vector<LiouvilleRow> rows;
    rows.reserve(tail.size());
    for (const TailPoint& p : tail) {
        LiouvilleRow r;
        r.t = p.t;
        r.p_tail = p.p;
        r.envelope = 2.0 * p.p;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace heis
