#pragma once

/// Experiment drivers and distribution-level diagnostics built on top of the
/// coupling engine: total-variation comparisons of the area coordinate,
/// coupling-time tail estimation, stopped-integral tail checks, moment
/// scaling audits, and small-offset exit probabilities.

#include <cstdint>
#include <string>
#include <vector>

#include "heiscouple/coupling.hpp"
#include "heiscouple/geometry.hpp"
#include "heiscouple/stats.hpp"

namespace heis {

/// Density of the area coordinate's distinguished scale family:
/// f(z, t) = (1/t) * sech(pi * z / t).  Throws DomainError for t <= 0.
double area_density(double z, double t);

/// Lower bound on the total-variation distance between the time-t area
/// coordinates of two copies whose area difference starts at `a_diff`,
/// computed by adaptive quadrature of the density difference (half the L1
/// distance).  Throws DomainError for t <= 0.
double tv_lower_analytic(double a_diff, double t);

/// Same quantity in closed form, used as an independent cross-check of the
/// quadrature.  Throws DomainError for t <= 0.
double tv_lower_closed_form(double a_diff, double t);

/// Histogram-based estimate of the total-variation distance (half L1)
/// between two sample sets.  The binning covers the pooled median plus or
/// minus eight pooled interquartile ranges with `bins` equal cells plus two
/// overflow cells.  Throws EmptyInputError if either sample set is empty.
struct TvEstimate {
    double value{0.0};
    std::size_t bins{0};
    std::size_t n_first{0};
    std::size_t n_second{0};
};
TvEstimate empirical_tv(const std::vector<double>& first, const std::vector<double>& second,
                        std::size_t bins = 201);

/// Sample the area coordinate at time t for `n` independent motions started
/// at (0, 0, z0), using `steps` Euler steps of the planar pair.
std::vector<double> simulate_endpoint_areas(double z0, double t, std::size_t steps,
                                            std::size_t n, std::uint64_t master_seed,
                                            unsigned threads);

/// Compare the empirical total-variation distance between two simulated
/// area ensembles (starts differing by a_diff) against the analytic value.
struct TvExperimentReport {
    double a_diff{0.0};
    double t{0.0};
    std::size_t n{0};
    std::size_t steps{0};
    double empirical{0.0};
    double analytic_lower{0.0};
    double closed_form{0.0};
};
TvExperimentReport run_tv_experiment(double a_diff, double t, std::size_t n,
                                     std::size_t steps, std::uint64_t master_seed,
                                     unsigned threads, std::size_t bins = 201);

/// Run `n` independent couplings with trajectory indices 0..n-1.
std::vector<CouplingOutcome> run_coupling_ensemble(const GroupPoint& from,
                                                   const GroupPoint& to,
                                                   const CouplingConfig& cfg, std::size_t n,
                                                   std::uint64_t master_seed,
                                                   unsigned threads);

/// Times 2^k - 1 for k in [k_lo, k_hi].
std::vector<double> dyadic_times(int k_lo, int k_hi);

/// Estimate the coupling-time survival probability at the given times.
/// A trajectory enters the denominator at time t if it either coupled (its
/// coupling time is then known exactly) or was censored no earlier than t;
/// censored trajectories with censor_time >= t count as survivors since
/// their coupling time exceeds the censor time.  Trajectories censored
/// before t carry no information at t and are excluded from both counts.
std::vector<TailPoint> estimate_tail(const std::vector<CouplingOutcome>& outcomes,
                                     const std::vector<double>& times);

/// Tail of the area integral accumulated by a planar motion up to its
/// absorption at zero: the second coordinate starts at `start` and is
/// absorbed at 0; the integral of it against an independent driver is
/// evaluated at the absorption time.  Each threshold y must satisfy
/// y >= start^2 (PreconditionError otherwise).  Runs absorbed later than
/// `horizon` are censored and counted as non-exceeding; the censored
/// fraction is reported alongside.
struct IntegralTailRow {
    double y{0.0};
    double exceed_fraction{0.0};
    double se{0.0};
    double bound{0.0};
    bool within{false};
};
struct IntegralTailReport {
    double start{0.0};
    double step_size{0.0};
    double horizon{0.0};
    std::size_t n{0};
    double censored_fraction{0.0};
    double censored_gate{0.0};
    bool censor_ok{false};
    bool all_within{false};
    std::vector<IntegralTailRow> rows;
};
IntegralTailReport lemma_tail_check(double start, const std::vector<double>& thresholds,
                                    std::size_t n, double step_size, double horizon,
                                    std::uint64_t master_seed, unsigned threads);

/// Growth control of the area difference driven by a mirrored planar pair:
/// simulate A(s) on [0, t] for a pair whose second coordinates start
/// `planar_gap` apart and are reflected about their midpoint (frozen once
/// they meet), starting from area difference a0.  Reports the mean running
/// supremum of |A| and a fitted constant: the ratio of that supremum to
/// |a0| + planar_gap * sqrt(t).  The constant is fitted, not derived.
/// Requires t >= max(planar_gap^2, 2*|a0|) (PreconditionError).
struct AreaControlReport {
    double planar_gap{0.0};
    double a0{0.0};
    double t{0.0};
    std::size_t n{0};
    double mean_sup{0.0};
    double se{0.0};
    double fitted_c{0.0};  ///< fitted, not derived
};
AreaControlReport area_control_check(double planar_gap, double a0, double t, std::size_t n,
                                     std::size_t steps, std::uint64_t master_seed,
                                     unsigned threads);

/// Truncated-moment audit of the pure-area coupling.  For each starting gap
/// g >= 0, couple a motion started at (0, 0, g) with one at the identity and
/// estimate, with tau the coupling time and b the common planar start,
///   E[(tau ^ 1)^2],
///   E[(sup_{t <= tau ^ 1} |B1(t) - b1|)^4],
///   E[(sup_{t <= tau ^ 1} |B2(t) - b2|)^4]
/// (x ^ y denoting min).  The report carries six families, each with one
/// value per gap: the three raw moments above, then their ratio families
///   E[(tau ^ 1)^2] / (g ^ 1)
/// and each fourth-power supremum moment divided by E[(tau ^ 1)^2], which
/// the coupling's moment bounds predict to stay bounded as the gap varies.
/// A gap of exactly zero couples instantly: its raw moments are zero and it
/// is excluded from every `spread`.  `spread` is max/min of a family over
/// its positive entries (0 when none); `max_spread` covers the three ratio
/// families only.  Throws DomainError for negative gaps and EmptyInputError
/// for an empty gap list or n == 0.
struct MomentScalingFamily {
    std::string name;
    std::vector<double> values;
    double spread{0.0};
};
struct MomentScalingReport {
    std::vector<double> gaps;
    std::vector<MomentScalingFamily> families;
    double max_spread{0.0};
};
MomentScalingReport moment_scaling_check(const std::vector<double>& gaps, std::size_t n,
                                         std::size_t steps_per_interval,
                                         std::uint64_t master_seed, unsigned threads);

/// Small-offset exit-before-coupling experiment.  For each offset, couple a
/// motion started at the identity with one started at (0, offset, 0)
/// (planar variant) or (0, 0, offset^2) (area variant), and estimate the
/// probability that the first copy leaves the rho-ball of radius `radius`
/// around its start before the pair couples.  Offsets must satisfy
/// offset < radius / 32 (PreconditionError).
enum class ExitVariant { planar, area };
struct ExitRow {
    double offset{0.0};
    std::size_t n{0};
    std::size_t events{0};
    std::size_t undetermined{0};
    double p_hat{0.0};
    double se{0.0};
    double ratio{0.0};  ///< p_hat / offset
};
struct ExitReport {
    double radius{0.0};
    ExitVariant variant{ExitVariant::planar};
    std::vector<ExitRow> rows;
    double max_ratio_spread{0.0};  ///< max over pairs of ratio_i / ratio_j
};
ExitReport exit_experiment(double radius, const std::vector<double>& offsets,
                           ExitVariant variant, std::size_t n, const CouplingConfig& base,
                           std::uint64_t master_seed, unsigned threads);

/// Oscillation-decay demonstration: for bounded functions invariant under
/// the motion, the gap between values at two starts is controlled by
/// 2 * sup|u| * P(tau > t).  Reports that envelope (sup|u| = 1) at the
/// requested times.  Each t must satisfy
/// t >= max(planar_gap^2, 2*|A(0)|, 1) (PreconditionError).
struct LiouvilleRow {
    double t{0.0};
    double p_tail{0.0};
    double envelope{0.0};  ///< 2 * p_tail
};
std::vector<LiouvilleRow> liouville_demo(const GroupPoint& from, const GroupPoint& to,
                                         const std::vector<double>& times, std::size_t n,
                                         const CouplingConfig& cfg,
                                         std::uint64_t master_seed, unsigned threads);

}  // namespace heis
