// Statistical helpers: binomial intervals, weighted power-law fits,
// Kolmogorov–Smirnov and chi-square goodness-of-fit tests, and the standard
// special-function plumbing they need.
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace heis {

/// Two-sided Wilson score interval bounds for k successes in n trials.
struct Interval {
    double lo{0.0};
    double hi{0.0};
};

/// 95% Wilson score interval (z = 1.959963984540054).  Throws
/// EmptyInputError for n == 0 and PreconditionError for k > n.
Interval wilson_interval(std::size_t k, std::size_t n);

/// Plain binomial standard error sqrt(p*(1-p)/n) with p = k/n.
double binomial_se(std::size_t k, std::size_t n);

/// Standard normal CDF.
double std_normal_cdf(double x);

/// CDF of the density sech(pi*z)/1: F(z) = 1/2 + atan(sinh(pi*z))/pi.
double sech_cdf(double z);

/// Quantile of the sech(pi*z) density: F^{-1}(p) = asinh(tan(pi*(p-1/2)))/pi.
/// Throws DomainError unless 0 < p < 1.
double sech_quantile(double p);

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a,x)/Gamma(a).
/// Throws DomainError for a <= 0 or x < 0.
double gamma_q(double a, double x);

/// Kolmogorov survival function Q(lambda) = 2*sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

/// One-sample Kolmogorov–Smirnov test outcome.
struct KsResult {
    double statistic{0.0};
    double p_value{1.0};
    std::size_t n{0};
};

/// One-sample KS test of `samples` against the continuous CDF `cdf`.
/// Sorts a copy of the samples; the p-value uses the asymptotic Kolmogorov
/// distribution with the small-sample effective-n correction.
/// Throws EmptyInputError for an empty sample.
KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Chi-square goodness-of-fit outcome.
struct Chi2Result {
    double statistic{0.0};
    std::size_t df{0};
    double p_value{1.0};
};

/// Chi-square test of observed bin counts against expected probabilities
/// (which must be positive and sum to ~1).  Degrees of freedom are
/// bins - 1.  Throws EmptyInputError for empty input, GridMismatchError if
/// the two vectors differ in length, and DomainError for a nonpositive
/// expected probability.
Chi2Result chi2_test(const std::vector<std::size_t>& observed,
                     const std::vector<double>& expected_probs);

/// One point of a tail curve for power-law fitting.
struct TailPoint {
    double t{0.0};
    double p{0.0};        ///< tail estimate at t
    double se{0.0};       ///< standard error of p
    std::size_t survivors{0};
    std::size_t n{0};
};

/// Weighted least-squares fit of log p against log t.
struct PowerLawFit {
    double slope{0.0};
    double intercept{0.0};   ///< log-scale intercept: log p ~ intercept + slope*log t
    double slope_se{0.0};
    std::size_t points_used{0};
};

/// Fit log p = intercept + slope * log t by least squares with weights
/// 1/se_rel^2 (se_rel = se/p).  Points with fewer than `min_survivors`
/// survivors or with p == 0 are dropped; fewer than 3 usable points raises
/// InsufficientPointsError.
PowerLawFit fit_power_law(const std::vector<TailPoint>& points,
                          std::size_t min_survivors = 50);

/// Running mean/variance accumulator (Welford).
class RunningMoments {
public:
    void add(double x) noexcept;
    std::size_t count() const noexcept { return n_; }
    double mean() const noexcept { return mean_; }
    /// Unbiased sample variance (0 for fewer than 2 observations).
    double variance() const noexcept;

private:
    std::size_t n_{0};
    double mean_{0.0};
    double m2_{0.0};
};

}  // namespace heis
