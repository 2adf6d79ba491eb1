#include "heiscouple/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "heiscouple/errors.hpp"

namespace heis {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kZ95 = 1.959963984540054;

/// Regularized lower incomplete gamma by series (for x < a + 1).
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) {
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw SolverError("gamma_q: series failed to converge");
}

/// Regularized upper incomplete gamma by continued fraction (for x >= a + 1).
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) {
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw SolverError("gamma_q: continued fraction failed to converge");
}

}  // namespace

Interval wilson_interval(std::size_t k, std::size_t n) {
    if (n == 0) throw EmptyInputError("wilson_interval: n must be positive");
    if (k > n) throw PreconditionError("wilson_interval: k exceeds n");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = kZ95 * kZ95;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half =
        kZ95 * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    // At the boundary counts the interval endpoints are analytically exact;
    // computing them through center/half would leave roundoff residue.
    const double lo = (k == 0) ? 0.0 : std::max(0.0, center - half);
    const double hi = (k == n) ? 1.0 : std::min(1.0, center + half);
    return {lo, hi};
}

double binomial_se(std::size_t k, std::size_t n) {
    if (n == 0) throw EmptyInputError("binomial_se: n must be positive");
    const double p = static_cast<double>(k) / static_cast<double>(n);
    return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double sech_cdf(double z) { return 0.5 + std::atan(std::sinh(kPi * z)) / kPi; }

double sech_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("sech_quantile: probability must lie strictly in (0,1)");
    }
    return std::asinh(std::tan(kPi * (p - 0.5))) / kPi;
}

double gamma_q(double a, double x) {
    if (!(a > 0.0)) throw DomainError("gamma_q: shape must be positive");
    if (x < 0.0) throw DomainError("gamma_q: argument must be nonnegative");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * static_cast<double>(k) * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-16) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw EmptyInputError("ks_test: empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(std::abs(f - lo), std::abs(hi - f)));
    }
    const double sn = std::sqrt(n);
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    return {d, kolmogorov_q(lambda), samples.size()};
}

Chi2Result chi2_test(const std::vector<std::size_t>& observed,
                     const std::vector<double>& expected_probs) {
    if (observed.empty()) throw EmptyInputError("chi2_test: no bins");
    if (observed.size() != expected_probs.size()) {
        throw GridMismatchError("chi2_test: observed and expected sizes differ");
    }
    std::size_t total = 0;
    for (const std::size_t c : observed) total += c;
    if (total == 0) throw EmptyInputError("chi2_test: zero total count");
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (!(expected_probs[i] > 0.0)) {
            throw DomainError("chi2_test: expected probability must be positive");
        }
        const double e = expected_probs[i] * static_cast<double>(total);
        const double diff = static_cast<double>(observed[i]) - e;
        stat += diff * diff / e;
    }
    const std::size_t df = observed.size() - 1;
    return {stat, df, gamma_q(0.5 * static_cast<double>(df), 0.5 * stat)};
}

PowerLawFit fit_power_law(const std::vector<TailPoint>& points, std::size_t min_survivors) {
    std::vector<double> xs, ys, ws;
    for (const TailPoint& pt : points) {
        if (pt.survivors < min_survivors || !(pt.p > 0.0) || !(pt.se > 0.0)) continue;
        const double se_rel = pt.se / pt.p;
        xs.push_back(std::log(pt.t));
        ys.push_back(std::log(pt.p));
        ws.push_back(1.0 / (se_rel * se_rel));
    }
    if (xs.size() < 3) {
        throw InsufficientPointsError(
            "fit_power_law: need at least 3 usable points, have " +
            std::to_string(xs.size()));
    }
    double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sw += ws[i];
        swx += ws[i] * xs[i];
        swy += ws[i] * ys[i];
        swxx += ws[i] * xs[i] * xs[i];
        swxy += ws[i] * xs[i] * ys[i];
    }
    const double det = sw * swxx - swx * swx;
    if (!(std::abs(det) > 0.0)) {
        throw SolverError("fit_power_law: degenerate design matrix");
    }
    PowerLawFit fit;
    fit.slope = (sw * swxy - swx * swy) / det;
    fit.intercept = (swxx * swy - swx * swxy) / det;
    fit.slope_se = std::sqrt(sw / det);
    fit.points_used = xs.size();
    return fit;
}

void RunningMoments::add(double x) noexcept {
    n_ += 1;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
}

double RunningMoments::variance() const noexcept {
    if (n_ < 2) return 0.0;
    return m2_ / static_cast<double>(n_ - 1);
}

}  // namespace heis
