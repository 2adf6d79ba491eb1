// Built-in self-check suites: deterministic, seed-keyed batteries of
// geometry, path-law, coupling-rate, total-variation, integral-tail and
// exit-probability checks at two effort presets ("quick" and "full").
//
// Every number a suite reports is a pure function of (suite, seed); thread
// count only changes wall-clock time, never output.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace heis {

/// Settings for one self-check run.
struct VerifySettings {
    std::string suite{"quick"};  ///< "quick" or "full"
    std::uint64_t seed{7};
    unsigned threads{0};  ///< 0: resolve from environment / hardware
};

/// Outcome of a single named check.
struct CheckResult {
    std::string name;
    bool pass{false};
    std::string details;  ///< deterministic one-line summary with key numbers
};

/// Outcome of a whole suite.
struct VerifyReport {
    std::string suite;
    std::uint64_t seed{0};
    bool all_pass{false};
    std::vector<CheckResult> checks;
};

/// Run the named suite.  Throws PreconditionError for an unknown suite name.
VerifyReport run_verify_suite(const VerifySettings& settings);

/// One Kolmogorov–Smirnov row of the marginal-law study.
struct KsStudyRow {
    std::string name;
    std::size_t n{0};
    double statistic{0.0};
    double p_value{0.0};
};

/// One chi-square row of the marginal-law study.
struct Chi2StudyRow {
    std::string name;
    std::size_t n{0};
    double statistic{0.0};
    double p_value{0.0};
};

/// Marginal-law study of the recorded coupling driver paths: KS tests on
/// normalized increments of both copies' second coordinates and the shared
/// first coordinate over the first coupling interval (lags 1, 8, 64), a KS
/// test on the first checkpoint increment, and chi-square tests of the
/// normalized area coordinate against its hyperbolic-secant law at times
/// 1 and 3.  Trajectories start at (0, 0, 1) and target the identity.
struct MarginalsStudy {
    std::vector<KsStudyRow> ks;
    std::vector<Chi2StudyRow> chi2;
};

/// Run the marginal-law study with `n` trajectories at the given interval
/// resolution; each KS test uses at most `cap_per_test` samples.
MarginalsStudy run_marginals_study(std::size_t n, std::size_t steps_per_interval,
                                   std::size_t cap_per_test, std::uint64_t master_seed,
                                   unsigned threads);

}  // namespace heis
