// Command-line front end: distance queries, path dumps, coupling runs,
// total-variation experiments, integral-tail checks, exit experiments and
// the built-in verification suites.
//
// Machine-readable reports go to stdout as JSON; short human summaries go to
// stderr.  Outputs are pure functions of the configuration (seed included,
// thread count excluded), so repeated runs are byte-identical.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "heiscouple/analysis.hpp"
#include "heiscouple/coupling.hpp"
#include "heiscouple/errors.hpp"
#include "heiscouple/geometry.hpp"
#include "heiscouple/grid.hpp"
#include "heiscouple/paths.hpp"
#include "heiscouple/rng.hpp"
#include "heiscouple/stats.hpp"
#include "heiscouple/verify.hpp"

namespace {

using ordered_json = nlohmann::ordered_json;
using namespace heis;

GroupPoint parse_point(const std::string& text) {
    std::vector<double> parts;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string tok =
            text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw PreconditionError("invalid point syntax: '" + text +
                                    "' (expected three comma-separated numbers x,y,z)");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (parts.size() != 3) {
        throw PreconditionError("invalid point syntax: '" + text +
                                "' (expected three comma-separated numbers x,y,z)");
    }
    return {parts[0], parts[1], parts[2]};
}

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string tok =
            text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw PreconditionError(std::string("invalid ") + what + " list: '" + text +
                                    "' (expected comma-separated numbers)");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) {
        throw PreconditionError(std::string("empty ") + what + " list");
    }
    return out;
}

std::string num17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

ordered_json point_json(const GroupPoint& p) {
    return ordered_json::array({p.x, p.y, p.z});
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << content;
    if (!out) throw std::runtime_error("failed writing output file: " + path);
}

/// Probe times 2^k - 1 for k = 2..k_hi with k_hi chosen so every probe lies
/// strictly inside the horizon.
std::vector<double> probe_times(double horizon) {
    int k_hi = 2;
    while (k_hi < 20 && std::ldexp(1.0, k_hi + 2) - 1.0 < horizon) ++k_hi;
    return dyadic_times(2, k_hi + 1);
}

// ---------------------------------------------------------------------------

struct GroupArgs {
    std::string dist;
    std::string from{"0,0,0"};
    std::string to{"0,0,0"};
    bool mul{false};
    bool inv{false};
};

int run_group(const GroupArgs& a) {
    const GroupPoint from = parse_point(a.from);
    const GroupPoint to = parse_point(a.to);
    bool did = false;
    if (!a.dist.empty()) {
        const double v = a.dist == "cc" ? cc_distance(from, to) : rho(from, to);
        std::cout << num17(v) << "\n";
        did = true;
    }
    if (a.mul) {
        const GroupPoint p = multiply(from, to);
        std::cout << num17(p.x) << "," << num17(p.y) << "," << num17(p.z) << "\n";
        did = true;
    }
    if (a.inv) {
        const GroupPoint p = inverse(from);
        std::cout << num17(p.x) << "," << num17(p.y) << "," << num17(p.z) << "\n";
        did = true;
    }
    if (!did) {
        throw PreconditionError("group: choose at least one of --dist, --mul, --inv");
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string start{"0,0,0"};
    double t{1.0};
    std::size_t steps{2048};
    std::size_t n{1};
    std::uint64_t seed{1};
    std::string out;
};

int run_simulate(const SimulateArgs& a) {
    if (!(a.t > 0.0)) throw PreconditionError("simulate: requires --t > 0");
    if (a.steps == 0) throw PreconditionError("simulate: requires --steps >= 1");
    if (a.n == 0) throw PreconditionError("simulate: requires --n >= 1");
    const GroupPoint start = parse_point(a.start);
    ordered_json config;
    config["command"] = "simulate";
    config["start"] = point_json(start);
    config["t"] = a.t;
    config["steps"] = a.steps;
    config["n"] = a.n;
    config["master_seed"] = a.seed;

    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!a.out.empty()) {
        file.open(a.out, std::ios::binary);
        if (!file) throw std::runtime_error("cannot open output file: " + a.out);
        os = &file;
    }
    *os << "# config: " << config.dump() << "\n";
    *os << "traj,step,time,x,y,z\n";
    const TimeGrid grid{0.0, a.t / static_cast<double>(a.steps), a.steps};
    for (std::size_t i = 0; i < a.n; ++i) {
        NormalStream n1({a.seed, i, kSimB1, 0});
        NormalStream n2({a.seed, i, kSimB2, 0});
        const ScalarPath b1 = sample_bm(grid, start.x, n1);
        const ScalarPath b2 = sample_bm(grid, start.y, n2);
        const ScalarPath x3 = levy_area(b1, b2, start.z);
        for (std::size_t k = 0; k <= grid.steps; ++k) {
            *os << i << "," << k << "," << num17(grid.node(k)) << ","
                << num17(b1.values[k]) << "," << num17(b2.values[k]) << ","
                << num17(x3.values[k]) << "\n";
        }
    }
    if (os == &file && !file) throw std::runtime_error("failed writing: " + a.out);
    std::cerr << "simulate: wrote " << a.n << " path(s) of " << a.steps << " steps\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct CoupleArgs {
    std::string from{"0,0,1"};
    std::string to{"0,0,0"};
    std::size_t n{10000};
    double horizon{4095.0};
    std::size_t steps{2048};
    int max_dyadic{11};
    std::string strategy{"nonmarkovian_two_step"};
    std::uint64_t seed{1};
    unsigned threads{0};
    std::string out;
    bool fit{false};
};

int run_couple(const CoupleArgs& a) {
    const GroupPoint from = parse_point(a.from);
    const GroupPoint to = parse_point(a.to);
    CouplingConfig cfg;
    cfg.strategy = strategy_from_string(a.strategy);
    cfg.steps_per_interval = a.steps;
    cfg.max_dyadic_index = a.max_dyadic;
    cfg.horizon = a.horizon;
    cfg.record_until = 0.0;
    cfg.validate();
    if (a.n == 0) throw PreconditionError("couple: requires --n >= 1");

    ordered_json config;
    config["command"] = "couple";
    config["from"] = point_json(from);
    config["to"] = point_json(to);
    config["n"] = a.n;
    config["horizon"] = a.horizon;
    config["steps_per_interval"] = a.steps;
    config["max_dyadic_index"] = a.max_dyadic;
    config["strategy"] = a.strategy;
    config["master_seed"] = a.seed;

    const std::vector<CouplingOutcome> outcomes =
        run_coupling_ensemble(from, to, cfg, a.n, a.seed, a.threads);
    const std::vector<double> times = probe_times(a.horizon);
    const std::vector<TailPoint> tail = estimate_tail(outcomes, times);

    std::size_t coupled = 0;
    double tau_sum = 0.0;
    for (const CouplingOutcome& o : outcomes) {
        if (o.coupled) {
            ++coupled;
            tau_sum += o.tau;
        }
    }
    ordered_json rep;
    rep["config"] = config;
    rep["coupled_fraction"] = static_cast<double>(coupled) / static_cast<double>(a.n);
    rep["mean_tau_coupled"] =
        coupled > 0 ? ordered_json(tau_sum / static_cast<double>(coupled))
                    : ordered_json(nullptr);
    ordered_json jt = ordered_json::array();
    for (const TailPoint& p : tail) {
        ordered_json row;
        row["t"] = p.t;
        row["p"] = p.p;
        row["se"] = p.se;
        row["survivors"] = p.survivors;
        row["n"] = p.n;
        jt.push_back(row);
    }
    rep["tail"] = jt;
    if (a.fit) {
        const PowerLawFit f = fit_power_law(tail);
        ordered_json jf;
        jf["slope"] = f.slope;
        jf["slope_se"] = f.slope_se;
        jf["intercept"] = f.intercept;
        jf["points_used"] = f.points_used;
        rep["fit"] = jf;
        std::cerr << "couple: coupled " << coupled << "/" << a.n << ", fitted slope "
                  << f.slope << " (se " << f.slope_se << ")\n";
    } else {
        std::cerr << "couple: coupled " << coupled << "/" << a.n << "\n";
    }
    std::cout << rep.dump(2) << "\n";

    if (!a.out.empty()) {
        std::string jsonl = ordered_json{{"config", config}}.dump() + "\n";
        for (const CouplingOutcome& o : outcomes) {
            ordered_json row;
            row["traj"] = o.seed.trajectory;
            row["coupled"] = o.coupled;
            row["tau"] = o.coupled ? ordered_json(o.tau) : ordered_json(nullptr);
            row["censor_time"] = o.censor_time;
            row["t1"] = o.t1_reached ? ordered_json(o.t1) : ordered_json(nullptr);
            row["role_swapped"] = o.role_swapped;
            row["dyadic_intervals_used"] = o.dyadic_intervals_used;
            jsonl += row.dump() + "\n";
        }
        write_file(a.out + ".outcomes.jsonl", jsonl);
        std::string csv = "# config: " + config.dump() + "\nt,p,se,survivors,n\n";
        for (const TailPoint& p : tail) {
            csv += num17(p.t) + "," + num17(p.p) + "," + num17(p.se) + "," +
                   std::to_string(p.survivors) + "," + std::to_string(p.n) + "\n";
        }
        write_file(a.out + ".tail.csv", csv);
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct TvArgs {
    double a_diff{1.0};
    double t{2.0};
    std::size_t n{100000};
    std::size_t bins{201};
    std::size_t steps{2048};
    std::uint64_t seed{1};
    unsigned threads{0};
    std::string out;
};

int run_tv(const TvArgs& a) {
    const TvExperimentReport r =
        run_tv_experiment(a.a_diff, a.t, a.n, a.steps, a.seed, a.threads, a.bins);
    ordered_json config;
    config["command"] = "tv";
    config["a_diff"] = a.a_diff;
    config["t"] = a.t;
    config["n"] = a.n;
    config["bins"] = a.bins;
    config["steps"] = a.steps;
    config["master_seed"] = a.seed;
    ordered_json rep;
    rep["config"] = config;
    rep["empirical"] = r.empirical;
    rep["analytic_lower"] = r.analytic_lower;
    rep["closed_form"] = r.closed_form;
    rep["abs_error"] = std::abs(r.empirical - r.analytic_lower);
    ordered_json scan = ordered_json::array();
    std::string csv = "# config: " + config.dump() + "\nt,closed_form\n";
    for (int j = -1; j <= 12; ++j) {
        const double tt = std::ldexp(1.0, j);
        const double lower = tv_lower_closed_form(a.a_diff, tt);
        ordered_json row;
        row["t"] = tt;
        row["lower"] = lower;
        scan.push_back(row);
        csv += num17(tt) + "," + num17(lower) + "\n";
    }
    rep["scan"] = scan;
    std::cout << rep.dump(2) << "\n";
    std::cerr << "tv: empirical " << r.empirical << " vs analytic lower "
              << r.analytic_lower << "\n";
    if (!a.out.empty()) {
        write_file(a.out + ".report.json", rep.dump(2) + "\n");
        write_file(a.out + ".scan.csv", csv);
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct TailLemmaArgs {
    double b{1.0};
    std::string y{"1,4,16,64"};
    std::size_t n{100000};
    double dt{0.01};
    double horizon{1000.0};
    std::uint64_t seed{1};
    unsigned threads{0};
    std::string out;
};

int run_tail_lemma(const TailLemmaArgs& a) {
    const std::vector<double> thresholds = parse_list(a.y, "threshold");
    const IntegralTailReport r =
        lemma_tail_check(a.b, thresholds, a.n, a.dt, a.horizon, a.seed, a.threads);
    ordered_json config;
    config["command"] = "tail-lemma";
    config["b"] = a.b;
    config["y"] = thresholds;
    config["n"] = a.n;
    config["dt"] = a.dt;
    config["horizon"] = a.horizon;
    config["master_seed"] = a.seed;
    ordered_json rep;
    rep["config"] = config;
    rep["censored_fraction"] = r.censored_fraction;
    rep["censored_gate"] = r.censored_gate;
    rep["censor_ok"] = r.censor_ok;
    rep["all_within"] = r.all_within;
    ordered_json rows = ordered_json::array();
    for (const IntegralTailRow& row : r.rows) {
        ordered_json j;
        j["y"] = row.y;
        j["exceed_fraction"] = row.exceed_fraction;
        j["se"] = row.se;
        j["bound"] = row.bound;
        j["within"] = row.within;
        rows.push_back(j);
    }
    rep["rows"] = rows;
    std::cout << rep.dump(2) << "\n";
    std::cerr << "tail-lemma: all_within=" << (r.all_within ? "yes" : "no")
              << " censored_fraction=" << r.censored_fraction << "\n";
    if (!a.out.empty()) write_file(a.out + ".report.json", rep.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------------------

struct ExitArgs {
    double delta{1.0};
    std::string offsets{"0.00390625,0.0078125,0.015625"};
    std::string variant{"planar"};
    std::size_t n{100000};
    std::size_t steps{2048};
    double horizon{4095.0};
    std::uint64_t seed{1};
    unsigned threads{0};
    std::string out;
};

int run_exit(const ExitArgs& a) {
    const std::vector<double> offsets = parse_list(a.offsets, "offset");
    const ExitVariant variant =
        a.variant == "planar" ? ExitVariant::planar : ExitVariant::area;
    CouplingConfig base;
    base.strategy = Strategy::nonmarkovian_two_step;
    base.steps_per_interval = a.steps;
    base.horizon = a.horizon;
    base.record_until = 0.0;
    const ExitReport r =
        exit_experiment(a.delta, offsets, variant, a.n, base, a.seed, a.threads);
    ordered_json config;
    config["command"] = "exit";
    config["delta"] = a.delta;
    config["offsets"] = offsets;
    config["variant"] = a.variant;
    config["n"] = a.n;
    config["steps_per_interval"] = a.steps;
    config["horizon"] = a.horizon;
    config["master_seed"] = a.seed;
    ordered_json rep;
    rep["config"] = config;
    ordered_json rows = ordered_json::array();
    for (const ExitRow& row : r.rows) {
        ordered_json j;
        j["offset"] = row.offset;
        j["n"] = row.n;
        j["events"] = row.events;
        j["undetermined"] = row.undetermined;
        j["p_hat"] = row.p_hat;
        j["se"] = row.se;
        j["ratio"] = row.ratio;
        rows.push_back(j);
    }
    rep["rows"] = rows;
    rep["max_ratio_spread"] = std::isfinite(r.max_ratio_spread)
                                  ? ordered_json(r.max_ratio_spread)
                                  : ordered_json(nullptr);
    std::cout << rep.dump(2) << "\n";
    std::cerr << "exit: " << r.rows.size() << " offsets, ratio spread "
              << r.max_ratio_spread << "\n";
    if (!a.out.empty()) write_file(a.out + ".report.json", rep.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
    std::string suite{"quick"};
    std::uint64_t seed{7};
    unsigned threads{0};
    std::string out;
};

int run_verify(const VerifyArgs& a) {
    VerifySettings settings;
    settings.suite = a.suite;
    settings.seed = a.seed;
    settings.threads = a.threads;
    const VerifyReport r = run_verify_suite(settings);
    ordered_json rep;
    rep["command"] = "verify";
    rep["suite"] = r.suite;
    rep["seed"] = r.seed;
    rep["all_pass"] = r.all_pass;
    ordered_json checks = ordered_json::array();
    for (const CheckResult& c : r.checks) {
        ordered_json j;
        j["name"] = c.name;
        j["pass"] = c.pass;
        j["details"] = c.details;
        checks.push_back(j);
        std::fprintf(stderr, "%-16s %-4s %s\n", c.name.c_str(), c.pass ? "ok" : "FAIL",
                     c.details.c_str());
    }
    rep["checks"] = checks;
    std::cout << rep.dump(2) << "\n";
    if (!a.out.empty()) write_file(a.out + ".report.json", rep.dump(2) + "\n");
    return r.all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------

/// Bound storage for every subcommand's options.
struct CliOptions {
    GroupArgs group;
    SimulateArgs simulate;
    CoupleArgs couple;
    TvArgs tv;
    TailLemmaArgs tail_lemma;
    ExitArgs exit;
    VerifyArgs verify;
    std::string config_path;
};

struct SubApps {
    CLI::App* group;
    CLI::App* simulate;
    CLI::App* couple;
    CLI::App* tv;
    CLI::App* tail_lemma;
    CLI::App* exit_cmd;
    CLI::App* verify;
};

/// Registers every subcommand and option on `app`, bound to storage in `o`.
SubApps wire_cli(CLI::App& app, CliOptions& o) {
    GroupArgs& ga = o.group;
    SimulateArgs& sa = o.simulate;
    CoupleArgs& ca = o.couple;
    TvArgs& ta = o.tv;
    TailLemmaArgs& la = o.tail_lemma;
    ExitArgs& ea = o.exit;
    VerifyArgs& va = o.verify;

    app.require_subcommand(1);

    auto* group = app.add_subcommand("group", "Distance and group-arithmetic queries");
    group->add_option("--dist", ga.dist, "Distance to print: cc or rho")
        ->check(CLI::IsMember({"cc", "rho"}));
    group->add_option("--from", ga.from, "First point x,y,z")->capture_default_str();
    group->add_option("--to", ga.to, "Second point x,y,z")->capture_default_str();
    group->add_flag("--mul", ga.mul, "Print the group product from * to");
    group->add_flag("--inv", ga.inv, "Print the group inverse of --from");

    auto* sim = app.add_subcommand("simulate", "Dump sampled group Brownian paths as CSV");
    sim->add_option("--start", sa.start, "Start point x,y,z")->capture_default_str();
    sim->add_option("--t", sa.t, "Path duration")->capture_default_str();
    sim->add_option("--steps", sa.steps, "Number of grid steps")->capture_default_str();
    sim->add_option("--n", sa.n, "Number of paths")->capture_default_str();
    sim->add_option("--seed", sa.seed, "Master seed")->capture_default_str();
    sim->add_option("--out", sa.out, "Output CSV path (default: stdout)");

    auto* cp = app.add_subcommand("couple", "Monte Carlo coupling runs and tail curves");
    cp->add_option("--from", ca.from, "First start point x,y,z")->capture_default_str();
    cp->add_option("--to", ca.to, "Second start point x,y,z")->capture_default_str();
    cp->add_option("--n", ca.n, "Number of trajectories")->capture_default_str();
    cp->add_option("--horizon", ca.horizon, "Censoring horizon")->capture_default_str();
    cp->add_option("--steps-per-interval", ca.steps, "Grid steps per coupling interval")
        ->capture_default_str();
    cp->add_option("--max-dyadic-index", ca.max_dyadic, "Last dyadic interval index")
        ->capture_default_str();
    cp->add_option("--strategy", ca.strategy,
                   "synchronous | reflection_planar | nonmarkovian_two_step | "
                   "area_only_dyadic")
        ->capture_default_str();
    cp->add_option("--seed", ca.seed, "Master seed")->capture_default_str();
    cp->add_option("--threads", ca.threads,
                   "Worker threads (0: HEISCOUPLE_THREADS or hardware)")
        ->capture_default_str();
    cp->add_option("--out", ca.out, "Output prefix for .outcomes.jsonl and .tail.csv");
    cp->add_flag("--fit", ca.fit, "Fit a power law to the tail curve");

    auto* tv = app.add_subcommand("tv", "Total-variation lower bound: scan and empirical");
    tv->add_option("--a-diff", ta.a_diff, "Area offset between the two laws")
        ->capture_default_str();
    tv->add_option("--t", ta.t, "Time of comparison")->capture_default_str();
    tv->add_option("--n", ta.n, "Samples per ensemble")->capture_default_str();
    tv->add_option("--bins", ta.bins, "Histogram bins")->capture_default_str();
    tv->add_option("--steps", ta.steps, "Grid steps per path")->capture_default_str();
    tv->add_option("--seed", ta.seed, "Master seed")->capture_default_str();
    tv->add_option("--threads", ta.threads,
                   "Worker threads (0: HEISCOUPLE_THREADS or hardware)")
        ->capture_default_str();
    tv->add_option("--out", ta.out, "Output prefix for .report.json and .scan.csv");

    auto* tl = app.add_subcommand("tail-lemma",
                                  "Exceedance of the absorbed stochastic integral");
    tl->add_option("--b", la.b, "Start level of the absorbed coordinate")
        ->capture_default_str();
    tl->add_option("--y", la.y, "Comma-separated thresholds")->capture_default_str();
    tl->add_option("--n", la.n, "Number of trajectories")->capture_default_str();
    tl->add_option("--dt", la.dt, "Grid step size")->capture_default_str();
    tl->add_option("--horizon", la.horizon, "Censoring horizon")->capture_default_str();
    tl->add_option("--seed", la.seed, "Master seed")->capture_default_str();
    tl->add_option("--threads", la.threads,
                   "Worker threads (0: HEISCOUPLE_THREADS or hardware)")
        ->capture_default_str();
    tl->add_option("--out", la.out, "Output prefix for .report.json");

    auto* ex = app.add_subcommand("exit", "Exit-before-coupling probability experiment");
    ex->add_option("--delta", ea.delta, "Ball radius")->capture_default_str();
    ex->add_option("--offsets", ea.offsets, "Comma-separated start offsets")
        ->capture_default_str();
    ex->add_option("--variant", ea.variant, "Start separation type: planar or area")
        ->check(CLI::IsMember({"planar", "area"}))
        ->capture_default_str();
    ex->add_option("--n", ea.n, "Trajectories per offset")->capture_default_str();
    ex->add_option("--steps-per-interval", ea.steps, "Grid steps per coupling interval")
        ->capture_default_str();
    ex->add_option("--horizon", ea.horizon, "Censoring horizon")->capture_default_str();
    ex->add_option("--seed", ea.seed, "Master seed")->capture_default_str();
    ex->add_option("--threads", ea.threads,
                   "Worker threads (0: HEISCOUPLE_THREADS or hardware)")
        ->capture_default_str();
    ex->add_option("--out", ea.out, "Output prefix for .report.json");

    auto* vf = app.add_subcommand("verify", "Run the built-in verification suite");
    vf->add_option("--suite", va.suite, "Suite preset: quick or full")
        ->check(CLI::IsMember({"quick", "full"}))
        ->capture_default_str();
    vf->add_option("--seed", va.seed, "Master seed")->capture_default_str();
    vf->add_option("--threads", va.threads,
                   "Worker threads (0: HEISCOUPLE_THREADS or hardware)")
        ->capture_default_str();
    vf->add_option("--out", va.out, "Output prefix for .report.json");

    // Every option lives on a subcommand, so that is where the config file
    // option has to live too.
    for (CLI::App* sub : {group, sim, cp, tv, tl, ex, vf}) {
        sub->add_option("--config", o.config_path,
                        "Read option defaults from a TOML file (explicit flags win)");
    }

    return {group, sim, cp, tv, tl, ex, vf};
}

const CLI::App* parsed_sub(const SubApps& s) {
    for (const CLI::App* sub :
         {s.group, s.simulate, s.couple, s.tv, s.tail_lemma, s.exit_cmd, s.verify}) {
        if (sub->parsed()) return sub;
    }
    return nullptr;
}

int dispatch(const SubApps& s, const CliOptions& o) {
    try {
        if (s.group->parsed()) return run_group(o.group);
        if (s.simulate->parsed()) return run_simulate(o.simulate);
        if (s.couple->parsed()) return run_couple(o.couple);
        if (s.tv->parsed()) return run_tv(o.tv);
        if (s.tail_lemma->parsed()) return run_tail_lemma(o.tail_lemma);
        if (s.exit_cmd->parsed()) return run_exit(o.exit);
        if (s.verify->parsed()) return run_verify(o.verify);
    } catch (const PreconditionError& e) {
        std::cerr << "precondition violated: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

/// Option tokens contributed by a config file: one "--key=value" per
/// top-level entry whose option the command line left unset, so explicit
/// flags always win.  Unknown keys and TOML sections are rejected.
std::vector<std::string> config_tokens(const CLI::App& sub, const std::string& path) {
    const std::vector<CLI::ConfigItem> items = CLI::ConfigTOML{}.from_file(path);
    std::vector<std::string> tokens;
    for (const CLI::ConfigItem& item : items) {
        if (item.name == "++" || item.name == "--") continue;  // section markers
        if (!item.parents.empty()) {
            throw std::runtime_error("config file '" + path +
                                     "': sections are not supported; use top-level "
                                     "key = value entries");
        }
        if (item.name == "config") {
            throw std::runtime_error("config file '" + path +
                                     "': a config file cannot set --config");
        }
        const CLI::Option* op = sub.get_option_no_throw("--" + item.name);
        if (op == nullptr) {
            throw std::runtime_error("config file '" + path + "': unknown option '" +
                                     item.name + "' for subcommand '" + sub.get_name() +
                                     "'");
        }
        if (op->count() > 0) continue;  // given on the command line: the flag wins
        if (item.inputs.size() == 1) {
            tokens.push_back("--" + item.name + "=" + item.inputs.front());
        } else {
            tokens.push_back("--" + item.name);
            tokens.insert(tokens.end(), item.inputs.begin(), item.inputs.end());
        }
    }
    return tokens;
}

constexpr char kCliDescription[] =
    "Brownian motion and explicit couplings on the 3-D Heisenberg group";

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{kCliDescription};
    CliOptions opts;
    const SubApps subs = wire_cli(app, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;  // flag/validation errors are configuration errors
    }

    if (opts.config_path.empty()) return dispatch(subs, opts);

    // Apply the config file as defaults.  CLI11 reads config files only on
    // the top-level command while every option here lives on a subcommand,
    // so re-parse with the file-provided tokens inserted ahead of the
    // explicit ones; config_tokens already dropped every key that was given
    // on the command line, which is what makes explicit flags win.
    const CLI::App* active = parsed_sub(subs);
    if (active == nullptr) return dispatch(subs, opts);
    std::vector<std::string> args;
    try {
        args = config_tokens(*active, opts.config_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    if (args.empty()) return dispatch(subs, opts);  // nothing left to apply

    args.insert(args.begin(), active->get_name());
    for (int i = 2; i < argc; ++i) {
        std::string tok = argv[i];
        if (tok == "--config") {
            ++i;  // drop its path argument with it
            continue;
        }
        if (tok.rfind("--config=", 0) == 0) continue;
        args.push_back(std::move(tok));
    }

    CLI::App reparse{kCliDescription};
    CliOptions merged;
    const SubApps subs2 = wire_cli(reparse, merged);
    std::reverse(args.begin(), args.end());  // App::parse consumes back to front
    try {
        reparse.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        reparse.exit(e);
        return 2;  // bad values in the config file are configuration errors
    }
    return dispatch(subs2, merged);
}
