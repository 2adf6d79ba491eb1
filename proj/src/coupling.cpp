#include "heiscouple/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "heiscouple/errors.hpp"
#include "heiscouple/paths.hpp"

namespace heis {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kInf = std::numeric_limits<double>::infinity();
// exp(-x) for x above this bound is below the smallest uniform draw (2^-54),
// so the bridge-crossing test cannot fire and the draw can be skipped.
// Draws are addressed by step index, so skipping consumes nothing.
constexpr double kBridgeExpCutoff = 37.5;

/// Per-trajectory scratch space.  The sine tables depend only on the step
/// count, never on the interval length, because every interval grid divides
/// its length uniformly.
struct Workspace {
    std::size_t steps;
    std::vector<double> sin_tab;  ///< sin(pi * i / steps)
    std::vector<double> g1_tab;   ///< first sine basis sqrt(2)*sin(pi*i/steps)/pi
    std::vector<double> b1, b2, b2t, w, x3, x3t, a, lam, bridge, normals;

    explicit Workspace(std::size_t S) : steps(S) {
        sin_tab.resize(S + 1);
        g1_tab.resize(S + 1);
        for (std::size_t i = 0; i < S; ++i) {
            sin_tab[i] = std::sin(kPi * static_cast<double>(i) / static_cast<double>(S));
            g1_tab[i] = kSqrt2 * sin_tab[i] / kPi;
        }
        // The endpoint values vanish identically; keep them exact so that the
        // two assembled copies agree bitwise at interval checkpoints.
        sin_tab[S] = 0.0;
        g1_tab[S] = 0.0;
    }

    /// Fill `out` with a Brownian path from `start` (one normal per step).
    void fill_bm(std::vector<double>& out, double dt, double start,
                 const NormalStream& stream) {
        out.resize(steps + 1);
        normals.resize(steps);
        stream.fill(steps, normals.data());
        const double sdt = std::sqrt(dt);
        double v = start;
        out[0] = v;
        for (std::size_t i = 0; i < steps; ++i) {
            v += sdt * normals[i];
            out[i + 1] = v;
        }
    }
};

/// Recording context, present only when an observer was supplied.  Tracks the
/// current absolute coordinates of both copies in the aligned frame.
struct Recorder {
    TrajectoryObserver* obs{nullptr};
    bool stopped{false};
    double b1{0.0}, b2{0.0}, b2t{0.0}, x3{0.0}, x3t{0.0}, a{0.0};

    /// Hand the filled workspace buffers to the observer as one segment.
    /// Returns false once the observer has asked to stop.
    bool emit(Workspace& ws, SegmentPhase phase, int idx, const TimeGrid& grid) {
        if (stopped) return false;
        SegmentView seg;
        seg.phase = phase;
        seg.interval_index = idx;
        seg.grid = &grid;
        seg.b1 = &ws.b1;
        seg.b2 = &ws.b2;
        seg.b2_tilde = &ws.b2t;
        seg.x3 = &ws.x3;
        seg.x3_tilde = &ws.x3t;
        seg.area_diff = &ws.a;
        if (!obs->on_segment(seg)) stopped = true;
        return !stopped;
    }

    /// Advance the running state to node `i` of the workspace buffers.
    void advance_to(const Workspace& ws, std::size_t i) {
        b1 = ws.b1[i];
        b2 = ws.b2[i];
        b2t = ws.b2t[i];
        x3 = ws.x3[i];
        x3t = ws.x3t[i];
        a = ws.a[i];
    }
};

/// Direct left-point accumulation of the area coordinate along (b1, b2).
void accumulate_area(std::vector<double>& out, const std::vector<double>& b1,
                     const std::vector<double>& b2, double a0, std::size_t last) {
    out.resize(last + 1);
    double acc = a0;
    out[0] = acc;
    for (std::size_t i = 0; i < last; ++i) {
        acc += b1[i] * (b2[i + 1] - b2[i]) - b2[i] * (b1[i + 1] - b1[i]);
        out[i + 1] = acc;
    }
}

/// Reconstruct the second copy's area coordinate through the invariant
/// A(t) = (x3 - x3t) + b1*(b2t - b2), valid when both copies share the first
/// coordinate.  Defining x3t this way (rather than integrating it directly)
/// folds the one-step cross-variation noise of the discrete scheme into the
/// reconstruction, so the recorded pair agrees exactly once A reaches zero;
/// the residual is one grid step's noise and vanishes under refinement.
void reconstruct_partner_area(std::vector<double>& x3t, const std::vector<double>& x3,
                              const std::vector<double>& a, const std::vector<double>& b1,
                              const std::vector<double>& b2, const std::vector<double>& b2t,
                              std::size_t last) {
    x3t.resize(last + 1);
    for (std::size_t i = 0; i <= last; ++i) {
        x3t[i] = x3[i] - a[i] + b1[i] * (b2t[i] - b2[i]);
    }
}

struct CrossingScan {
    bool crossed{false};
    std::size_t step{0};
    double time{0.0};
};

/// Scan values[0..S] for a first crossing of `level` (node(i) = t0 + i*dt).
/// Same-side steps use the Brownian-bridge crossing probability with one
/// positional uniform per step.
CrossingScan scan_crossing(const std::vector<double>& values, double t0, double dt,
                           double level, const UniformStream& uniforms, bool refinement) {
    CrossingScan res;
    if (!std::isfinite(level)) return res;
    const std::size_t S = values.size() - 1;
    for (std::size_t i = 0; i < S; ++i) {
        const double a = values[i] - level;
        const double b = values[i + 1] - level;
        if (a == 0.0) {
            res.crossed = true;
            res.step = i;
            res.time = t0 + static_cast<double>(i) * dt;
            return res;
        }
        if (a > 0.0 ? b <= 0.0 : b >= 0.0) {
            res.crossed = true;
            res.step = i;
            res.time = t0 + (static_cast<double>(i) + a / (a - b)) * dt;
            return res;
        }
        if (refinement) {
            const double e = 2.0 * a * b / dt;
            if (e < kBridgeExpCutoff && uniforms.at(i) < std::exp(-e)) {
                res.crossed = true;
                res.step = i;
                res.time = t0 + (static_cast<double>(i) + 0.5) * dt;
                return res;
            }
        }
    }
    return res;
}

struct ReflectInternal {
    bool met{false};
    double t1{kInf};
    double t_switch{kInf};
    double a_at_switch{0.0};
    double censor{0.0};
};

/// Phase 1: mirror coupling of the second coordinates about their midpoint,
/// on absolute blocks [2^n - 1, 2^{n+1} - 1].  When recording, the block in
/// which the meeting occurs is emitted truncated at the switch node, since
/// the next phase re-simulates from that node.
ReflectInternal run_reflection(double b1_0, double b2_0, double b2t_0, double a0,
                               const CouplingConfig& cfg, const SeedKey& seed, Workspace& ws,
                               Recorder* rec) {
    ReflectInternal out;
    const std::size_t S = cfg.steps_per_interval;
    const double m = 0.5 * (b2_0 + b2t_0);
    double A = a0;
    double b1v = b1_0;
    double b2v = b2_0;
    for (int n = 0;; ++n) {
        const double t0 = std::ldexp(1.0, n) - 1.0;
        if (t0 >= cfg.horizon) {
            out.censor = cfg.horizon;
            return out;
        }
        const double dt = std::ldexp(1.0, n) / static_cast<double>(S);
        const std::uint32_t un = static_cast<std::uint32_t>(n);
        ws.fill_bm(ws.b1, dt, b1v, NormalStream({seed.master, seed.trajectory, kB1Reflect, un}));
        ws.fill_bm(ws.b2, dt, b2v, NormalStream({seed.master, seed.trajectory, kB2Reflect, un}));
        const double b1_end = ws.b1[S];
        const double b2_end = ws.b2[S];
        const CrossingScan hit = scan_crossing(
            ws.b2, t0, dt, m, UniformStream({seed.master, seed.trajectory, kUReflect, un}),
            cfg.crossing_refinement);
        // The mirror difference is active on steps strictly before the switch
        // node j = hit.step + 1 (on all steps if no crossing this block).
        const std::size_t active = hit.crossed ? hit.step + 1 : S;
        const double a_entry = A;
        for (std::size_t i = 0; i < active; ++i) {
            A -= 4.0 * (ws.b2[i] - m) * (ws.b1[i + 1] - ws.b1[i]);
        }
        if (rec != nullptr && !rec->stopped) {
            const std::size_t last = hit.crossed ? hit.step + 1 : S;
            const TimeGrid grid{t0, dt, last};
            ws.b1.resize(last + 1);
            ws.b2.resize(last + 1);
            ws.b2t.resize(last + 1);
            ws.a.resize(last + 1);
            double acc = a_entry;
            ws.a[0] = acc;
            for (std::size_t i = 0; i < last; ++i) {
                if (i < active) {
                    acc -= 4.0 * (ws.b2[i] - m) * (ws.b1[i + 1] - ws.b1[i]);
                }
                ws.a[i + 1] = acc;
            }
            for (std::size_t i = 0; i <= last; ++i) {
                // Still mirrored at every node up to the switch; the partner
                // snaps onto the shared value exactly at the switch node.
                const bool mirrored = !hit.crossed || i <= hit.step;
                ws.b2t[i] = mirrored ? 2.0 * m - ws.b2[i] : ws.b2[i];
            }
            accumulate_area(ws.x3, ws.b1, ws.b2, rec->x3, last);
            reconstruct_partner_area(ws.x3t, ws.x3, ws.a, ws.b1, ws.b2, ws.b2t, last);
            const bool keep = rec->emit(ws, SegmentPhase::reflection, n, grid);
            rec->advance_to(ws, last);
            if (!keep && !hit.crossed) {
                out.censor = grid.end();
                return out;
            }
        }
        if (hit.crossed) {
            const std::size_t j = hit.step + 1;
            const double t_switch = t0 + static_cast<double>(j) * dt;
            if (t_switch > cfg.horizon) {
                out.censor = cfg.horizon;
                return out;
            }
            out.met = true;
            out.t1 = hit.time;
            out.t_switch = t_switch;
            out.a_at_switch = A;
            return out;
        }
        b1v = b1_end;
        b2v = b2_end;
    }
}

struct DyadicInternal {
    bool coupled{false};
    double tau{kInf};
    double censor{0.0};
    int intervals{0};
};

/// Phase 2: drive the remaining area difference to zero by re-engineering the
/// first sine coefficient of the second coordinate on dyadic intervals.
/// `gap` must be positive; time is rescaled by r2 = gap so the rescaled
/// initial gap is one.  `swap` maps the engineered pair back onto the
/// caller's two copies when the initial difference was negative.
DyadicInternal run_dyadic(double gap, double t_start, bool swap, const CouplingConfig& cfg,
                          const SeedKey& seed, Workspace& ws, Recorder* rec) {
    DyadicInternal out;
    const std::size_t S = cfg.steps_per_interval;
    const double r2 = gap;
    const double r = std::sqrt(gap);
    double D = 1.0;  // remaining gap in the rescaled frame
    for (int n = 0;; ++n) {
        const double start_rel = std::ldexp(1.0, n) - 1.0;  // 2^n - 1
        const double ck_rel = std::ldexp(2.0, n) - 1.0;     // 2^{n+1} - 1
        const double t_ck = t_start + r2 * ck_rel;
        if (n > cfg.max_dyadic_index || t_ck > cfg.horizon * (1.0 + 1e-12)) {
            out.censor = std::min(cfg.horizon, t_start + r2 * start_rel);
            return out;
        }
        const double T = std::ldexp(1.0, n);  // rescaled interval length
        const double dt = T / static_cast<double>(S);
        const std::uint32_t un = static_cast<std::uint32_t>(n);
        // Rescaled shared first coordinate and its sine-weighted functional.
        ws.fill_bm(ws.b1, dt, 0.0, NormalStream({seed.master, seed.trajectory, kB1Dyadic, un}));
        ws.lam.resize(S + 1);
        double lam = 0.0;
        ws.lam[0] = 0.0;
        const double lam_scale = 2.0 * kSqrt2 / kPi;
        for (std::size_t i = 0; i < S; ++i) {
            lam += lam_scale * ws.sin_tab[i] * (ws.b1[i + 1] - ws.b1[i]);
            ws.lam[i + 1] = lam;
        }
        const double lam_end = lam;
        // Auxiliary walk W on [0, T]; its first crossing of D / (2*lambda(T))
        // decides whether this interval closes the gap.
        ws.fill_bm(ws.w, dt, 0.0, NormalStream({seed.master, seed.trajectory, kWDyadic, un}));
        const double level = lam_end != 0.0 ? D / (2.0 * lam_end) : kInf;
        const CrossingScan hit =
            scan_crossing(ws.w, 0.0, dt, level,
                          UniformStream({seed.master, seed.trajectory, kUDyadic, un}),
                          cfg.crossing_refinement);
        // W at the instant that matters: exactly the level if it was reached
        // (W at its stopping time sits on the level by definition), else the
        // interval endpoint.
        const double w_used = hit.crossed ? level : ws.w[S];
        const double D_next = hit.crossed ? 0.0 : D - 2.0 * w_used * lam_end;

        if (rec != nullptr && !rec->stopped) {
            // Engineered pair of first-mode coefficients in the gap frame.
            const double zf =
                std::ldexp(1.0, -(n / 2)) * (n % 2 != 0 ? 1.0 / kSqrt2 : 1.0);  // 2^{-n/2}
            const double z = zf * ws.w[S];
            const double zt = hit.crossed ? zf * (ws.w[S] - 2.0 * level) : -z;
            // Shared raw bridge and terminal increment (recording-only draws).
            ws.fill_bm(ws.bridge, dt, 0.0,
                       NormalStream({seed.master, seed.trajectory, kBridgeDyadic, un}));
            const double br_end = ws.bridge[S];
            for (std::size_t i = 0; i <= S; ++i) {
                ws.bridge[i] -= br_end * static_cast<double>(i) / static_cast<double>(S);
            }
            const double g_term =
                std::sqrt(T) * NormalStream({seed.master, seed.trajectory, kGDyadic, un}).at(0);
            // Trapezoid estimate of the bridge's own first coefficient,
            // removed before the engineered coefficient is installed.
            double proj = 0.0;
            for (std::size_t i = 1; i < S; ++i) proj += ws.bridge[i] * ws.sin_tab[i];
            proj *= dt * kPi * kSqrt2 / (T * std::sqrt(T));
            const double sqT = std::sqrt(T);
            const double dz_gap = sqT * (z - proj);
            const double dz_par = sqT * (zt - proj);
            const TimeGrid grid{t_start + r2 * start_rel, r2 * dt, S};
            ws.b2.resize(S + 1);
            ws.b2t.resize(S + 1);
            ws.a.resize(S + 1);
            const double b2_start = rec->b2;  // both copies agree at a checkpoint
            const double sgn = swap ? -1.0 : 1.0;
            for (std::size_t i = 0; i <= S; ++i) {
                const double frac = static_cast<double>(i) / static_cast<double>(S);
                const double base = ws.bridge[i] + frac * g_term;
                const double v_gap = base + dz_gap * ws.g1_tab[i];
                const double v_par = base + dz_par * ws.g1_tab[i];
                ws.b2[i] = b2_start + r * (swap ? v_par : v_gap);
                ws.b2t[i] = b2_start + r * (swap ? v_gap : v_par);
                // Signed area difference along the interval; exact because the
                // sine-weighted functional accumulates on the same grid.
                ws.a[i] = sgn * r2 * (D - 2.0 * w_used * ws.lam[i]);
            }
            if (hit.crossed) {
                ws.a[S] = 0.0;
            }
            // Lift the shared first coordinate to absolute scale in place.
            const double b1_start = rec->b1;
            for (std::size_t i = 0; i <= S; ++i) ws.b1[i] = b1_start + r * ws.b1[i];
            accumulate_area(ws.x3, ws.b1, ws.b2, rec->x3, S);
            reconstruct_partner_area(ws.x3t, ws.x3, ws.a, ws.b1, ws.b2, ws.b2t, S);
            const bool keep = rec->emit(ws, SegmentPhase::dyadic, n, grid);
            rec->advance_to(ws, S);
            if (!keep && !hit.crossed) {
                out.censor = grid.end();
                out.intervals = n + 1;
                return out;
            }
        }
        out.intervals = n + 1;
        if (hit.crossed) {
            out.coupled = true;
            out.tau = t_ck;
            return out;
        }
        D = D_next;
    }
}

/// Post-coupling (or post-alignment) continuation with fully shared noise,
/// recorded as one segment from t_from to t_to.  Requires the planar parts
/// to agree already; `area_gap` is the frozen area difference (zero after a
/// genuine coupling).
void run_sync_segment(double t_from, double t_to, double area_gap, const CouplingConfig& cfg,
                      const SeedKey& seed, Workspace& ws, Recorder& rec) {
    if (rec.stopped || !(t_to > t_from)) return;
    const std::size_t S = cfg.steps_per_interval;
    const double dt = (t_to - t_from) / static_cast<double>(S);
    const TimeGrid grid{t_from, dt, S};
    ws.fill_bm(ws.b1, dt, rec.b1, NormalStream({seed.master, seed.trajectory, kB1Sync, 0}));
    ws.fill_bm(ws.b2, dt, rec.b2, NormalStream({seed.master, seed.trajectory, kB2Sync, 0}));
    ws.b2t.resize(S + 1);
    ws.a.resize(S + 1);
    for (std::size_t i = 0; i <= S; ++i) {
        ws.b2t[i] = ws.b2[i];
        ws.a[i] = area_gap;
    }
    accumulate_area(ws.x3, ws.b1, ws.b2, rec.x3, S);
    reconstruct_partner_area(ws.x3t, ws.x3, ws.a, ws.b1, ws.b2, ws.b2t, S);
    rec.emit(ws, SegmentPhase::synchronous, -1, grid);
    rec.advance_to(ws, S);
}

/// Synchronous-strategy recording: both copies driven by identical planar
/// noise on absolute blocks [2^n - 1, 2^{n+1} - 1] until record_until.  The
/// copies keep constant planar offsets; the recorded b1 belongs to the first
/// copy and the second copy's first coordinate is b1 + (to.x - from.x).
void run_synchronous_recording(const GroupPoint& from, const GroupPoint& to,
                               const CouplingConfig& cfg, const SeedKey& seed, Workspace& ws,
                               Recorder& rec) {
    const std::size_t S = cfg.steps_per_interval;
    const double c1 = to.x - from.x;  // frozen offset of the first coordinates
    const double c2 = to.y - from.y;  // frozen offset of the second coordinates
    rec.b1 = from.x;
    rec.b2 = from.y;
    rec.b2t = to.y;
    rec.x3 = from.z;
    rec.x3t = to.z;
    double A = from.z - to.z + from.x * to.y - from.y * to.x;
    rec.a = A;
    for (int n = 0; !rec.stopped; ++n) {
        const double t0 = std::ldexp(1.0, n) - 1.0;
        if (t0 >= cfg.record_until) return;
        const double dt = std::ldexp(1.0, n) / static_cast<double>(S);
        const TimeGrid grid{t0, dt, S};
        const std::uint32_t un = static_cast<std::uint32_t>(n);
        ws.fill_bm(ws.b1, dt, rec.b1, NormalStream({seed.master, seed.trajectory, kB1Sync, un}));
        ws.fill_bm(ws.b2, dt, rec.b2, NormalStream({seed.master, seed.trajectory, kB2Sync, un}));
        ws.b2t.resize(S + 1);
        ws.a.resize(S + 1);
        ws.a[0] = A;
        for (std::size_t i = 0; i <= S; ++i) ws.b2t[i] = ws.b2[i] + c2;
        // With both planar offsets frozen, dA = 2*c2*db1 - 2*c1*db2.
        for (std::size_t i = 0; i < S; ++i) {
            A += 2.0 * c2 * (ws.b1[i + 1] - ws.b1[i]) - 2.0 * c1 * (ws.b2[i + 1] - ws.b2[i]);
            ws.a[i + 1] = A;
        }
        accumulate_area(ws.x3, ws.b1, ws.b2, rec.x3, S);
        // General invariant with distinct first coordinates:
        // A = (x3 - x3t) + b1*b2t - b2*b1t with b1t = b1 + c1.
        ws.x3t.resize(S + 1);
        for (std::size_t i = 0; i <= S; ++i) {
            ws.x3t[i] =
                ws.x3[i] - ws.a[i] + ws.b1[i] * (ws.b2t[i] - ws.b2[i]) - c1 * ws.b2[i];
        }
        rec.emit(ws, SegmentPhase::synchronous, n, grid);
        rec.advance_to(ws, S);
    }
}

}  // namespace

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::synchronous:
            return "synchronous";
        case Strategy::reflection_planar:
            return "reflection_planar";
        case Strategy::nonmarkovian_two_step:
            return "nonmarkovian_two_step";
        case Strategy::area_only_dyadic:
            return "area_only_dyadic";
    }
    throw PreconditionError("to_string: unknown strategy value");
}

Strategy strategy_from_string(const std::string& name) {
    if (name == "synchronous") return Strategy::synchronous;
    if (name == "reflection_planar") return Strategy::reflection_planar;
    if (name == "nonmarkovian_two_step") return Strategy::nonmarkovian_two_step;
    if (name == "area_only_dyadic") return Strategy::area_only_dyadic;
    throw PreconditionError("unknown coupling strategy '" + name + "'");
}

void CouplingConfig::validate() const {
    if (steps_per_interval < 16) {
        throw PreconditionError("CouplingConfig: steps_per_interval must be >= 16");
    }
    if (steps_per_interval > (1u << 22)) {
        throw PreconditionError("CouplingConfig: steps_per_interval too large");
    }
    if (!(horizon > 0.0)) {
        throw PreconditionError("CouplingConfig: horizon must be positive");
    }
    if (max_dyadic_index < 0 || max_dyadic_index > 62) {
        throw PreconditionError("CouplingConfig: max_dyadic_index must lie in [0, 62]");
    }
    if (record_until < 0.0) {
        throw PreconditionError("CouplingConfig: record_until must be nonnegative");
    }
}

CouplingOutcome couple(const GroupPoint& from, const GroupPoint& to, const CouplingConfig& cfg,
                       const SeedKey& seed, TrajectoryObserver* observer) {
    cfg.validate();
    CouplingOutcome out;
    out.seed = seed;
    Workspace ws(cfg.steps_per_interval);
    Recorder rec_store;
    Recorder* rec = nullptr;
    if (observer != nullptr) {
        rec_store.obs = observer;
        rec = &rec_store;
    }

    // Fully coincident starts couple immediately under every strategy.
    if (from.x == to.x && from.y == to.y && from.z == to.z) {
        out.coupled = true;
        out.tau = 0.0;
        out.t1 = 0.0;
        out.t1_reached = true;
        if (rec != nullptr) {
            rec->b1 = from.x;
            rec->b2 = from.y;
            rec->b2t = from.y;
            rec->x3 = from.z;
            rec->x3t = from.z;
            run_sync_segment(0.0, cfg.record_until, 0.0, cfg, seed, ws, *rec);
        }
        return out;
    }

    if (cfg.strategy == Strategy::synchronous) {
        // Identical noise never closes a nonzero gap; report the horizon as
        // the censoring time.  Recording still produces genuine joint paths.
        out.coupled = false;
        out.censor_time = cfg.horizon;
        if (rec != nullptr && cfg.record_until > 0.0) {
            run_synchronous_recording(from, to, cfg, seed, ws, *rec);
        }
        return out;
    }

    if (cfg.strategy == Strategy::area_only_dyadic) {
        if (from.x != to.x || from.y != to.y) {
            throw PreconditionError(
                "couple: area_only_dyadic requires identical planar starts");
        }
        out.t1 = 0.0;
        out.t1_reached = true;
        out.a_at_t1 = from.z - to.z;  // the planar cross term vanishes here
        if (rec != nullptr) {
            rec->b1 = from.x;
            rec->b2 = from.y;
            rec->b2t = from.y;
            rec->x3 = from.z;
            rec->x3t = to.z;
            rec->a = out.a_at_t1;
        }
        out.role_swapped = out.a_at_t1 < 0.0;
        const DyadicInternal dy =
            run_dyadic(std::abs(out.a_at_t1), 0.0, out.role_swapped, cfg, seed, ws, rec);
        out.coupled = dy.coupled;
        out.tau = dy.tau;
        out.censor_time = dy.censor;
        out.dyadic_intervals_used = dy.intervals;
        if (rec != nullptr && out.coupled) {
            run_sync_segment(out.tau, cfg.record_until, 0.0, cfg, seed, ws, *rec);
        }
        return out;
    }

    // Reflection-based strategies: rotate so the first planar coordinates of
    // the two starts agree; the construction is invariant under this.
    const AlignedPair al = reduce_to_common_b1(from, to);
    const double b1_0 = al.p.x;
    const double b2_0 = al.p.y;
    const double b2t_0 = al.q.y;
    const double a0 = al.p.z - al.q.z + b1_0 * (b2t_0 - b2_0);
    if (rec != nullptr) {
        rec->b1 = b1_0;
        rec->b2 = b2_0;
        rec->b2t = b2t_0;
        rec->x3 = al.p.z;
        rec->x3t = al.q.z;
        rec->a = a0;
    }

    double t_switch = 0.0;
    if (b2_0 == b2t_0) {
        // The planar parts already agree; the mirror phase is empty.
        out.t1 = 0.0;
        out.t1_reached = true;
        out.a_at_t1 = a0;
    } else {
        const ReflectInternal rf = run_reflection(b1_0, b2_0, b2t_0, a0, cfg, seed, ws, rec);
        if (!rf.met) {
            out.censor_time = rf.censor;
            return out;
        }
        out.t1 = rf.t1;
        out.t1_reached = true;
        out.a_at_t1 = rf.a_at_switch;
        t_switch = rf.t_switch;
    }

    if (cfg.strategy == Strategy::reflection_planar) {
        // The area difference is left alone after the planar meeting, so the
        // pair couples only in the degenerate case of a vanished area gap.
        if (out.a_at_t1 == 0.0) {
            out.coupled = true;
            out.tau = t_switch;
        } else {
            out.coupled = false;
            out.censor_time = cfg.horizon;
        }
        if (rec != nullptr) {
            run_sync_segment(t_switch, cfg.record_until, out.a_at_t1, cfg, seed, ws, *rec);
        }
        return out;
    }

    // Full two-step coupling: drive the remaining area difference to zero.
    if (out.a_at_t1 == 0.0) {
        out.coupled = true;
        out.tau = t_switch;
        out.dyadic_intervals_used = 0;
        if (rec != nullptr) {
            run_sync_segment(t_switch, cfg.record_until, 0.0, cfg, seed, ws, *rec);
        }
        return out;
    }
    out.role_swapped = out.a_at_t1 < 0.0;
    const DyadicInternal dy =
        run_dyadic(std::abs(out.a_at_t1), t_switch, out.role_swapped, cfg, seed, ws, rec);
    out.coupled = dy.coupled;
    out.tau = dy.tau;
    out.censor_time = dy.censor;
    out.dyadic_intervals_used = dy.intervals;
    if (rec != nullptr && out.coupled) {
        run_sync_segment(out.tau, cfg.record_until, 0.0, cfg, seed, ws, *rec);
    }
    return out;
}

ReflectionPhaseResult reflection_phase(double b2_start, double b2t_start, double a0,
                                       const CouplingConfig& cfg, const SeedKey& seed) {
    cfg.validate();
    ReflectionPhaseResult out;
    if (b2_start == b2t_start) {
        out.met = true;
        out.t1 = 0.0;
        out.t_switch = 0.0;
        out.a_at_switch = a0;
        return out;
    }
    Workspace ws(cfg.steps_per_interval);
    const ReflectInternal rf =
        run_reflection(0.0, b2_start, b2t_start, a0, cfg, seed, ws, nullptr);
    out.met = rf.met;
    out.t1 = rf.t1;
    out.t_switch = rf.t_switch;
    out.a_at_switch = rf.a_at_switch;
    out.censor_time = rf.censor;
    return out;
}

DyadicPhaseResult dyadic_area_phase(double initial_gap, double t_start,
                                    const CouplingConfig& cfg, const SeedKey& seed) {
    cfg.validate();
    if (!(initial_gap >= 0.0)) {
        throw DomainError("dyadic_area_phase: initial gap must be nonnegative");
    }
    if (!(t_start >= 0.0)) {
        throw DomainError("dyadic_area_phase: start time must be nonnegative");
    }
    DyadicPhaseResult out;
    if (initial_gap == 0.0) {
        out.coupled = true;
        out.tau = t_start;
        return out;
    }
    Workspace ws(cfg.steps_per_interval);
    const DyadicInternal dy = run_dyadic(initial_gap, t_start, false, cfg, seed, ws, nullptr);
    out.coupled = dy.coupled;
    out.tau = dy.tau;
    out.censor_time = dy.censor;
    out.intervals_used = dy.intervals;
    return out;
}

double exit_time_rho(const ScalarPath& x, const ScalarPath& y, const ScalarPath& z,
                     const GroupPoint& center, double radius) {
    if (x.values.empty() || y.values.empty() || z.values.empty()) {
        throw EmptyInputError("exit_time_rho: empty path");
    }
    if (!(x.grid == y.grid) || !(x.grid == z.grid)) {
        throw GridMismatchError("exit_time_rho: coordinate paths on different grids");
    }
    if (!(radius > 0.0)) throw DomainError("exit_time_rho: radius must be positive");
    for (std::size_t i = 0; i <= x.grid.steps; ++i) {
        const GroupPoint p{x.values[i], y.values[i], z.values[i]};
        if (rho(center, p) >= radius) return x.grid.node(i);
    }
    return kInf;
}

double exit_time_planar(const ScalarPath& x, const ScalarPath& y, double cx, double cy,
                        double radius) {
    if (x.values.empty() || y.values.empty()) {
        throw EmptyInputError("exit_time_planar: empty path");
    }
    if (!(x.grid == y.grid)) {
        throw GridMismatchError("exit_time_planar: coordinate paths on different grids");
    }
    if (!(radius > 0.0)) throw DomainError("exit_time_planar: radius must be positive");
    const double r2 = radius * radius;
    for (std::size_t i = 0; i <= x.grid.steps; ++i) {
        const double dx = x.values[i] - cx;
        const double dy = y.values[i] - cy;
        if (dx * dx + dy * dy >= r2) return x.grid.node(i);
    }
    return kInf;
}

double exit_time_box(const ScalarPath& x, const ScalarPath& y, const ScalarPath& z,
                     const GroupPoint& center, double half_planar, double half_vertical) {
    if (x.values.empty() || y.values.empty() || z.values.empty()) {
        throw EmptyInputError("exit_time_box: empty path");
    }
    if (!(x.grid == y.grid) || !(x.grid == z.grid)) {
        throw GridMismatchError("exit_time_box: coordinate paths on different grids");
    }
    if (!(half_planar > 0.0) || !(half_vertical > 0.0)) {
        throw DomainError("exit_time_box: box half-widths must be positive");
    }
    for (std::size_t i = 0; i <= x.grid.steps; ++i) {
        const double dx = std::abs(x.values[i] - center.x);
        const double dy = std::abs(y.values[i] - center.y);
        // z-coordinate of center^{-1} * p, the group-adapted vertical offset.
        const double w = z.values[i] - center.z - center.x * y.values[i] +
                         center.y * x.values[i];
        if (dx > half_planar || dy > half_planar || std::abs(w) > half_vertical) {
            return x.grid.node(i);
        }
    }
    return kInf;
}

}  // namespace heis
