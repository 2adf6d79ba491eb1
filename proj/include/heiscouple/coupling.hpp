// Coupling of two Brownian motions on the Heisenberg group.
//
// The flagship construction is a two-phase, non-Markovian coupling:
//
//   Phase 1 (reflection).  After a horizontal rotation aligning the first
//   planar coordinates, the two first coordinates are driven by the same
//   noise and the second coordinates are mirror-coupled about their midpoint
//   until they meet at time T1 (detected on the grid with bridge-probability
//   refinement; the switch happens at the refined time's ceiling grid node,
//   where the reflected copy snaps to its partner).
//
//   Phase 2 (dyadic area coupling).  With planar parts now identical, only
//   the area difference A remains.  Time is rescaled so the remaining gap is
//   one, and the construction walks dyadic intervals [2^n-1, 2^{n+1}-1],
//   replacing the first sine coefficient of each interval's shared bridge by
//   a pair of mirror-coupled values driven by an auxiliary walk W.  Crossing
//   the level D_n / (2*lambda_n(end)) zeroes the gap exactly at the interval
//   checkpoint; otherwise the gap updates to D_n - 2*W(end)*lambda_n(end),
//   which stays positive.  The coupling time is always a checkpoint.
//
// Every random draw is addressed by (seed, trajectory, stream label,
// interval, draw index), so outcomes are independent of thread count and of
// whether paths are being recorded.
#pragma once

#include <cstdint>
#include <limits>
#include <string>

#include "heiscouple/geometry.hpp"
#include "heiscouple/grid.hpp"
#include "heiscouple/rng.hpp"

namespace heis {

enum class Strategy {
    synchronous,           ///< identical noise for both copies; never couples unless identical starts
    reflection_planar,     ///< phase 1 only; area difference is left alone
    nonmarkovian_two_step, ///< reflection followed by dyadic area coupling
    area_only_dyadic,      ///< phase 2 only; requires equal planar starts
};

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

struct CouplingConfig {
    Strategy strategy{Strategy::nonmarkovian_two_step};
    std::size_t steps_per_interval{2048};  ///< grid steps per interval, >= 16
    int max_dyadic_index{11};              ///< last phase-2 interval index n
    double horizon{4095.0};                ///< absolute-time censoring bound
    bool crossing_refinement{true};        ///< bridge-probability crossing detection
    double record_until{0.0};              ///< with an observer: keep recording past
                                           ///< coupling up to this absolute time

    /// Throws PreconditionError on invalid parameter combinations.
    void validate() const;
};

struct SeedKey {
    std::uint64_t master{0};
    std::uint64_t trajectory{0};
};

struct CouplingOutcome {
    bool coupled{false};
    /// Coupling time (absolute); +inf when censored.
    double tau{std::numeric_limits<double>::infinity()};
    /// Last absolute time the pair was simulated to, when not coupled.
    double censor_time{0.0};
    bool t1_reached{false};
    /// Refined end of the reflection phase; +inf if censored during phase 1.
    double t1{std::numeric_limits<double>::infinity()};
    /// Area difference at the phase switch (drives phase 2).
    double a_at_t1{0.0};
    int dyadic_intervals_used{0};
    /// True when the area difference was negative at the switch and the two
    /// copies exchanged roles inside the dyadic machinery.
    bool role_swapped{false};
    SeedKey seed{};
};

enum class SegmentPhase { reflection, dyadic, synchronous };

/// One simulated segment in absolute time, exposed to observers.  The vectors
/// are owned by the engine and valid only during the callback; copies may
/// alias when the two coordinates coincide.
struct SegmentView {
    SegmentPhase phase{SegmentPhase::reflection};
    int interval_index{0};  ///< reflection block or dyadic interval; -1 for synchronous
    const TimeGrid* grid{nullptr};
    const std::vector<double>* b1{nullptr};
    const std::vector<double>* b2{nullptr};
    const std::vector<double>* b2_tilde{nullptr};
    const std::vector<double>* x3{nullptr};
    const std::vector<double>* x3_tilde{nullptr};
    const std::vector<double>* area_diff{nullptr};
};

/// Receives recorded segments in absolute-time order.  Returning false stops
/// the simulation early (the outcome is then censored at the segment end
/// unless the coupling time was already decided).
class TrajectoryObserver {
public:
    virtual ~TrajectoryObserver() = default;
    virtual bool on_segment(const SegmentView& segment) = 0;
};

/// Run one coupled pair started from `from` and `to`.
///
/// With an observer the engine additionally assembles the planar paths and
/// area coordinates of both copies (consuming the recording-only streams,
/// which never affect the outcome) and, after coupling, continues the now
/// synchronous pair up to cfg.record_until.
CouplingOutcome couple(const GroupPoint& from, const GroupPoint& to, const CouplingConfig& cfg,
                       const SeedKey& seed, TrajectoryObserver* observer = nullptr);

/// Result of the standalone reflection phase.
struct ReflectionPhaseResult {
    bool met{false};
    double t1{std::numeric_limits<double>::infinity()};
    /// Grid node at which the phases switch (ceiling of t1).
    double t_switch{std::numeric_limits<double>::infinity()};
    /// Area difference carried to the switch node.
    double a_at_switch{0.0};
    double censor_time{0.0};
};

/// Reflection phase alone: second coordinates started at b2_start and
/// b2t_start, area difference started at a0.  Blocks [2^n-1, 2^{n+1}-1] are
/// simulated with cfg.steps_per_interval steps each until the copies meet or
/// cfg.horizon is passed.
ReflectionPhaseResult reflection_phase(double b2_start, double b2t_start, double a0,
                                       const CouplingConfig& cfg, const SeedKey& seed);

/// Result of the standalone dyadic area phase.
struct DyadicPhaseResult {
    bool coupled{false};
    double tau{std::numeric_limits<double>::infinity()};
    double censor_time{0.0};
    int intervals_used{0};
};

/// Dyadic area phase alone: drives an initial area gap (>= 0) to zero
/// starting at absolute time t_start.  Time is rescaled by r^2 = initial_gap
/// so the rescaled gap is one; interval n couples at absolute time
/// t_start + initial_gap * (2^{n+1} - 1).
DyadicPhaseResult dyadic_area_phase(double initial_gap, double t_start,
                                    const CouplingConfig& cfg, const SeedKey& seed);

/// First grid time at which rho((x,y,z)(t), center) >= radius; +inf if the
/// paths never leave the ball.  All three paths must share one grid.
double exit_time_rho(const ScalarPath& x, const ScalarPath& y, const ScalarPath& z,
                     const GroupPoint& center, double radius);

/// First grid time at which the planar point leaves the disk of the given
/// radius centered at (cx, cy); +inf if it never does.
double exit_time_planar(const ScalarPath& x, const ScalarPath& y, double cx, double cy,
                        double radius);

/// First grid time at which the point leaves the group-adapted box around
/// `center`: both planar coordinates within `half_planar` of the center's,
/// and the z-coordinate of the center-relative point (center^{-1} * p)
/// within `half_vertical`.  Returns +inf if the path never leaves.
double exit_time_box(const ScalarPath& x, const ScalarPath& y, const ScalarPath& z,
                     const GroupPoint& center, double half_planar, double half_vertical);

}  // namespace heis
