// Uniform time grids and scalar paths sampled on them.
#pragma once

#include <cstddef>
#include <vector>

namespace heis {

/// A uniform grid t0 + i*dt, i = 0..steps.  `steps` counts increments, so a
/// grid carries steps + 1 nodes.
struct TimeGrid {
    double t0{0.0};
    double dt{0.0};
    std::size_t steps{0};

    double node(std::size_t i) const noexcept { return t0 + static_cast<double>(i) * dt; }
    double end() const noexcept { return t0 + static_cast<double>(steps) * dt; }
    double length() const noexcept { return static_cast<double>(steps) * dt; }

    bool operator==(const TimeGrid&) const = default;

    /// Grid over [a, b] with the given number of increments (>= 1).
    /// Throws PreconditionError for steps == 0 or b <= a.
    static TimeGrid over(double a, double b, std::size_t steps);
};

/// A scalar path: values[i] is the value at grid.node(i); values.size() must
/// equal grid.steps + 1.
struct ScalarPath {
    TimeGrid grid;
    std::vector<double> values;
};

}  // namespace heis
