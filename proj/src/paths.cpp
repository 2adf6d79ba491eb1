#include "heiscouple/paths.hpp"

#include <cmath>
#include <string>

#include "heiscouple/errors.hpp"

namespace heis {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kSqrt2 = 1.4142135623730950488016887242097;

void require_path(const ScalarPath& p, const char* fn) {
    if (p.values.empty()) {
        throw EmptyInputError(std::string(fn) + ": empty path");
    }
    if (p.values.size() != p.grid.steps + 1) {
        throw GridMismatchError(std::string(fn) + ": path carries " +
                                std::to_string(p.values.size()) + " values for " +
                                std::to_string(p.grid.steps) + " steps");
    }
}

void require_same_grid(const ScalarPath& a, const ScalarPath& b, const char* fn) {
    require_path(a, fn);
    require_path(b, fn);
    if (!(a.grid == b.grid)) {
        throw GridMismatchError(std::string(fn) + ": paths live on different grids");
    }
}

}  // namespace

TimeGrid TimeGrid::over(double a, double b, std::size_t steps) {
    if (steps == 0) {
        throw PreconditionError("TimeGrid::over: steps must be >= 1");
    }
    if (!(b > a)) {
        throw PreconditionError("TimeGrid::over: interval end must exceed start");
    }
    return {a, (b - a) / static_cast<double>(steps), steps};
}

ScalarPath sample_bm(const TimeGrid& grid, double start, NormalStream& normals) {
    if (grid.steps == 0 || !(grid.dt > 0.0)) {
        throw PreconditionError("sample_bm: grid must have dt > 0 and steps >= 1");
    }
    ScalarPath out{grid, std::vector<double>(grid.steps + 1)};
    const double sdt = std::sqrt(grid.dt);
    double v = start;
    out.values[0] = v;
    for (std::size_t i = 0; i < grid.steps; ++i) {
        v += sdt * normals.next();
        out.values[i + 1] = v;
    }
    return out;
}

ScalarPath sample_bridge(const TimeGrid& grid, NormalStream& normals) {
    ScalarPath raw = sample_bm(grid, 0.0, normals);
    const double endv = raw.values.back();
    const std::size_t n = raw.grid.steps;
    for (std::size_t i = 0; i <= n; ++i) {
        raw.values[i] -= endv * static_cast<double>(i) / static_cast<double>(n);
    }
    raw.values[n] = 0.0;
    return raw;
}

double kl_basis(double T, int k, double u) {
    if (k < 1) throw DomainError("kl_basis: mode index must be >= 1");
    if (!(T > 0.0)) throw DomainError("kl_basis: interval length must be positive");
    if (u < -1e-12 * T || u > T * (1.0 + 1e-12)) {
        throw DomainError("kl_basis: time " + std::to_string(u) + " outside [0, " +
                          std::to_string(T) + "]");
    }
    const double kpi = static_cast<double>(k) * kPi;
    return kSqrt2 * std::sin(kpi * u / T) / kpi;
}

double kl_project(const ScalarPath& bridge, int k) {
    require_path(bridge, "kl_project");
    if (k < 1) throw DomainError("kl_project: mode index must be >= 1");
    if (bridge.grid.steps < 2) {
        throw PreconditionError("kl_project: need at least 2 steps");
    }
    const double T = bridge.grid.length();
    const double kpi = static_cast<double>(k) * kPi;
    // Trapezoid rule; the endpoint terms vanish because sin(0) = sin(k*pi) = 0
    // and the bridge itself vanishes at both ends.
    double acc = 0.0;
    for (std::size_t i = 1; i < bridge.grid.steps; ++i) {
        const double u = static_cast<double>(i) * bridge.grid.dt;
        acc += bridge.values[i] * std::sin(kpi * u / T);
    }
    acc *= bridge.grid.dt;
    return kpi / std::pow(T, 1.5) * kSqrt2 * acc;
}

ScalarPath replace_first_kl(const ScalarPath& bridge, double new_z1) {
    require_path(bridge, "replace_first_kl");
    const double z1_hat = kl_project(bridge, 1);
    const double T = bridge.grid.length();
    const double scale = std::sqrt(T) * (new_z1 - z1_hat);
    ScalarPath out = bridge;
    // The correction is a pure first sine mode, which vanishes identically at
    // both endpoints; skip them so the output stays an exact bridge instead
    // of picking up sin(pi) roundoff.
    for (std::size_t i = 1; i < out.grid.steps; ++i) {
        const double u = static_cast<double>(i) * out.grid.dt;
        out.values[i] += scale * kl_basis(T, 1, u);
    }
    return out;
}

ScalarPath assemble_bm(double start, const ScalarPath& bridge, double terminal_increment) {
    require_path(bridge, "assemble_bm");
    ScalarPath out = bridge;
    const std::size_t n = out.grid.steps;
    for (std::size_t i = 0; i <= n; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(n);
        out.values[i] += start + frac * terminal_increment;
    }
    return out;
}

double ito_integral(const ScalarPath& f, const ScalarPath& g) {
    require_same_grid(f, g, "ito_integral");
    double acc = 0.0;
    for (std::size_t i = 0; i < f.grid.steps; ++i) {
        acc += f.values[i] * (g.values[i + 1] - g.values[i]);
    }
    return acc;
}

ScalarPath levy_area(const ScalarPath& b1, const ScalarPath& b2, double a0) {
    require_same_grid(b1, b2, "levy_area");
    ScalarPath out{b1.grid, std::vector<double>(b1.grid.steps + 1)};
    double acc = a0;
    out.values[0] = acc;
    for (std::size_t i = 0; i < b1.grid.steps; ++i) {
        acc += b1.values[i] * (b2.values[i + 1] - b2.values[i]) -
               b2.values[i] * (b1.values[i + 1] - b1.values[i]);
        out.values[i + 1] = acc;
    }
    return out;
}

ScalarPath lambda_functional(const ScalarPath& b1) {
    require_path(b1, "lambda_functional");
    const double T = b1.grid.length();
    ScalarPath out{b1.grid, std::vector<double>(b1.grid.steps + 1)};
    double acc = 0.0;
    out.values[0] = 0.0;
    for (std::size_t i = 0; i < b1.grid.steps; ++i) {
        const double u = static_cast<double>(i) * b1.grid.dt;
        acc += (2.0 / kPi) * kSqrt2 * std::sin(kPi * u / T) *
               (b1.values[i + 1] - b1.values[i]);
        out.values[i + 1] = acc;
    }
    return out;
}

CrossingResult first_crossing(const ScalarPath& w, double level, UniformStream& uniforms,
                              bool refinement) {
    require_path(w, "first_crossing");
    if (w.values[0] == level) {
        return {true, w.grid.t0, 0};
    }
    const double dt = w.grid.dt;
    for (std::size_t i = 0; i < w.grid.steps; ++i) {
        const double a = w.values[i] - level;
        const double b = w.values[i + 1] - level;
        if ((a > 0.0) != (b > 0.0) || b == 0.0) {
            // Endpoints straddle the level: interpolate linearly.
            const double frac = a / (a - b);
            return {true, w.grid.node(i) + frac * dt, i};
        }
        if (refinement) {
            // Same-side step: the bridge between the endpoints still crosses
            // with probability exp(-2*a*b/dt).
            const double p = std::exp(-2.0 * a * b / dt);
            if (uniforms.at(i) < p) {
                return {true, w.grid.node(i) + 0.5 * dt, i};
            }
        }
    }
    return {};
}

}  // namespace heis
