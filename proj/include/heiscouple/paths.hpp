// Path-level building blocks: Brownian sampling, bridge decomposition with
// first-mode surgery, stochastic integrals, the horizontal area functional,
// the sine-weighted interval functional, and refined first-crossing times.
//
// All stochastic integrals are left-point (Ito) sums on the path's own grid.
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "heiscouple/grid.hpp"
#include "heiscouple/rng.hpp"

namespace heis {

/// Brownian path on `grid` started at `start`: increments sqrt(dt) * N(0,1),
/// one normal per step drawn in order from `normals`.
ScalarPath sample_bm(const TimeGrid& grid, double start, NormalStream& normals);

/// Brownian bridge from 0 to 0 on `grid` (any t0), built as a raw Brownian
/// path minus its linear interpolant: br(u) = B(u) - (u/T) * B(T) in
/// grid-relative time u.  Consumes grid.steps normals.
ScalarPath sample_bridge(const TimeGrid& grid, NormalStream& normals);

/// k-th sine basis function g_{T,k}(u) = sqrt(2) * sin(k*pi*u/T) / (k*pi)
/// evaluated at grid-relative time u in [0, T].  Throws DomainError for
/// k < 1, T <= 0 or u outside [0, T] (up to a small rounding allowance).
double kl_basis(double T, int k, double u);

/// Estimate the k-th sine coefficient of a bridge path (values 0 at both
/// ends): z_k = (k*pi/T^{3/2}) * sqrt(2) * integral of br(u)*sin(k*pi*u/T) du,
/// with the integral computed by the trapezoid rule on the path's grid.
/// Throws PreconditionError if the path has fewer than 2 steps and
/// DomainError for k < 1.
double kl_project(const ScalarPath& bridge, int k);

/// Replace the first sine coefficient of a bridge path:
/// returns br - sqrt(T)*(z1_hat - new_z1)*g_{T,1} with z1_hat = kl_project(br, 1).
ScalarPath replace_first_kl(const ScalarPath& bridge, double new_z1);

/// Assemble a Brownian path from its bridge and terminal increment:
/// B(u) = start + br(u) + (u/T)*terminal_increment in grid-relative time.
ScalarPath assemble_bm(double start, const ScalarPath& bridge, double terminal_increment);

/// Left-point stochastic integral of f against g over their (identical)
/// grid: sum f[i] * (g[i+1] - g[i]).  Throws GridMismatchError if the grids
/// differ, EmptyInputError if either path is empty.
double ito_integral(const ScalarPath& f, const ScalarPath& g);

/// Horizontal area path x3(t) = a0 + Int b1 db2 - Int b2 db1 accumulated by
/// left-point sums along the common grid of b1 and b2.
ScalarPath levy_area(const ScalarPath& b1, const ScalarPath& b2, double a0);

/// Sine-weighted functional of the first coordinate over its interval:
/// lambda(u) = (2/pi) * Int_0^u sqrt(2) * sin(pi*(s - t0)/T) dB1(s),
/// returned as a path on b1's grid (left-point sum, lambda(t0) = 0).
ScalarPath lambda_functional(const ScalarPath& b1);

/// Result of a first-crossing scan.
struct CrossingResult {
    bool crossed{false};
    double time{0.0};        ///< crossing time (valid when crossed)
    std::size_t step{0};     ///< index i of the step [node(i), node(i+1)] containing it
};

/// First time the path reaches `level`.
///
/// A step whose endpoints straddle the level yields a crossing at the
/// linearly interpolated time.  With `refinement` enabled, a step with both
/// endpoints on the same side additionally declares a crossing with the
/// Brownian-bridge probability exp(-2*(w_i - level)*(w_{i+1} - level)/dt),
/// consuming uniforms[i] (one uniform per step, addressed by step index);
/// such a crossing is reported at the step midpoint.  If the path starts
/// exactly at the level, the start time is returned.
CrossingResult first_crossing(const ScalarPath& w, double level, UniformStream& uniforms,
                              bool refinement = true);

}  // namespace heis
