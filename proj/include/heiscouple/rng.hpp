// Counter-based random number generation.
//
// Every random draw in the library is a pure function of
//   (master_seed, trajectory, stream label, interval index, draw index),
// so simulations are reproducible bit-for-bit regardless of thread count or
// execution order.  The core primitive is the Philox 4x32-10 block cipher;
// one block yields two uniform doubles in (0,1) or one Box–Muller pair of
// standard normals.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace heis {

/// Philox 4x32 key (derived from master seed and trajectory index).
struct PhiloxKey {
    std::uint32_t k0{0};
    std::uint32_t k1{0};
};

/// One Philox 4x32-10 block: 128-bit counter -> four 32-bit words.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, PhiloxKey key);

/// 64-bit avalanche mix (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t v) noexcept;

/// Logical stream labels.  Each (label, interval) pair is an independent
/// stream; labels are grouped by the simulation phase that consumes them so
/// optional streams can be skipped without shifting the mandatory ones.
enum StreamLabel : std::uint32_t {
    kB1Reflect = 1,   ///< shared first planar coordinate, reflection phase
    kB2Reflect = 2,   ///< second planar coordinate, reflection phase
    kUReflect = 3,    ///< crossing-refinement uniforms, reflection phase
    kB1Dyadic = 4,    ///< shared first planar coordinate, dyadic phase (rescaled)
    kWDyadic = 5,     ///< mirrored auxiliary walk, dyadic phase
    kUDyadic = 6,     ///< crossing-refinement uniforms, dyadic phase
    kBridgeDyadic = 7,///< raw bridge increments, dyadic phase (recording only)
    kGDyadic = 8,     ///< shared terminal increments, dyadic phase (recording only)
    kB1Sync = 9,      ///< first planar coordinate, post-coupling continuation
    kB2Sync = 10,     ///< second planar coordinate, post-coupling continuation
    kSimB1 = 11,      ///< first planar coordinate, plain simulation
    kSimB2 = 12,      ///< second planar coordinate, plain simulation
    kUSim = 13,       ///< crossing-refinement uniforms, plain simulation
};

/// Identifies one independent stream of draws.
struct StreamId {
    std::uint64_t master_seed{0};
    std::uint64_t trajectory{0};
    std::uint32_t label{0};
    std::uint32_t interval{0};
};

/// Uniform doubles in (0,1), two per Philox block.  Draws are addressable:
/// at(i) returns the i-th value of the stream independent of call order.
class UniformStream {
public:
    explicit UniformStream(const StreamId& id);

    /// i-th uniform of the stream (stateless random access).
    double at(std::uint64_t draw_index) const;

    /// Next uniform in sequence.
    double next() { return at(cursor_++); }

private:
    PhiloxKey key_;
    std::uint32_t label_{0};
    std::uint32_t interval_{0};
    std::uint64_t cursor_{0};
};

/// Standard normal doubles, produced in Box–Muller pairs (two per block).
/// Draws are addressable exactly like UniformStream.
class NormalStream {
public:
    explicit NormalStream(const StreamId& id);

    /// i-th standard normal of the stream (stateless random access).
    double at(std::uint64_t draw_index) const;

    /// Next normal in sequence.
    double next() { return at(cursor_++); }

    /// Fill out[0..n) with draws at indices [first, first + n).
    void fill(std::size_t n, double* out, std::uint64_t first = 0) const;

private:
    PhiloxKey key_;
    std::uint32_t label_{0};
    std::uint32_t interval_{0};
    std::uint64_t cursor_{0};
};

}  // namespace heis
