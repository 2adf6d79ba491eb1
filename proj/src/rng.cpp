#include "heiscouple/rng.hpp"

#include <cmath>

namespace heis {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;
constexpr double kTwoPi = 6.283185307179586476925286766559;

inline void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline std::array<std::uint32_t, 4> philox_round(const std::array<std::uint32_t, 4>& c,
                                                 const PhiloxKey& k) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo32(kPhiloxM0, c[0], hi0, lo0);
    mulhilo32(kPhiloxM1, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k.k0, lo1, hi0 ^ c[3] ^ k.k1, lo0};
}

inline PhiloxKey derive_key(std::uint64_t master_seed, std::uint64_t trajectory) {
    const std::uint64_t k =
        mix64(master_seed + 0x9E3779B97F4A7C15ull * (trajectory + 1ull));
    return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

/// Map two 32-bit words to one uniform double in the open interval (0,1).
inline double to_unit_double(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t v = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return static_cast<double>(v >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

/// One block addressed by (pair index, interval, label) under a key.
inline std::array<std::uint32_t, 4> block_at(PhiloxKey key, std::uint32_t label,
                                             std::uint32_t interval, std::uint64_t pair_index) {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(pair_index),
        static_cast<std::uint32_t>(pair_index >> 32),
        interval,
        label,
    };
    return philox4x32(ctr, key);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, PhiloxKey key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key.k0 += kPhiloxW0;
            key.k1 += kPhiloxW1;
        }
        counter = philox_round(counter, key);
    }
    return counter;
}

std::uint64_t mix64(std::uint64_t v) noexcept {
    v ^= v >> 30;
    v *= 0xBF58476D1CE4E5B9ull;
    v ^= v >> 27;
    v *= 0x94D049BB133111EBull;
    v ^= v >> 31;
    return v;
}

UniformStream::UniformStream(const StreamId& id)
    : key_(derive_key(id.master_seed, id.trajectory)), label_(id.label), interval_(id.interval) {}

double UniformStream::at(std::uint64_t draw_index) const {
    const auto b = block_at(key_, label_, interval_, draw_index >> 1);
    return (draw_index & 1u) ? to_unit_double(b[2], b[3]) : to_unit_double(b[0], b[1]);
}

NormalStream::NormalStream(const StreamId& id)
    : key_(derive_key(id.master_seed, id.trajectory)), label_(id.label), interval_(id.interval) {}

double NormalStream::at(std::uint64_t draw_index) const {
    const auto b = block_at(key_, label_, interval_, draw_index >> 1);
    const double u1 = to_unit_double(b[0], b[1]);
    const double u2 = to_unit_double(b[2], b[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = kTwoPi * u2;
    return (draw_index & 1u) ? r * std::sin(a) : r * std::cos(a);
}

void NormalStream::fill(std::size_t n, double* out, std::uint64_t first) const {
    std::uint64_t i = first;
    std::size_t k = 0;
    // Leading odd draw, if any.
    if ((i & 1u) && k < n) {
        out[k++] = at(i++);
    }
    // Full pairs share one block.
    while (k + 2 <= n) {
        const auto b = block_at(key_, label_, interval_, i >> 1);
        const double u1 = to_unit_double(b[0], b[1]);
        const double u2 = to_unit_double(b[2], b[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = kTwoPi * u2;
        out[k++] = r * std::cos(a);
        out[k++] = r * std::sin(a);
        i += 2;
    }
    if (k < n) {
        out[k] = at(i);
    }
}

}  // namespace heis
