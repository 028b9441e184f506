#include "capde/rng.hpp"

#include <cmath>

namespace capde {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t splitmix64(std::uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::string_view name) {
    key_ = splitmix64(splitmix64(seed) ^ fnv1a(name));
}

std::uint64_t RngStream::next_u64() { return splitmix64(key_ ^ (counter_++ * kGolden)); }

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::normal() {
    // Box-Muller; draws a fresh pair every call so the stream stays
    // counter-addressable.
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t RngStream::uniform_int(std::uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
}

std::string stream_name(std::string_view base, std::uint64_t index) {
    return std::string(base) + "/" + std::to_string(index);
}

}  // namespace capde
