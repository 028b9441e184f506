#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace capde {

// Counter-based RNG. A stream is fully determined by (seed, name), so
// per-environment / per-trajectory / per-init sub-streams can be drawn
// independently and in parallel while staying bit-reproducible.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::string_view name);

    std::uint64_t next_u64();
    // [0, 1)
    double uniform();
    double uniform(double lo, double hi);
    // standard normal via Box-Muller (pairwise, no cached state)
    double normal();
    // {0, ..., n-1}
    std::uint64_t uniform_int(std::uint64_t n);

    std::uint64_t key() const { return key_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Derive a child stream name, e.g. sub_stream("env", 3) -> "env/3".
std::string stream_name(std::string_view base, std::uint64_t index);

}  // namespace capde
