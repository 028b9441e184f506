#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "capde/tensor.hpp"

namespace capde {

// Self-describing binary container shared by checkpoints and datasets:
//   magic(8) | version u32 | meta count + (key,value) strings |
//   array count + (name, rank, dims u64..., f64 data...) | crc32
// All integers and floats little-endian; bit-exact round trip.
struct Container {
    static constexpr std::uint32_t kVersion = 1;

    std::map<std::string, std::string> meta;
    std::map<std::string, Tensor> arrays;

    void put_array(const std::string& name, Tensor t) { arrays[name] = std::move(t); }
    const Tensor& array(const std::string& name) const;
    bool has_array(const std::string& name) const { return arrays.count(name) != 0; }
    std::string meta_or(const std::string& key, const std::string& fallback) const;
};

void write_container(const Container& c, const std::string& path);
// Throws VersionError / TruncationError / ChecksumError as appropriate.
Container read_container(const std::string& path);

std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

}  // namespace capde
