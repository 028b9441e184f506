#include "capde/container.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "capde/errors.hpp"

namespace capde {

namespace {

constexpr char kMagic[8] = {'C', 'A', 'P', 'D', 'E', 'B', 'I', 'N'};

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& buf, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_u64(buf, bits);
}

void put_str(std::string& buf, const std::string& s) {
    put_u32(buf, static_cast<std::uint32_t>(s.size()));
    buf.append(s);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw TruncationError("container truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        std::uint64_t bits = u64();
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }
    std::string str() {
        std::uint32_t n = u32();
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

std::array<std::uint32_t, 256> make_crc_table() {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        table[i] = c;
    }
    return table;
}

}  // namespace

std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed) {
    static const auto table = make_crc_table();
    std::uint32_t c = seed ^ 0xFFFFFFFFu;
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) c = table[(c ^ p[i]) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

const Tensor& Container::array(const std::string& name) const {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw MissingInputError("container has no array: " + name);
    return it->second;
}

std::string Container::meta_or(const std::string& key, const std::string& fallback) const {
    auto it = meta.find(key);
    return it == meta.end() ? fallback : it->second;
}

void write_container(const Container& c, const std::string& path) {
    std::string buf;
    buf.append(kMagic, 8);
    put_u32(buf, Container::kVersion);
    put_u64(buf, 0);  // total length, patched below
    put_u32(buf, static_cast<std::uint32_t>(c.meta.size()));
    for (const auto& [k, v] : c.meta) {
        put_str(buf, k);
        put_str(buf, v);
    }
    put_u32(buf, static_cast<std::uint32_t>(c.arrays.size()));
    for (const auto& [name, t] : c.arrays) {
        put_str(buf, name);
        put_u32(buf, static_cast<std::uint32_t>(t.rank()));
        for (auto d : t.shape) put_u64(buf, d);
        for (double x : t.data) put_f64(buf, x);
    }
    const std::uint64_t total = buf.size() + 4;  // includes the trailing crc
    for (int i = 0; i < 8; ++i) buf[12 + i] = static_cast<char>((total >> (8 * i)) & 0xFF);
    put_u32(buf, crc32(buf.data(), buf.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw MissingInputError("cannot open for writing: " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw TruncationError("short write: " + path);
}

Container read_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("cannot open: " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 8 + 4 + 8 + 4) throw TruncationError("container too small: " + path);
    if (std::memcmp(buf.data(), kMagic, 8) != 0) throw VersionError("bad magic bytes: " + path);

    Reader r{buf, 8};
    std::uint32_t version = r.u32();
    if (version != Container::kVersion)
        throw VersionError("container version " + std::to_string(version) + " not supported (expected " +
                           std::to_string(Container::kVersion) + "): " + path);
    std::uint64_t total = r.u64();
    if (buf.size() < total) throw TruncationError("container truncated: " + path);
    if (buf.size() > total) throw TruncationError("trailing bytes after container: " + path);

    // checksum covers everything before the trailing u32
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i)
        stored |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[buf.size() - 4 + i])) << (8 * i);
    std::uint32_t computed = crc32(buf.data(), buf.size() - 4);
    if (stored != computed) throw ChecksumError("checksum mismatch in " + path);

    Container c;
    std::uint32_t n_meta = r.u32();
    for (std::uint32_t i = 0; i < n_meta; ++i) {
        std::string k = r.str();
        c.meta[k] = r.str();
    }
    std::uint32_t n_arrays = r.u32();
    for (std::uint32_t i = 0; i < n_arrays; ++i) {
        std::string name = r.str();
        std::uint32_t rank = r.u32();
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = static_cast<std::size_t>(r.u64());
        Tensor t(shape);
        for (auto& x : t.data) x = r.f64();
        c.arrays.emplace(std::move(name), std::move(t));
    }
    return c;
}

}  // namespace capde
