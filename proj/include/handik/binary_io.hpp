#pragma once

// Little-endian primitive encoding shared by the HFM1, SIK1 and SKN1
// containers. Values are encoded byte by byte so the layout does not depend
// on host endianness.

#include <bit>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace handik::binio {

class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_;
};

class Writer {
public:
    void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f32(float v) { put(std::bit_cast<std::uint32_t>(v), 4); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    void f64_array(const std::vector<double>& values) {
        u64(values.size());
        for (double v : values) f64(v);
    }

    const std::vector<char>& bytes() const { return bytes_; }
    std::vector<char> take() { return std::move(bytes_); }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
    std::vector<char> bytes_;
};

class Reader {
public:
    explicit Reader(std::string_view data) : data_(data) {}

    void expect_magic(std::string_view m) {
        require(m.size(), "truncated magic");
        if (data_.substr(pos_, m.size()) != m) {
            throw FormatError("bad magic, expected \"" + std::string(m) + "\"", pos_);
        }
        pos_ += m.size();
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get(4))); }
    double f64() { return std::bit_cast<double>(get(8)); }
    std::vector<double> f64_array(std::uint64_t expected) {
        const std::uint64_t at = pos_;
        const std::uint64_t n = u64();
        if (n != expected) {
            throw FormatError("array length " + std::to_string(n) + " != expected " + std::to_string(expected), at);
        }
        std::vector<double> out(n);
        for (auto& v : out) v = f64();
        return out;
    }

    std::uint64_t offset() const { return pos_; }
    std::uint64_t remaining() const { return data_.size() - pos_; }
    void require(std::uint64_t n, const std::string& what) const {
        if (remaining() < n) throw FormatError(what, pos_);
    }

private:
    std::uint64_t get(int n) {
        require(static_cast<std::uint64_t>(n), "unexpected end of data");
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += static_cast<std::uint64_t>(n);
        return v;
    }
    std::string_view data_;
    std::uint64_t pos_ = 0;
};

std::vector<char> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<char>& bytes);

/// 64-bit FNV-1a, used to fingerprint embedded models.
inline std::uint64_t fnv1a(const std::vector<char>& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace handik::binio
