#ifndef S2C_BINARY_IO_HPP
#define S2C_BINARY_IO_HPP

#include "s2c/common.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

namespace s2c {

static_assert(std::endian::native == std::endian::little, "binary containers assume a little-endian host");

/// Little-endian primitive writer for the S2FM / S2CK containers.
class BinaryWriter {
public:
    explicit BinaryWriter(std::ostream& out) : out_(out) {}

    void magic(const char (&tag)[5]) { out_.write(tag, 4); }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void f32(float v) { raw(&v, 4); }
    void bytes(const std::string& s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }

private:
    void raw(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
    std::ostream& out_;
};

class BinaryReader {
public:
    BinaryReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    void expect_magic(const char (&tag)[5]) {
        char got[4];
        raw(got, 4);
        if (std::memcmp(got, tag, 4) != 0) throw IoError(source_ + ": bad magic, expected " + std::string(tag));
    }
    std::uint32_t u32() {
        std::uint32_t v;
        raw(&v, 4);
        return v;
    }
    float f32() {
        float v;
        raw(&v, 4);
        return v;
    }
    std::string bytes(std::size_t n) {
        std::string s(n, '\0');
        raw(s.data(), n);
        return s;
    }

private:
    void raw(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (in_.gcount() != static_cast<std::streamsize>(n)) throw IoError(source_ + ": unexpected end of file");
    }
    std::istream& in_;
    std::string source_;
};

} // namespace s2c

#endif
