#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "tge/error.hpp"

namespace tge {

// Little-endian binary stream helpers shared by all container formats.
struct BinWriter {
  std::ostream& out;
  explicit BinWriter(std::ostream& o) : out(o) {}

  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.write(buf, sizeof(T));
  }
  void put_bytes(const void* p, std::size_t n) { out.write(static_cast<const char*>(p), n); }
  void put_string(const std::string& s) {
    put<std::uint64_t>(s.size());
    put_bytes(s.data(), s.size());
  }
};

struct BinReader {
  std::istream& in;
  explicit BinReader(std::istream& i) : in(i) {}

  template <typename T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    char buf[sizeof(T)];
    in.read(buf, sizeof(T));
    if (!in) throw DataError("unexpected end of binary stream");
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }
  void get_bytes(void* p, std::size_t n) {
    in.read(static_cast<char*>(p), n);
    if (!in) throw DataError("unexpected end of binary stream");
  }
  std::string get_string() {
    const auto n = get<std::uint64_t>();
    std::string s(n, '\0');
    if (n) get_bytes(s.data(), n);
    return s;
  }
};

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

// Shortest round-trip decimal form; parsing it back recovers the exact value.
inline std::string fmt_g(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::vector<std::string> read_lines(const std::string& path);

}  // namespace tge
