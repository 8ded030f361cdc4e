#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>

namespace uavsim::detail {

// FNV-1a, used for payload and state digests in logs.
struct Fnv {
  std::uint64_t h = 1469598103934665603ull;

  void add(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  void add(int v) { add(static_cast<std::uint64_t>(static_cast<std::int64_t>(v))); }
  void add(double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof d);
    add(bits);
  }
  void add(const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }
};

}  // namespace uavsim::detail
