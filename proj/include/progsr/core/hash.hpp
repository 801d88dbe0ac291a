#pragma once

#include <cstdint>
#include <cstring>
#include <iomanip>
#include <span>
#include <sstream>
#include <string>
#include <string_view>

namespace progsr {

// FNV-1a, 64-bit. Used for parameter fingerprints and config hashes.
class Fnv1a {
 public:
  void update(const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void update(std::string_view s) { update(s.data(), s.size()); }

  template <typename T>
  void update_values(std::span<const T> values) {
    // Hash doubles so a float model and its widened copy fingerprint alike.
    for (T v : values) {
      const double d = static_cast<double>(v);
      update(&d, sizeof d);
    }
  }

  std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

inline std::uint64_t hash_string(std::string_view s) {
  Fnv1a h;
  h.update(s);
  return h.digest();
}

}  // namespace progsr
