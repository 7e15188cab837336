#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace begp {

// splitmix64 finalizer; used to turn (seed, tags...) into independent streams.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t base) { return mix64(base); }

template <typename Tag, typename... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t base, Tag tag, Rest... rest) {
  std::uint64_t t;
  if constexpr (std::is_convertible_v<Tag, std::string_view>) {
    t = hash_tag(tag);
  } else {
    t = static_cast<std::uint64_t>(tag);
  }
  return derive_seed(mix64(base ^ mix64(t)), rest...);
}

// Deterministic stream of uniforms/normals.  Deliberately avoids
// std::uniform_real_distribution / std::normal_distribution so the byte
// sequence does not depend on the standard library implementation.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {  // Box-Muller, no cached spare
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace begp
