#include "qgibbs/rng.hpp"

namespace qgibbs {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

// FNV-1a, 64 bit.
std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  return splitmix64(splitmix64(master) ^ hash_label(label));
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index) {
  return splitmix64(derive_seed(master, label) + splitmix64(index));
}

Vector standard_normal(Rng& rng, Index d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector out(d);
  for (Index i = 0; i < d; ++i) out[i] = normal(rng);
  return out;
}

}  // namespace qgibbs
