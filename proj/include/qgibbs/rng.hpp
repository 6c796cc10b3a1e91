#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "qgibbs/linalg.hpp"

namespace qgibbs {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent seed from a master seed and a purpose label.
/// The mapping is fixed across platforms and releases, so every stream in a
/// run is reproducible from the master seed alone.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);
std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index);

Vector standard_normal(Rng& rng, Index d);

}  // namespace qgibbs
