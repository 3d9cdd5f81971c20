#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace uqbot {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used to derive independent child seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Labeled seed derivation: derive_seed(master, "ensemble") never collides with
// derive_seed(master, "swag") for practical purposes, and is stable across
// runs and platforms. Results are masked to 48 bits so they survive a
// round-trip through JSON numbers and `base + s` offsets.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view label) noexcept {
  return mix64(master ^ mix64(fnv1a(label))) & 0xFFFFFFFFFFFFULL;
}

}  // namespace uqbot
