#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace trialmatch {

// 64-bit FNV-1a over the raw bytes. Offset basis 0xcbf29ce484222325,
// prime 0x100000001b3.
constexpr std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// SplitMix64 step: advances `state` and returns the next output.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

std::string to_hex(std::uint64_t value);

}  // namespace trialmatch
