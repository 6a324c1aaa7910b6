#pragma once

#include <cstdint>

namespace ironbench {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent child seed for a named stream of a parent seed.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) noexcept {
  return splitmix64(parent ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

namespace seed_stream {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t shuffle = 2;
inline constexpr std::uint64_t dropout = 3;
inline constexpr std::uint64_t pairs = 4;
inline constexpr std::uint64_t merge = 5;
}  // namespace seed_stream

}  // namespace ironbench
