#pragma once

#include <cstdint>

namespace mixcov {

//! splitmix64 finaliser.
inline std::uint64_t mix64(std::uint64_t z)
{
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

//! Seed of the r-th independent stream derived from a master seed.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t r)
{
  return mix64(mix64(master) ^ mix64(r + 0x632be59bd9b4e019ULL));
}

} // namespace mixcov
