#pragma once

#include <boost/random/normal_distribution.hpp>

#include <cstdint>
#include <random>

namespace wicksell {

/// Identifies one reproducible random stream: the same (master_seed,
/// replicate_index, purpose) always yields the same numbers, and distinct
/// keys yield unrelated streams.
struct StreamKey
{
  std::uint64_t master_seed = 0;
  std::uint64_t replicate_index = 0;
};

enum class StreamPurpose : std::uint32_t
{
  sample = 1,
  covariance = 2,
  paths = 3,   // L_x limit paths
  meta = 4,
  paths_w = 5, // W limit paths
  normal = 6,  // draws of the normal limit
};

using Engine = std::mt19937_64;

/// std::seed_seq and mt19937_64 are fully specified by the standard, so the
/// stream is identical on every conforming platform.
inline Engine make_engine(StreamKey key, StreamPurpose purpose)
{
  std::seed_seq seq{
      static_cast<std::uint32_t>(key.master_seed),
      static_cast<std::uint32_t>(key.master_seed >> 32),
      static_cast<std::uint32_t>(key.replicate_index),
      static_cast<std::uint32_t>(key.replicate_index >> 32),
      static_cast<std::uint32_t>(purpose)};
  return Engine(seq);
}

/// Uniform on the open interval (0, 1) from the top 53 bits.
inline double uniform01(Engine& e)
{
  return (static_cast<double>(e() >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal; Boost's ziggurat is header-only and platform independent.
inline double standard_normal(Engine& e)
{
  boost::random::normal_distribution<double> nd;
  return nd(e);
}

} // namespace wicksell
