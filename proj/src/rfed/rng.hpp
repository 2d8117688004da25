#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rfed {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Generator keyed by a tuple of counters, e.g. (seed, purpose, round, client).
/// Streams depend only on the key, never on execution order.
inline std::mt19937_64 keyed_stream(std::initializer_list<std::uint64_t> key) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t k : key) h = splitmix64(h ^ splitmix64(k));
  return std::mt19937_64(h);
}

/// Stream purposes.
enum class StreamTag : std::uint64_t {
  ClientSampling = 1,
  ClientOption = 2,
  ServerOption = 3,
  InitialPoint = 4,
  Data = 5,
  Partition = 6,
  Bench = 7,
};

inline std::mt19937_64 keyed_stream(std::uint64_t seed, StreamTag tag, std::uint64_t a = 0,
                                    std::uint64_t b = 0) {
  return keyed_stream({seed, static_cast<std::uint64_t>(tag), a, b});
}

}  // namespace rfed
