#pragma once

#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace kmd {

// Default seed used by the CLI when neither --seed nor KMD_SEED is given.
inline constexpr std::uint64_t kDefaultSeed = 20231109;

namespace rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream id from a seed and a path of indices.
// Used everywhere a sub-computation (vertex, replicate, grid cell) needs
// its own reproducible randomness, independent of scheduling.
inline std::uint64_t stream(std::uint64_t seed) {
  std::uint64_t s = seed;
  return splitmix64(s);
}

template <typename... Ids>
std::uint64_t stream(std::uint64_t seed, std::uint64_t id, Ids... rest) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (id + 1));
  return stream(splitmix64(s), rest...);
}

inline std::mt19937_64 engine(std::uint64_t seed) {
  return std::mt19937_64(stream(seed));
}

template <typename... Ids>
std::mt19937_64 engine(std::uint64_t seed, Ids... ids) {
  return std::mt19937_64(stream(seed, static_cast<std::uint64_t>(ids)...));
}

// Stateless priority for random tie-breaking: candidate j gets an i.i.d.
// uniform 64-bit key per (seed, vertex). Ordering tied candidates by this
// key is a uniformly random order and is independent of traversal order.
inline std::uint64_t tie_priority(std::uint64_t seed, std::uint64_t vertex,
                                  std::uint64_t candidate) {
  return stream(seed, vertex, candidate);
}

}  // namespace rng

namespace exec {

inline int default_threads() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs f(i) for i in [0, n). f(i) must write only to state owned by index
// i, which makes the result identical for every thread count.
template <typename F>
void parallel_for(std::size_t n, F&& f, int threads = 0) {
  if (threads <= 0) threads = default_threads();
  if (threads == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::size_t nt = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    std::size_t lo = n * t / nt;
    std::size_t hi = n * (t + 1) / nt;
    pool.emplace_back([&f, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) f(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace exec
}  // namespace kmd
