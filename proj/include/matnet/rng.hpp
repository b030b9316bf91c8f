#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace matnet {

// SplitMix64 step; used for seed expansion and stream derivation.
std::uint64_t splitmix64(std::uint64_t& state);

// xoshiro256** generator. Self-contained so that every draw is
// bit-reproducible across compilers and standard libraries (the std
// distributions are not). State serializes into checkpoints.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed);

  // Derives an independent stream from (seed, path...) without touching
  // any shared state. Streams for (gen, epoch, batch, instance) come
  // from here so results do not depend on thread scheduling.
  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  std::uint64_t next_u64();

  // Uniform on [0,1) with 53 random bits.
  double uniform_real();
  // Uniform on [lo,hi), both real.
  double uniform_range(double lo, double hi);
  // Uniform integer on [lo,hi] inclusive, unbiased (rejection).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::int64_t i = static_cast<std::int64_t>(v.size()) - 1; i > 0; --i) {
      std::int64_t j = uniform_int(0, i);
      std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
    }
  }

  // Uniform random permutation of 0..n-1.
  std::vector<int> permutation(int n);

  std::string serialize() const;
  static Rng deserialize(const std::string& text);

 private:
  std::uint64_t s_[4];
};

}  // namespace matnet
