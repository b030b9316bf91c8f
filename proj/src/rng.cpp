#include "matnet/rng.hpp"

#include <cinttypes>
#include <cstdio>
#include <stdexcept>

namespace matnet {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}
}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& word : s_) word = splitmix64(sm);
}

Rng Rng::stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t sm = seed;
  std::uint64_t mixed = splitmix64(sm);
  for (std::uint64_t p : path) {
    sm = mixed ^ (p + 0x9e3779b97f4a7c15ULL);
    mixed = splitmix64(sm);
  }
  return Rng(mixed);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform_real() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform_range(double lo, double hi) {
  return lo + (hi - lo) * uniform_real();
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw std::invalid_argument("Rng::uniform_int: hi < lo");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(next_u64());  // full range
  const std::uint64_t limit = (~std::uint64_t{0} / span) * span;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return lo + static_cast<std::int64_t>(x % span);
}

std::vector<int> Rng::permutation(int n) {
  std::vector<int> p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
  shuffle(p);
  return p;
}

std::string Rng::serialize() const {
  char buf[4 * 17 + 1];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64 "%016" PRIx64 "%016" PRIx64 "%016" PRIx64,
                s_[0], s_[1], s_[2], s_[3]);
  return std::string(buf);
}

Rng Rng::deserialize(const std::string& text) {
  if (text.size() != 64) throw std::invalid_argument("Rng::deserialize: bad state length");
  Rng r(0);
  for (int i = 0; i < 4; ++i) {
    std::uint64_t w = 0;
    if (std::sscanf(text.c_str() + i * 16, "%16" SCNx64, &w) != 1)
      throw std::invalid_argument("Rng::deserialize: bad state encoding");
    r.s_[i] = w;
  }
  return r;
}

}  // namespace matnet
