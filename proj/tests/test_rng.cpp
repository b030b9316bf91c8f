#include <doctest.h>

#include <set>

#include "matnet/rng.hpp"

using matnet::Rng;

TEST_CASE("rng streams are deterministic and serializable") {
  Rng a = Rng::stream(7, {1, 2, 3});
  Rng b = Rng::stream(7, {1, 2, 3});
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c = Rng::stream(7, {1, 2, 4});
  CHECK(a.next_u64() != c.next_u64());

  const std::string state = a.serialize();
  Rng d = Rng::deserialize(state);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == d.next_u64());
}

TEST_CASE("uniform_int covers the inclusive range") {
  Rng r(3);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    auto v = r.uniform_int(2, 9);
    CHECK(v >= 2);
    CHECK(v <= 9);
    seen.insert(v);
  }
  CHECK(seen.size() == 8);
}

TEST_CASE("permutation is a bijection") {
  Rng r(11);
  auto p = r.permutation(50);
  std::set<int> s(p.begin(), p.end());
  CHECK(s.size() == 50);
  CHECK(*s.begin() == 0);
  CHECK(*s.rbegin() == 49);
}

TEST_CASE("uniform_real stays in [0,1)") {
  Rng r(5);
  double mean = 0;
  for (int i = 0; i < 10000; ++i) {
    double u = r.uniform_real();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    mean += u;
  }
  mean /= 10000;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.02));
}
