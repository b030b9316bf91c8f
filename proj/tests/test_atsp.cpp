#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "matnet/atsp.hpp"
#include "matnet/kernels.hpp"
#include "matnet/lp.hpp"

using namespace matnet;
using namespace matnet::atsp;

TEST_CASE("tmat entries are integers in range with zero diagonal") {
  Rng rng(1);
  auto inst = generate_tmat(20, rng);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) {
      const double v = inst.d(i, j);
      if (i == j) {
        CHECK(v == 0);
      } else {
        CHECK(v >= 1);
        CHECK(v <= 1e6);
        CHECK(v == std::floor(v));
      }
    }
}

TEST_CASE("closure leaves an n=2 instance unchanged") {
  Rng rng(2);
  auto inst = generate_tmat(2, rng);
  // With no third city the relaxation has no k outside {i,j}.
  CHECK(inst.d(0, 1) >= 1);
  CHECK(inst.d(1, 0) >= 1);
  CHECK(is_triangle_closed(inst));
}

TEST_CASE("one forced min-plus relaxation") {
  // d(0,2)=9 exceeds d(0,1)+d(1,2)=5 and must collapse to 5.
  std::vector<double> d = {0, 2, 9,  //
                           4, 0, 3,  //
                           7, 8, 0};
  std::vector<double> out(9);
  kernels::minplus_pass(d.data(), out.data(), 3);
  CHECK(out[2] == 5);
}

TEST_CASE("generated tmat instances are triangle-closed fixpoints") {
  for (int i = 0; i < 50; ++i) {
    Rng rng = Rng::stream(3, {static_cast<std::uint64_t>(i)});
    auto inst = generate_tmat(20, rng);
    CHECK(count_triangle_violations(inst) == 0);
    CHECK(is_triangle_closed(inst));
  }
}

TEST_CASE("euclidean instances are symmetric and metric") {
  Rng rng(4);
  auto inst = generate_euclidean(12, rng);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) CHECK(inst.d(i, j) == inst.d(j, i));
  CHECK(count_triangle_violations(inst) == 0);
}

TEST_CASE("collinear points sit on the triangle boundary") {
  // (0,0), (0.5,0), (1,0): d(0,2) = d(0,1) + d(1,2).
  AtspInstance inst;
  inst.n = 3;
  inst.dist = {0, 0.5, 1, 0.5, 0, 0.5, 1, 0.5, 0};
  CHECK(inst.d(0, 2) == inst.d(0, 1) + inst.d(1, 2));
  CHECK(count_triangle_violations(inst) == 0);
}

TEST_CASE("tour length for n=2 sums both arcs either way") {
  AtspInstance inst;
  inst.n = 2;
  inst.dist = {0, 7, 11, 0};
  CHECK(tour_length(inst, {0, 1}) == 18);
  CHECK(tour_length(inst, {1, 0}) == 18);
}

TEST_CASE("tour length is rotation invariant") {
  Rng rng(5);
  auto inst = generate_tmat(8, rng);
  std::vector<int> perm = rng.permutation(8);
  const double base = tour_length(inst, perm);
  std::rotate(perm.begin(), perm.begin() + 3, perm.end());
  CHECK(tour_length(inst, perm) == base);
}

TEST_CASE("tour length equals an independent per-arc summation") {
  Rng rng(6);
  auto inst = generate_tmat(6, rng);
  const std::vector<int> perm = rng.permutation(6);
  double expect = 0;
  for (int t = 0; t < 6; ++t)
    expect += inst.d(perm[static_cast<std::size_t>(t)],
                     perm[static_cast<std::size_t>((t + 1) % 6)]);
  CHECK(tour_length(inst, perm) == expect);
}

TEST_CASE("tour length rejects non-permutations") {
  Rng rng(7);
  auto inst = generate_tmat(4, rng);
  CHECK_THROWS(tour_length(inst, {0, 1, 2, 2}));
  CHECK_THROWS(tour_length(inst, {0, 1, 2}));
}

TEST_CASE("nearest neighbor follows the manual trace") {
  // From 0: nearest is 2 (d=1); from 2: nearest unvisited is 1 (d=2);
  // then 3 closes the loop.
  AtspInstance inst;
  inst.n = 4;
  inst.dist = {0, 5, 1, 9,   //
               4, 0, 6, 8,   //
               7, 2, 0, 3,   //
               2, 6, 5, 0};
  Tour t = nearest_neighbor(inst);
  CHECK(t.perm == std::vector<int>{0, 2, 1, 3});
  CHECK(t.length == 1 + 2 + 8 + 2);
}

TEST_CASE("insertion heuristics produce valid deterministic tours") {
  Rng rng(8);
  auto inst = generate_tmat(15, rng);
  Tour ni = nearest_insertion(inst);
  Tour fi = furthest_insertion(inst);
  CHECK(tour_length(inst, ni.perm) == ni.length);
  CHECK(tour_length(inst, fi.perm) == fi.length);
  // Determinism: same instance, same tours.
  CHECK(nearest_insertion(inst).perm == ni.perm);
  CHECK(furthest_insertion(inst).perm == fi.perm);
}

TEST_CASE("held-karp on n=3 is the better of both 3-cycles") {
  AtspInstance inst;
  inst.n = 3;
  inst.dist = {0, 2, 9,  //
               4, 0, 3,  //
               7, 8, 0};
  // 0-1-2-0 = 2+3+7 = 12; 0-2-1-0 = 9+8+4 = 21.
  CHECK(held_karp(inst) == 12);
}

namespace {
double brute_force_tsp(const AtspInstance& inst) {
  std::vector<int> perm(static_cast<std::size_t>(inst.n));
  for (int i = 0; i < inst.n; ++i) perm[static_cast<std::size_t>(i)] = i;
  double best = 1e300;
  // Fix city 0 first; enumerate the remaining (n-1)!.
  std::sort(perm.begin() + 1, perm.end());
  do {
    best = std::min(best, tour_length(inst, perm));
  } while (std::next_permutation(perm.begin() + 1, perm.end()));
  return best;
}
}  // namespace

TEST_CASE("held-karp equals factorial enumeration at n=8") {
  Rng rng(9);
  auto inst = generate_tmat(8, rng);
  CHECK(held_karp(inst) == brute_force_tsp(inst));
}

TEST_CASE("the optimum never exceeds any heuristic tour") {
  for (int i = 0; i < 30; ++i) {
    Rng rng = Rng::stream(10, {static_cast<std::uint64_t>(i)});
    auto inst = generate_tmat(10, rng);
    const double opt = held_karp(inst);
    CHECK(opt <= nearest_neighbor(inst).length);
    CHECK(opt <= nearest_insertion(inst).length);
    CHECK(opt <= furthest_insertion(inst).length);
  }
}

TEST_CASE("held-karp refuses oversized instances") {
  Rng rng(11);
  auto inst = generate_tmat(17, rng);
  CHECK_THROWS(held_karp(inst));
}

namespace {
std::vector<double> uniform_unvisited_policy(int n, const std::vector<char>& visited) {
  std::vector<double> p(static_cast<std::size_t>(n), 0.0);
  int free_count = 0;
  for (int j = 0; j < n; ++j)
    if (!visited[static_cast<std::size_t>(j)]) ++free_count;
  for (int j = 0; j < n; ++j)
    if (!visited[static_cast<std::size_t>(j)]) p[static_cast<std::size_t>(j)] = 1.0 / free_count;
  return p;
}
}  // namespace

TEST_CASE("rollout on n=2 is a forced choice with zero log-prob") {
  AtspInstance inst;
  inst.n = 2;
  inst.dist = {0, 3, 4, 0};
  Rng rng(12);
  auto policy = [&](int, int, const std::vector<char>& visited) {
    return uniform_unvisited_policy(2, visited);
  };
  auto traj = env_rollout(inst, policy, 0, Mode::Sample, rng);
  CHECK(traj.perm == std::vector<int>{0, 1});
  CHECK(traj.logprob == 0.0);
  CHECK(traj.length == 7);
}

TEST_CASE("rollouts always generate valid permutations") {
  for (int i = 0; i < 100; ++i) {
    Rng rng = Rng::stream(13, {static_cast<std::uint64_t>(i)});
    auto inst = generate_tmat(12, rng);
    auto policy = [&](int, int, const std::vector<char>& visited) {
      return uniform_unvisited_policy(12, visited);
    };
    auto traj = env_rollout(inst, policy, static_cast<int>(rng.uniform_int(0, 11)), Mode::Sample,
                            rng);
    CHECK_NOTHROW(tour_length(inst, traj.perm));  // validates the permutation
    CHECK(traj.length == tour_length(inst, traj.perm));
  }
}

TEST_CASE("mtz export has the documented variable and row counts at n=3") {
  Rng rng(14);
  auto inst = generate_tmat(3, rng);
  lp::Model m = lp::Model::parse(export_mtz_lp(inst));
  CHECK(m.count_vars_with_prefix("x_") == 6);
  CHECK(m.count_vars_with_prefix("u_") == 2);
  CHECK(m.binaries.size() == 6);
  int degree = 0, mtz = 0;
  for (const auto& c : m.constraints) {
    if (c.name.rfind("in_", 0) == 0 || c.name.rfind("out_", 0) == 0) ++degree;
    if (c.name.rfind("mtz_", 0) == 0) ++mtz;
  }
  CHECK(degree == 6);
  CHECK(mtz == 2);
}

TEST_CASE("a tour maps to a feasible point of the exported mtz model") {
  for (int trial = 0; trial < 5; ++trial) {
    Rng rng = Rng::stream(15, {static_cast<std::uint64_t>(trial)});
    auto inst = generate_tmat(7, rng);
    lp::Model m = lp::Model::parse(export_mtz_lp(inst));

    const Tour tour = nearest_neighbor(inst);
    std::map<std::string, double> assign;
    for (int t = 0; t < inst.n; ++t) {
      const int a = tour.perm[static_cast<std::size_t>(t)];
      const int b = tour.perm[static_cast<std::size_t>((t + 1) % inst.n)];
      assign["x_" + std::to_string(a + 1) + "_" + std::to_string(b + 1)] = 1;
    }
    // u_i = position of city i in the tour (tour starts at city 0).
    for (int t = 1; t < inst.n; ++t)
      assign["u_" + std::to_string(tour.perm[static_cast<std::size_t>(t)] + 1)] = t;
    auto violation = m.check_feasible(assign);
    if (violation) FAIL(*violation);
    CHECK(m.objective_value(assign) == tour.length);
  }
}

TEST_CASE("instance files round-trip") {
  Rng rng(16);
  auto inst = generate_tmat(9, rng);
  auto back = read_instance(write_instance(inst));
  CHECK(back.n == inst.n);
  CHECK(back.dist == inst.dist);

  auto eu = generate_euclidean(5, rng);
  auto eu_back = read_instance(write_instance(eu));
  CHECK(eu_back.dist == eu.dist);
}

TEST_CASE("tour files round-trip") {
  Rng rng(17);
  auto inst = generate_tmat(6, rng);
  Tour t = furthest_insertion(inst);
  Tour back = read_tour(write_tour(t), inst);
  CHECK(back.perm == t.perm);
  CHECK(back.length == t.length);
}
