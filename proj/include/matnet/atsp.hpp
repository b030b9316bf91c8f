#pragma once

#include <functional>
#include <string>
#include <vector>

#include "matnet/rng.hpp"

namespace matnet::atsp {

// Distance matrix instance. Entries are stored as doubles; tmat-class
// instances hold exact integers (sums stay far below 2^53).
struct AtspInstance {
  int n = 0;
  std::vector<double> dist;  // row-major n*n, diagonal 0

  double d(int i, int j) const { return dist[static_cast<std::size_t>(i) * n + j]; }
  double& d(int i, int j) { return dist[static_cast<std::size_t>(i) * n + j]; }
};

struct Tour {
  std::vector<int> perm;
  double length = 0;
};

// Random integer matrix closed under the min-plus relaxation
// d(i,j) <- min(d(i,j), d(i,k)+d(k,j)), iterated to a fixpoint.
AtspInstance generate_tmat(int n, Rng& rng, std::int64_t min_val = 1,
                           std::int64_t max_val = 1000000);

// Symmetric distances from uniform points on the unit square.
AtspInstance generate_euclidean(int n, Rng& rng);

// True when one more min-plus pass would change nothing.
bool is_triangle_closed(const AtspInstance& inst);
// Exhaustive (i,j,k) triangle-inequality audit; returns violation count.
std::int64_t count_triangle_violations(const AtspInstance& inst);

// Round-trip length of a permutation (throws if not a permutation).
double tour_length(const AtspInstance& inst, const std::vector<int>& perm);

// Greedy construction baselines; all deterministic, ties toward the
// lowest city index (then lowest insertion position).
Tour nearest_neighbor(const AtspInstance& inst, int start = 0);
Tour nearest_insertion(const AtspInstance& inst);
Tour furthest_insertion(const AtspInstance& inst);

// Exact optimum by bitmask dynamic programming; n <= 16.
double held_karp(const AtspInstance& inst);
constexpr int kHeldKarpMaxN = 16;

// Rollout driven by an arbitrary probability policy. The policy sees
// (first city, current city, visited flags) and returns a probability
// row over all n cities; visited cities must carry probability zero.
struct RolloutResult {
  std::vector<int> perm;
  double logprob = 0;
  double length = 0;
};
enum class Mode { Greedy, Sample };
Mode mode_from_string(const std::string& s);
std::string to_string(Mode m);

using StepPolicy =
    std::function<std::vector<double>(int first, int current, const std::vector<char>& visited)>;
RolloutResult env_rollout(const AtspInstance& inst, const StepPolicy& policy, int start_city,
                          Mode mode, Rng& rng);

// MTZ formulation as CPLEX-style LP text (binary x_i_j, continuous u_i).
std::string export_mtz_lp(const AtspInstance& inst);

// Text format: line 1 "ATSP n", then n rows of n numbers.
std::string write_instance(const AtspInstance& inst);
AtspInstance read_instance(const std::string& text);
void save_instance(const AtspInstance& inst, const std::string& path);
AtspInstance load_instance(const std::string& path);

// Solution file: "TOUR n" + permutation line.
std::string write_tour(const Tour& tour);
Tour read_tour(const std::string& text, const AtspInstance& inst);

}  // namespace matnet::atsp
