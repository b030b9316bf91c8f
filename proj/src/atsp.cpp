#include "matnet/atsp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "matnet/kernels.hpp"
#include "matnet/lp.hpp"

namespace matnet::atsp {

AtspInstance generate_tmat(int n, Rng& rng, std::int64_t min_val, std::int64_t max_val) {
  if (n < 2) throw std::invalid_argument("generate_tmat: n must be >= 2");
  AtspInstance inst;
  inst.n = n;
  inst.dist.resize(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      inst.dist[static_cast<std::size_t>(i) * n + j] =
          i == j ? 0.0 : static_cast<double>(rng.uniform_int(min_val, max_val));

  std::vector<double> next(inst.dist.size());
  while (kernels::minplus_pass(inst.dist.data(), next.data(), n)) inst.dist.swap(next);
  return inst;
}

AtspInstance generate_euclidean(int n, Rng& rng) {
  if (n < 2) throw std::invalid_argument("generate_euclidean: n must be >= 2");
  std::vector<double> xs(static_cast<std::size_t>(n)), ys(xs.size());
  for (int i = 0; i < n; ++i) {
    xs[static_cast<std::size_t>(i)] = rng.uniform_real();
    ys[static_cast<std::size_t>(i)] = rng.uniform_real();
  }
  AtspInstance inst;
  inst.n = n;
  inst.dist.resize(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double dx = xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)];
      const double dy = ys[static_cast<std::size_t>(i)] - ys[static_cast<std::size_t>(j)];
      inst.d(i, j) = std::sqrt(dx * dx + dy * dy);
    }
  return inst;
}

bool is_triangle_closed(const AtspInstance& inst) {
  std::vector<double> next(inst.dist.size());
  return !kernels::minplus_pass(inst.dist.data(), next.data(), inst.n);
}

std::int64_t count_triangle_violations(const AtspInstance& inst) {
  std::int64_t violations = 0;
  const int n = inst.n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        if (inst.d(i, j) > inst.d(i, k) + inst.d(k, j)) ++violations;
  return violations;
}

namespace {
void check_permutation(const std::vector<int>& perm, int n) {
  if (static_cast<int>(perm.size()) != n)
    throw std::invalid_argument("tour: expected " + std::to_string(n) + " cities, got " +
                                std::to_string(perm.size()));
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (int c : perm) {
    if (c < 0 || c >= n || seen[static_cast<std::size_t>(c)])
      throw std::invalid_argument("tour: not a permutation (city " + std::to_string(c) + ")");
    seen[static_cast<std::size_t>(c)] = 1;
  }
}
}  // namespace

double tour_length(const AtspInstance& inst, const std::vector<int>& perm) {
  check_permutation(perm, inst.n);
  double len = 0;
  for (int t = 0; t + 1 < inst.n; ++t)
    len += inst.d(perm[static_cast<std::size_t>(t)], perm[static_cast<std::size_t>(t + 1)]);
  len += inst.d(perm[static_cast<std::size_t>(inst.n - 1)], perm[0]);
  return len;
}

Tour nearest_neighbor(const AtspInstance& inst, int start) {
  const int n = inst.n;
  std::vector<char> visited(static_cast<std::size_t>(n), 0);
  Tour tour;
  tour.perm.reserve(static_cast<std::size_t>(n));
  int current = start;
  visited[static_cast<std::size_t>(current)] = 1;
  tour.perm.push_back(current);
  for (int step = 1; step < n; ++step) {
    int best = -1;
    for (int j = 0; j < n; ++j) {
      if (visited[static_cast<std::size_t>(j)]) continue;
      if (best < 0 || inst.d(current, j) < inst.d(current, best)) best = j;
    }
    visited[static_cast<std::size_t>(best)] = 1;
    tour.perm.push_back(best);
    current = best;
  }
  tour.length = tour_length(inst, tour.perm);
  return tour;
}

namespace {

// Insertion framework shared by NI and FI. The partial tour starts as
// the single-city loop {0}. For each outside city the cheapest insertion
// point is determined first; NI then commits the city with the smallest
// such increment, FI the one with the largest.
Tour insertion_tour(const AtspInstance& inst, bool furthest) {
  const int n = inst.n;
  std::vector<int> tour{0};
  std::vector<char> in_tour(static_cast<std::size_t>(n), 0);
  in_tour[0] = 1;

  while (static_cast<int>(tour.size()) < n) {
    const int k = static_cast<int>(tour.size());
    int chosen_city = -1, chosen_pos = -1;
    double chosen_inc = 0;
    for (int c = 0; c < n; ++c) {
      if (in_tour[static_cast<std::size_t>(c)]) continue;
      // Cheapest insertion point for c (lowest position wins ties).
      int best_pos = -1;
      double best_inc = std::numeric_limits<double>::infinity();
      for (int pos = 0; pos < k; ++pos) {
        const int a = tour[static_cast<std::size_t>(pos)];
        const int b = tour[static_cast<std::size_t>((pos + 1) % k)];
        const double inc = inst.d(a, c) + inst.d(c, b) - inst.d(a, b);
        if (inc < best_inc) {
          best_inc = inc;
          best_pos = pos;
        }
      }
      const bool better = chosen_city < 0 || (furthest ? best_inc > chosen_inc
                                                       : best_inc < chosen_inc);
      if (better) {
        chosen_city = c;
        chosen_pos = best_pos;
        chosen_inc = best_inc;
      }
    }
    tour.insert(tour.begin() + chosen_pos + 1, chosen_city);
    in_tour[static_cast<std::size_t>(chosen_city)] = 1;
  }

  Tour out;
  out.perm = std::move(tour);
  out.length = tour_length(inst, out.perm);
  return out;
}

}  // namespace

Tour nearest_insertion(const AtspInstance& inst) { return insertion_tour(inst, false); }
Tour furthest_insertion(const AtspInstance& inst) { return insertion_tour(inst, true); }

double held_karp(const AtspInstance& inst) {
  const int n = inst.n;
  if (n < 2) throw std::invalid_argument("held_karp: n must be >= 2");
  if (n > kHeldKarpMaxN)
    throw std::invalid_argument("held_karp: n=" + std::to_string(n) + " exceeds capacity " +
                                std::to_string(kHeldKarpMaxN));
  // dp[S][j]: min cost path 0 -> city j+1 visiting exactly the cities
  // in S (bit i of S = city i+1). City 0 is the fixed start.
  const int m = n - 1;
  const std::size_t full = std::size_t{1} << m;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dp(full * static_cast<std::size_t>(m), inf);
  for (int j = 0; j < m; ++j)
    dp[(std::size_t{1} << j) * static_cast<std::size_t>(m) + static_cast<std::size_t>(j)] =
        inst.d(0, j + 1);
  for (std::size_t s = 1; s < full; ++s) {
    for (int j = 0; j < m; ++j) {
      if (!(s & (std::size_t{1} << j))) continue;
      const double cur = dp[s * static_cast<std::size_t>(m) + static_cast<std::size_t>(j)];
      if (cur == inf) continue;
      for (int k = 0; k < m; ++k) {
        if (s & (std::size_t{1} << k)) continue;
        const std::size_t ns = s | (std::size_t{1} << k);
        double& slot = dp[ns * static_cast<std::size_t>(m) + static_cast<std::size_t>(k)];
        const double cand = cur + inst.d(j + 1, k + 1);
        if (cand < slot) slot = cand;
      }
    }
  }
  double best = inf;
  for (int j = 0; j < m; ++j)
    best = std::min(best, dp[(full - 1) * static_cast<std::size_t>(m) + static_cast<std::size_t>(j)] +
                              inst.d(j + 1, 0));
  return best;
}

Mode mode_from_string(const std::string& s) {
  if (s == "greedy") return Mode::Greedy;
  if (s == "sample") return Mode::Sample;
  throw std::invalid_argument("unknown decode mode: " + s);
}

std::string to_string(Mode m) { return m == Mode::Greedy ? "greedy" : "sample"; }

RolloutResult env_rollout(const AtspInstance& inst, const StepPolicy& policy, int start_city,
                          Mode mode, Rng& rng) {
  const int n = inst.n;
  RolloutResult out;
  std::vector<char> visited(static_cast<std::size_t>(n), 0);
  visited[static_cast<std::size_t>(start_city)] = 1;
  out.perm.push_back(start_city);
  int current = start_city;
  for (int step = 1; step < n; ++step) {
    const std::vector<double> probs = policy(start_city, current, visited);
    int chosen;
    if (mode == Mode::Greedy) {
      chosen = 0;
      for (int j = 1; j < n; ++j)
        if (probs[static_cast<std::size_t>(j)] > probs[static_cast<std::size_t>(chosen)])
          chosen = j;
    } else {
      const double u = rng.uniform_real();
      double cum = 0;
      chosen = -1;
      for (int j = 0; j < n; ++j) {
        if (probs[static_cast<std::size_t>(j)] <= 0) continue;
        chosen = j;
        cum += probs[static_cast<std::size_t>(j)];
        if (u < cum) break;
      }
    }
    out.logprob += std::log(probs[static_cast<std::size_t>(chosen)]);
    visited[static_cast<std::size_t>(chosen)] = 1;
    out.perm.push_back(chosen);
    current = chosen;
  }
  out.length = tour_length(inst, out.perm);
  return out;
}

std::string export_mtz_lp(const AtspInstance& inst) {
  const int n = inst.n;
  lp::Model model;
  model.name = "atsp_mtz_n" + std::to_string(n);

  auto x = [](int i, int j) {
    return "x_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
  };
  auto u = [](int i) { return "u_" + std::to_string(i + 1); };

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) model.objective.add(inst.d(i, j), x(i, j));

  for (int j = 0; j < n; ++j) {
    lp::Expr lhs;
    for (int i = 0; i < n; ++i)
      if (i != j) lhs.add(1, x(i, j));
    model.add_constraint("in_" + std::to_string(j + 1), lhs, '=', 1);
  }
  for (int i = 0; i < n; ++i) {
    lp::Expr lhs;
    for (int j = 0; j < n; ++j)
      if (i != j) lhs.add(1, x(i, j));
    model.add_constraint("out_" + std::to_string(i + 1), lhs, '=', 1);
  }
  // Subtour elimination over cities 2..n (0-based 1..n-1):
  // u_i - u_j + (n-1) x_ij <= n-2.
  for (int i = 1; i < n; ++i)
    for (int j = 1; j < n; ++j) {
      if (i == j) continue;
      lp::Expr lhs;
      lhs.add(1, u(i));
      lhs.add(-1, u(j));
      lhs.add(n - 1, x(i, j));
      model.add_constraint("mtz_" + std::to_string(i + 1) + "_" + std::to_string(j + 1), lhs,
                           '<', n - 2);
    }

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) model.binaries.push_back(x(i, j));
  for (int i = 1; i < n; ++i) model.set_bounds(u(i), 1, n - 1);

  return model.to_lp_text();
}

std::string write_instance(const AtspInstance& inst) {
  std::ostringstream os;
  os << "ATSP " << inst.n << "\n";
  os.precision(17);
  for (int i = 0; i < inst.n; ++i) {
    for (int j = 0; j < inst.n; ++j) {
      if (j) os << ' ';
      const double v = inst.d(i, j);
      if (v == std::floor(v) && std::abs(v) < 1e15)
        os << static_cast<std::int64_t>(v);
      else
        os << v;
    }
    os << "\n";
  }
  return os.str();
}

AtspInstance read_instance(const std::string& text) {
  std::istringstream is(text);
  std::string tag;
  int n = 0;
  if (!(is >> tag >> n) || tag != "ATSP" || n < 2)
    throw std::invalid_argument("read_instance: expected 'ATSP n' header");
  AtspInstance inst;
  inst.n = n;
  inst.dist.resize(static_cast<std::size_t>(n) * n);
  for (auto& v : inst.dist)
    if (!(is >> v)) throw std::invalid_argument("read_instance: truncated distance matrix");
  return inst;
}

void save_instance(const AtspInstance& inst, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << write_instance(inst);
}

AtspInstance load_instance(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return read_instance(ss.str());
}

std::string write_tour(const Tour& tour) {
  std::ostringstream os;
  os << "TOUR " << tour.perm.size() << "\n";
  for (std::size_t i = 0; i < tour.perm.size(); ++i) {
    if (i) os << ' ';
    os << tour.perm[i];
  }
  os << "\n";
  return os.str();
}

Tour read_tour(const std::string& text, const AtspInstance& inst) {
  std::istringstream is(text);
  std::string tag;
  int n = 0;
  if (!(is >> tag >> n) || tag != "TOUR")
    throw std::invalid_argument("read_tour: expected 'TOUR n' header");
  Tour t;
  t.perm.resize(static_cast<std::size_t>(n));
  for (auto& c : t.perm)
    if (!(is >> c)) throw std::invalid_argument("read_tour: truncated permutation");
  t.length = tour_length(inst, t.perm);
  return t;
}

}  // namespace matnet::atsp
