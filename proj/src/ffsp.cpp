#include "matnet/ffsp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "matnet/lp.hpp"

namespace matnet::ffsp {

std::int64_t FfspInstance::total_work() const {
  std::int64_t sum = 0;
  for (const auto& stage : proc)
    for (int v : stage) sum += v;
  return sum;
}

int FfspInstance::stage_max_sum() const {
  int sum = 0;
  for (const auto& stage : proc) sum += *std::max_element(stage.begin(), stage.end());
  return sum;
}

FfspInstance generate_ffsp(int stages, int machines, int jobs, Rng& rng) {
  if (stages < 1 || machines < 1 || jobs < 1)
    throw std::invalid_argument("generate_ffsp: dimensions must be >= 1");
  FfspInstance inst;
  inst.stages = stages;
  inst.machines = machines;
  inst.jobs = jobs;
  inst.proc.assign(static_cast<std::size_t>(stages),
                   std::vector<int>(static_cast<std::size_t>(machines) * jobs));
  for (auto& stage : inst.proc)
    for (auto& v : stage) v = static_cast<int>(rng.uniform_int(2, 9));
  return inst;
}

std::optional<std::string> validate_schedule(const FfspInstance& inst,
                                             const FfspSchedule& sched) {
  const int S = inst.stages, M = inst.machines, N = inst.jobs;
  if (sched.stages != S || sched.machines != M || sched.jobs != N ||
      sched.machine_of.size() != static_cast<std::size_t>(S) * N ||
      sched.start_of.size() != static_cast<std::size_t>(S) * N)
    return "SHAPE: schedule dimensions do not match the instance";

  // F2: each job holds exactly one machine assignment per stage.
  for (int s = 0; s < S; ++s)
    for (int j = 0; j < N; ++j) {
      const int m = sched.machine(s, j);
      if (m < 0 || m >= M)
        return "F2: stage " + std::to_string(s) + " job " + std::to_string(j) +
               " has no valid machine";
      if (sched.start(s, j) < 0)
        return "F2: stage " + std::to_string(s) + " job " + std::to_string(j) +
               " has a negative start";
    }

  // F9 (with F8): a stage starts only after the previous one completes.
  for (int s = 1; s < S; ++s)
    for (int j = 0; j < N; ++j)
      if (sched.start(s, j) < sched.completion(inst, s - 1, j))
        return "F9: job " + std::to_string(j) + " starts stage " + std::to_string(s) +
               " before finishing stage " + std::to_string(s - 1);

  // F10: no two jobs overlap on one machine.
  for (int s = 0; s < S; ++s)
    for (int m = 0; m < M; ++m) {
      std::vector<std::pair<int, int>> runs;  // (start, job)
      for (int j = 0; j < N; ++j)
        if (sched.machine(s, j) == m) runs.push_back({sched.start(s, j), j});
      std::sort(runs.begin(), runs.end());
      for (std::size_t i = 1; i < runs.size(); ++i) {
        const int prev_job = runs[i - 1].second;
        if (runs[i].first < sched.completion(inst, s, prev_job))
          return "F10: stage " + std::to_string(s) + " machine " + std::to_string(m) + " jobs " +
                 std::to_string(prev_job) + "," + std::to_string(runs[i].second) + " overlap";
      }
    }

  // F1: makespan equals the last completion of the final stage.
  int last = 0;
  for (int j = 0; j < N; ++j) last = std::max(last, sched.completion(inst, S - 1, j));
  if (sched.makespan != last)
    return "F1: makespan " + std::to_string(sched.makespan) + " != max completion " +
           std::to_string(last);
  return std::nullopt;
}

FfspSchedule run_gantt(const FfspInstance& inst, const std::vector<int>& machine_order,
                       const Chooser& choose) {
  const int S = inst.stages, M = inst.machines, N = inst.jobs;
  if (static_cast<int>(machine_order.size()) != M)
    throw std::invalid_argument("run_gantt: machine order must be a permutation of machines");
  {
    std::vector<char> seen(static_cast<std::size_t>(M), 0);
    for (int m : machine_order) {
      if (m < 0 || m >= M || seen[static_cast<std::size_t>(m)])
        throw std::invalid_argument("run_gantt: machine order must be a permutation of machines");
      seen[static_cast<std::size_t>(m)] = 1;
    }
  }

  FfspSchedule sched;
  sched.stages = S;
  sched.machines = M;
  sched.jobs = N;
  sched.machine_of.assign(static_cast<std::size_t>(S) * N, -1);
  sched.start_of.assign(static_cast<std::size_t>(S) * N, -1);

  std::vector<std::vector<int>> completion(static_cast<std::size_t>(S),
                                           std::vector<int>(static_cast<std::size_t>(N), -1));
  std::vector<std::vector<int>> busy_until(static_cast<std::size_t>(S),
                                           std::vector<int>(static_cast<std::size_t>(M), 0));
  int remaining = S * N;
  const std::int64_t cap = inst.total_work();
  std::vector<int> available;
  available.reserve(static_cast<std::size_t>(N));

  for (int t = 0; remaining > 0; ++t) {
    const bool force = t > cap;
    for (int s = 0; s < S; ++s) {
      for (int mi = 0; mi < M; ++mi) {
        const int m = machine_order[static_cast<std::size_t>(mi)];
        if (busy_until[static_cast<std::size_t>(s)][static_cast<std::size_t>(m)] > t) continue;
        available.clear();
        for (int j = 0; j < N; ++j) {
          if (completion[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] >= 0) continue;
          if (s > 0) {
            const int prev = completion[static_cast<std::size_t>(s - 1)][static_cast<std::size_t>(j)];
            if (prev < 0 || prev > t) continue;
          }
          available.push_back(j);
        }
        if (available.empty()) continue;
        int j = choose(s, m, t, available, force);
        if (j == kSkip) {
          if (!force) continue;
          j = available[0];  // horizon safeguard: assignment is forced
        }
        if (std::find(available.begin(), available.end(), j) == available.end())
          throw std::logic_error("run_gantt: chooser returned an unavailable job");
        const int done = t + inst.time(s, m, j);
        sched.machine_of[static_cast<std::size_t>(s) * N + j] = m;
        sched.start_of[static_cast<std::size_t>(s) * N + j] = t;
        completion[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] = done;
        busy_until[static_cast<std::size_t>(s)][static_cast<std::size_t>(m)] = done;
        --remaining;
      }
    }
  }

  int makespan = 0;
  for (int j = 0; j < N; ++j)
    makespan = std::max(makespan, completion[static_cast<std::size_t>(S - 1)][static_cast<std::size_t>(j)]);
  sched.makespan = makespan;
  return sched;
}

GanttRollout gantt_rollout(const FfspInstance& inst, const std::vector<StagePolicy>& stage_policies,
                           const std::vector<int>& machine_order, Mode mode, Rng& rng) {
  if (static_cast<int>(stage_policies.size()) != inst.stages)
    throw std::invalid_argument("gantt_rollout: one policy per stage required");
  const int N = inst.jobs;
  GanttRollout out;

  Chooser choose = [&](int s, int m, int, const std::vector<int>& available, bool force) -> int {
    std::vector<char> mask(static_cast<std::size_t>(N + 1), 0);
    for (int j : available) mask[static_cast<std::size_t>(j)] = 1;
    if (!force) mask[static_cast<std::size_t>(N)] = 1;  // skip stays available
    const std::vector<double> probs =
        stage_policies[static_cast<std::size_t>(s)](s, m, mask, force);
    int chosen = -1;
    if (mode == Mode::Greedy) {
      for (int c = 0; c <= N; ++c) {
        if (!mask[static_cast<std::size_t>(c)]) continue;
        if (chosen < 0 || probs[static_cast<std::size_t>(c)] > probs[static_cast<std::size_t>(chosen)])
          chosen = c;
      }
    } else {
      const double u = rng.uniform_real();
      double cum = 0;
      for (int c = 0; c <= N; ++c) {
        if (probs[static_cast<std::size_t>(c)] <= 0) continue;
        chosen = c;
        cum += probs[static_cast<std::size_t>(c)];
        if (u < cum) break;
      }
    }
    out.logprob += std::log(probs[static_cast<std::size_t>(chosen)]);
    out.actions.push_back(chosen);
    return chosen == N ? kSkip : chosen;
  };

  out.schedule = run_gantt(inst, machine_order, choose);
  return out;
}

namespace {
std::vector<int> identity_order(int m) {
  std::vector<int> order(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;
  return order;
}
}  // namespace

FfspSchedule sjf(const FfspInstance& inst) {
  // Shortest-job-first assigns up to M jobs per (t, stage): repeatedly
  // commit the idle-machine/available-job pair with the smallest
  // processing time. A shadow of the machine clocks lets the chooser
  // recompute that matching at each ask of the shared Gantt loop.
  const int S = inst.stages, M = inst.machines;
  auto busy = std::make_shared<std::vector<std::vector<int>>>(
      static_cast<std::size_t>(S), std::vector<int>(static_cast<std::size_t>(M), 0));
  Chooser choose = [&inst, busy](int s, int m, int t, const std::vector<int>& available,
                                 bool) -> int {
    std::vector<int> idle;
    for (int k = 0; k < inst.machines; ++k)
      if ((*busy)[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)] <= t) idle.push_back(k);
    std::vector<int> jobs = available;
    int my_job = kSkip;
    while (!idle.empty() && !jobs.empty()) {
      int bm = idle[0], bj = jobs[0];
      for (int k : idle)
        for (int j : jobs)
          if (inst.time(s, k, j) < inst.time(s, bm, bj) ||
              (inst.time(s, k, j) == inst.time(s, bm, bj) && (k < bm || (k == bm && j < bj)))) {
            bm = k;
            bj = j;
          }
      if (bm == m) {
        my_job = bj;
        break;
      }
      idle.erase(std::find(idle.begin(), idle.end(), bm));
      jobs.erase(std::find(jobs.begin(), jobs.end(), bj));
    }
    if (my_job != kSkip)
      (*busy)[static_cast<std::size_t>(s)][static_cast<std::size_t>(m)] =
          t + inst.time(s, m, my_job);
    return my_job;
  };
  return run_gantt(inst, identity_order(inst.machines), choose);
}

FfspSchedule random_schedule(const FfspInstance& inst, Rng& rng) {
  // Uniform choice over the candidate set the neural decoder would see:
  // every available job plus the idle option.
  Chooser choose = [&](int, int, int, const std::vector<int>& available, bool force) -> int {
    const auto n_avail = static_cast<std::int64_t>(available.size());
    const std::int64_t pick = rng.uniform_int(0, force ? n_avail - 1 : n_avail);
    if (pick == n_avail) return kSkip;
    return available[static_cast<std::size_t>(pick)];
  };
  return run_gantt(inst, identity_order(inst.machines), choose);
}

FfspSchedule decode_chromosome(const FfspInstance& inst, const Chromosome& chrom) {
  const int N = inst.jobs;
  if (chrom.genes.size() != static_cast<std::size_t>(inst.stages) * N)
    throw std::invalid_argument("decode_chromosome: gene count mismatch");
  for (double g : chrom.genes)
    if (!(g >= 0 && g < inst.machines))
      throw std::invalid_argument("decode_chromosome: gene outside [0, machines)");

  Chooser choose = [&](int s, int m, int, const std::vector<int>& available, bool force) -> int {
    int best = kSkip;
    double best_frac = 2.0;
    for (int j : available) {
      const double gene = chrom.genes[static_cast<std::size_t>(s) * N + j];
      if (static_cast<int>(gene) != m) continue;
      const double frac = gene - std::floor(gene);
      if (best == kSkip || frac < best_frac) {
        best = j;
        best_frac = frac;
      }
    }
    if (best == kSkip && force) return available[0];
    return best;
  };
  return run_gantt(inst, identity_order(inst.machines), choose);
}

Chromosome sjf_chromosome(const FfspInstance& inst) {
  const FfspSchedule s = sjf(inst);
  const double horizon = static_cast<double>(inst.total_work()) + 1.0;
  Chromosome c;
  c.genes.resize(static_cast<std::size_t>(inst.stages) * inst.jobs);
  for (int k = 0; k < inst.stages; ++k)
    for (int j = 0; j < inst.jobs; ++j)
      c.genes[static_cast<std::size_t>(k) * inst.jobs + j] =
          s.machine(k, j) + static_cast<double>(s.start(k, j)) / horizon;
  return c;
}

namespace {

Chromosome random_chromosome(const FfspInstance& inst, Rng& rng) {
  Chromosome c;
  c.genes.resize(static_cast<std::size_t>(inst.stages) * inst.jobs);
  for (auto& g : c.genes) g = rng.uniform_range(0, inst.machines);
  return c;
}

int evaluate(const FfspInstance& inst, const Chromosome& c) {
  return decode_chromosome(inst, c).makespan;
}

void mutate(Chromosome& c, const FfspInstance& inst, Rng& rng) {
  const int N = inst.jobs;
  const int s = static_cast<int>(rng.uniform_int(0, inst.stages - 1));
  double* row = c.genes.data() + static_cast<std::size_t>(s) * N;
  const int op = static_cast<int>(rng.uniform_int(0, 3));
  auto frac = [](double g) { return g - std::floor(g); };
  auto base = [](double g) { return std::floor(g); };
  switch (op) {
    case 0: {  // exchange two priorities
      const int a = static_cast<int>(rng.uniform_int(0, N - 1));
      const int b = static_cast<int>(rng.uniform_int(0, N - 1));
      const double fa = frac(row[a]), fb = frac(row[b]);
      row[a] = base(row[a]) + fb;
      row[b] = base(row[b]) + fa;
      break;
    }
    case 1: {  // inverse a priority segment
      int a = static_cast<int>(rng.uniform_int(0, N - 1));
      int b = static_cast<int>(rng.uniform_int(0, N - 1));
      if (a > b) std::swap(a, b);
      for (int i = a, j = b; i < j; ++i, --j) {
        const double fi = frac(row[i]), fj = frac(row[j]);
        row[i] = base(row[i]) + fj;
        row[j] = base(row[j]) + fi;
      }
      break;
    }
    case 2: {  // remove one priority and insert it elsewhere
      const int a = static_cast<int>(rng.uniform_int(0, N - 1));
      const int b = static_cast<int>(rng.uniform_int(0, N - 1));
      std::vector<double> fracs(static_cast<std::size_t>(N));
      for (int i = 0; i < N; ++i) fracs[static_cast<std::size_t>(i)] = frac(row[i]);
      const double moved = fracs[static_cast<std::size_t>(a)];
      fracs.erase(fracs.begin() + a);
      fracs.insert(fracs.begin() + b, moved);
      for (int i = 0; i < N; ++i) row[i] = base(row[i]) + fracs[static_cast<std::size_t>(i)];
      break;
    }
    case 3: {  // redraw one gene entirely
      const int a = static_cast<int>(rng.uniform_int(0, N - 1));
      row[a] = rng.uniform_range(0, inst.machines);
      break;
    }
  }
}

}  // namespace

FfspSchedule ga_solve(const FfspInstance& inst, const GaOptions& opt, Rng& rng) {
  if (opt.population < 2) throw std::invalid_argument("ga_solve: population must be >= 2");
  std::vector<Chromosome> pop;
  pop.reserve(static_cast<std::size_t>(opt.population));
  pop.push_back(sjf_chromosome(inst));
  for (int i = 1; i < opt.population; ++i) pop.push_back(random_chromosome(inst, rng));

  std::vector<int> fitness(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) fitness[i] = evaluate(inst, pop[i]);

  Chromosome best = pop[0];
  int best_ms = fitness[0];
  for (std::size_t i = 1; i < pop.size(); ++i)
    if (fitness[i] < best_ms) {
      best_ms = fitness[i];
      best = pop[i];
    }

  auto tournament = [&]() -> const Chromosome& {
    const auto a = static_cast<std::size_t>(rng.uniform_int(0, opt.population - 1));
    const auto b = static_cast<std::size_t>(rng.uniform_int(0, opt.population - 1));
    return fitness[a] <= fitness[b] ? pop[a] : pop[b];
  };

  for (int iter = 0; iter < opt.iterations; ++iter) {
    std::vector<Chromosome> next;
    next.reserve(pop.size());
    next.push_back(best);  // elitism
    while (static_cast<int>(next.size()) < opt.population) {
      Chromosome child = tournament();
      if (rng.uniform_real() < opt.crossover) {
        const Chromosome& other = tournament();
        // Integer and fractional parts inherit independently per gene.
        for (std::size_t g = 0; g < child.genes.size(); ++g) {
          const double a = child.genes[g], b = other.genes[g];
          const double machine = rng.uniform_real() < 0.5 ? std::floor(a) : std::floor(b);
          const double prio = rng.uniform_real() < 0.5 ? a - std::floor(a) : b - std::floor(b);
          child.genes[g] = machine + prio;
        }
      }
      if (rng.uniform_real() < opt.mutation) mutate(child, inst, rng);
      next.push_back(std::move(child));
    }
    pop = std::move(next);
    for (std::size_t i = 0; i < pop.size(); ++i) {
      fitness[i] = evaluate(inst, pop[i]);
      if (fitness[i] < best_ms) {
        best_ms = fitness[i];
        best = pop[i];
      }
    }
  }
  return decode_chromosome(inst, best);
}

FfspSchedule pso_solve(const FfspInstance& inst, const PsoOptions& opt, Rng& rng) {
  if (opt.particles < 2) throw std::invalid_argument("pso_solve: particles must be >= 2");
  const std::size_t dims = static_cast<std::size_t>(inst.stages) * inst.jobs;
  const double hi = static_cast<double>(inst.machines) - 1e-9;

  std::vector<Chromosome> x;
  x.push_back(sjf_chromosome(inst));
  for (int i = 1; i < opt.particles; ++i) x.push_back(random_chromosome(inst, rng));
  std::vector<std::vector<double>> vel(x.size(), std::vector<double>(dims, 0.0));

  std::vector<Chromosome> pbest = x;
  std::vector<int> pbest_ms(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) pbest_ms[i] = evaluate(inst, x[i]);

  std::size_t g = 0;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (pbest_ms[i] < pbest_ms[g]) g = i;
  Chromosome gbest = pbest[g];
  int gbest_ms = pbest_ms[g];

  for (int iter = 0; iter < opt.iterations; ++iter) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t d = 0; d < dims; ++d) {
        const double r1 = rng.uniform_real();
        const double r2 = rng.uniform_real();
        double v = opt.inertia * vel[i][d] +
                   opt.cognitive * r1 * (pbest[i].genes[d] - x[i].genes[d]) +
                   opt.social * r2 * (gbest.genes[d] - x[i].genes[d]);
        v = std::clamp(v, -double(inst.machines), double(inst.machines));
        vel[i][d] = v;
        x[i].genes[d] = std::clamp(x[i].genes[d] + v, 0.0, hi);
      }
      const int ms = evaluate(inst, x[i]);
      if (ms < pbest_ms[i]) {
        pbest_ms[i] = ms;
        pbest[i] = x[i];
      }
      if (ms < gbest_ms) {
        gbest_ms = ms;
        gbest = x[i];
      }
    }
  }
  return decode_chromosome(inst, gbest);
}

std::string export_ffsp_lp(const FfspInstance& inst, double big_m) {
  const int S = inst.stages, M = inst.machines, N = inst.jobs;
  if (big_m <= 0) {
    int max_entry = 0;
    for (const auto& stage : inst.proc)
      for (int v : stage) max_entry = std::max(max_entry, v);
    big_m = static_cast<double>(inst.total_work() + max_entry);
  }

  lp::Model model;
  model.name = "ffsp_s" + std::to_string(S) + "_m" + std::to_string(M) + "_n" + std::to_string(N);

  auto X = [](int i, int j, int k) {
    return "X_" + std::to_string(i + 1) + "_" + std::to_string(j + 1) + "_" + std::to_string(k + 1);
  };
  auto Y = [](int i, int l, int j) {
    return "Y_" + std::to_string(i + 1) + "_" + std::to_string(l + 1) + "_" + std::to_string(j + 1);
  };
  auto C = [](int i, int j) {
    return "C_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
  };
  auto U = [](int i, int k) {
    return "U_" + std::to_string(i + 1) + "_" + std::to_string(k + 1);
  };

  model.objective.add(1, "Cmax");

  for (int j = 0; j < N; ++j) {
    lp::Expr e;
    e.add(1, "Cmax");
    e.add(-1, C(S - 1, j));
    model.add_constraint("cmax_" + std::to_string(j + 1), e, '>', 0);
  }

  for (int i = 0; i < S; ++i)
    for (int j = 0; j < N; ++j) {
      lp::Expr e;
      for (int k = 0; k < M; ++k) e.add(1, X(i, j, k));
      model.add_constraint("f2_" + std::to_string(i + 1) + "_" + std::to_string(j + 1), e, '=', 1);
    }

  for (int i = 0; i < S; ++i)
    for (int j = 0; j < N; ++j) {
      lp::Expr e;
      e.add(1, Y(i, j, j));
      model.add_constraint("f3_" + std::to_string(i + 1) + "_" + std::to_string(j + 1), e, '=', 0);
    }

  // Count identity behind the paper's max() form: precedence pairs per
  // stage equal assigned jobs minus used machines. U_ik marks usage.
  for (int i = 0; i < S; ++i) {
    lp::Expr e;
    for (int j = 0; j < N; ++j)
      for (int l = 0; l < N; ++l) e.add(1, Y(i, j, l));
    for (int k = 0; k < M; ++k) e.add(1, U(i, k));
    model.add_constraint("f4_" + std::to_string(i + 1), e, '=', N);
  }
  for (int i = 0; i < S; ++i)
    for (int k = 0; k < M; ++k) {
      lp::Expr lo;
      for (int j = 0; j < N; ++j) lo.add(1, X(i, j, k));
      lo.add(-1, U(i, k));
      model.add_constraint("f4a_" + std::to_string(i + 1) + "_" + std::to_string(k + 1), lo, '>',
                           0);
      lp::Expr up;
      for (int j = 0; j < N; ++j) up.add(1, X(i, j, k));
      up.add(-N, U(i, k));
      model.add_constraint("f4b_" + std::to_string(i + 1) + "_" + std::to_string(k + 1), up, '<',
                           0);
    }

  // Precedence only between jobs sharing a machine (big-M free form:
  // Y_ijl <= 1 - X_ijk + X_ilk for every machine k).
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < N; ++j)
      for (int l = 0; l < N; ++l) {
        if (j == l) continue;
        for (int k = 0; k < M; ++k) {
          lp::Expr e;
          e.add(1, Y(i, j, l));
          e.add(1, X(i, j, k));
          e.add(-1, X(i, l, k));
          model.add_constraint("f5_" + std::to_string(i + 1) + "_" + std::to_string(j + 1) + "_" +
                                   std::to_string(l + 1) + "_" + std::to_string(k + 1),
                               e, '<', 1);
        }
      }

  for (int i = 0; i < S; ++i)
    for (int j = 0; j < N; ++j) {
      lp::Expr out, in;
      for (int l = 0; l < N; ++l) {
        if (l == j) continue;
        out.add(1, Y(i, j, l));
        in.add(1, Y(i, l, j));
      }
      model.add_constraint("f6_" + std::to_string(i + 1) + "_" + std::to_string(j + 1), out, '<',
                           1);
      model.add_constraint("f6b_" + std::to_string(i + 1) + "_" + std::to_string(j + 1), in, '<',
                           1);
    }

  for (int j = 0; j < N; ++j) {
    lp::Expr e;
    e.add(1, C(0, j));
    for (int k = 0; k < M; ++k) e.add(-inst.time(0, k, j), X(0, j, k));
    model.add_constraint("f7_" + std::to_string(j + 1), e, '>', 0);
  }
  for (int i = 1; i < S; ++i)
    for (int j = 0; j < N; ++j) {
      lp::Expr e;
      e.add(1, C(i, j));
      e.add(-1, C(i - 1, j));
      for (int k = 0; k < M; ++k) e.add(-inst.time(i, k, j), X(i, j, k));
      model.add_constraint("f8_" + std::to_string(i + 1) + "_" + std::to_string(j + 1), e, '>', 0);
    }

  // Machine exclusivity: C_ij + M(1 - Y_ilj) >= C_il + p_ij.
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < N; ++j)
      for (int l = 0; l < N; ++l) {
        lp::Expr e;
        e.add(1, C(i, j));
        if (l != j) e.add(-1, C(i, l));
        for (int k = 0; k < M; ++k) e.add(-inst.time(i, k, j), X(i, j, k));
        e.add(-big_m, Y(i, l, j));
        model.add_constraint("f9_" + std::to_string(i + 1) + "_" + std::to_string(l + 1) + "_" +
                                 std::to_string(j + 1),
                             e, '>', -big_m);
      }

  for (int i = 0; i < S; ++i)
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < M; ++k) model.binaries.push_back(X(i, j, k));
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < N; ++j)
      for (int l = 0; l < N; ++l) model.binaries.push_back(Y(i, j, l));
  for (int i = 0; i < S; ++i)
    for (int k = 0; k < M; ++k) model.binaries.push_back(U(i, k));

  return model.to_lp_text();
}

std::vector<std::pair<std::string, double>> schedule_assignment(const FfspInstance& inst,
                                                                const FfspSchedule& sched) {
  const int S = inst.stages, M = inst.machines, N = inst.jobs;
  std::vector<std::pair<std::string, double>> out;
  out.push_back({"Cmax", static_cast<double>(sched.makespan)});
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < N; ++j) {
      out.push_back({"X_" + std::to_string(i + 1) + "_" + std::to_string(j + 1) + "_" +
                         std::to_string(sched.machine(i, j) + 1),
                     1.0});
      out.push_back({"C_" + std::to_string(i + 1) + "_" + std::to_string(j + 1),
                     static_cast<double>(sched.completion(inst, i, j))});
    }
  for (int i = 0; i < S; ++i)
    for (int m = 0; m < M; ++m) {
      std::vector<std::pair<int, int>> runs;
      for (int j = 0; j < N; ++j)
        if (sched.machine(i, j) == m) runs.push_back({sched.start(i, j), j});
      if (runs.empty()) continue;
      out.push_back({"U_" + std::to_string(i + 1) + "_" + std::to_string(m + 1), 1.0});
      std::sort(runs.begin(), runs.end());
      for (std::size_t r = 1; r < runs.size(); ++r)
        out.push_back({"Y_" + std::to_string(i + 1) + "_" + std::to_string(runs[r - 1].second + 1) +
                           "_" + std::to_string(runs[r].second + 1),
                       1.0});
    }
  return out;
}

std::vector<int> schedule_to_actions(const FfspInstance& inst, const FfspSchedule& sched,
                                     const std::vector<int>& machine_order) {
  std::vector<int> actions;
  Chooser follow = [&](int s, int m, int t, const std::vector<int>& available, bool) -> int {
    for (int j : available)
      if (sched.machine(s, j) == m && sched.start(s, j) == t) {
        actions.push_back(j);
        return j;
      }
    actions.push_back(inst.jobs);  // skip
    return kSkip;
  };
  const FfspSchedule replayed = run_gantt(inst, machine_order, follow);
  if (replayed.machine_of != sched.machine_of || replayed.start_of != sched.start_of)
    throw std::invalid_argument("schedule_to_actions: schedule is not reachable by the rollout loop");
  return actions;
}

std::vector<StagePolicy> replay_policies(const FfspInstance& inst, std::vector<int> actions) {
  auto cursor = std::make_shared<std::size_t>(0);
  auto recorded = std::make_shared<std::vector<int>>(std::move(actions));
  const int N = inst.jobs;
  StagePolicy policy = [cursor, recorded, N](int, int, const std::vector<char>& mask,
                                             bool) -> std::vector<double> {
    if (*cursor >= recorded->size())
      throw std::out_of_range("replay policy: action sequence exhausted");
    const int action = (*recorded)[(*cursor)++];
    if (!mask[static_cast<std::size_t>(action)])
      throw std::logic_error("replay policy: recorded action is unavailable");
    std::vector<double> probs(static_cast<std::size_t>(N + 1), 0.0);
    probs[static_cast<std::size_t>(action)] = 1.0;
    return probs;
  };
  return std::vector<StagePolicy>(static_cast<std::size_t>(inst.stages), policy);
}

std::string write_instance(const FfspInstance& inst) {
  std::ostringstream os;
  os << "FFSP " << inst.stages << ' ' << inst.machines << ' ' << inst.jobs << "\n";
  for (int s = 0; s < inst.stages; ++s)
    for (int m = 0; m < inst.machines; ++m) {
      for (int j = 0; j < inst.jobs; ++j) {
        if (j) os << ' ';
        os << inst.time(s, m, j);
      }
      os << "\n";
    }
  return os.str();
}

FfspInstance read_instance(const std::string& text) {
  std::istringstream is(text);
  std::string tag;
  int S = 0, M = 0, N = 0;
  if (!(is >> tag >> S >> M >> N) || tag != "FFSP" || S < 1 || M < 1 || N < 1)
    throw std::invalid_argument("read_instance: expected 'FFSP S M N' header");
  FfspInstance inst;
  inst.stages = S;
  inst.machines = M;
  inst.jobs = N;
  inst.proc.assign(static_cast<std::size_t>(S), std::vector<int>(static_cast<std::size_t>(M) * N));
  for (auto& stage : inst.proc)
    for (auto& v : stage)
      if (!(is >> v)) throw std::invalid_argument("read_instance: truncated processing times");
  return inst;
}

void save_instance(const FfspInstance& inst, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << write_instance(inst);
}

FfspInstance load_instance(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return read_instance(ss.str());
}

std::string write_schedule(const FfspSchedule& sched) {
  std::ostringstream os;
  os << "SCHED " << sched.stages << ' ' << sched.machines << ' ' << sched.jobs << ' '
     << sched.makespan << "\n";
  for (int s = 0; s < sched.stages; ++s)
    for (int j = 0; j < sched.jobs; ++j)
      os << j << ' ' << sched.machine(s, j) << ' ' << sched.start(s, j) << "\n";
  return os.str();
}

FfspSchedule read_schedule(const std::string& text) {
  std::istringstream is(text);
  std::string tag;
  FfspSchedule sched;
  if (!(is >> tag >> sched.stages >> sched.machines >> sched.jobs >> sched.makespan) ||
      tag != "SCHED")
    throw std::invalid_argument("read_schedule: expected 'SCHED S M N makespan' header");
  const std::size_t cells = static_cast<std::size_t>(sched.stages) * sched.jobs;
  sched.machine_of.assign(cells, -1);
  sched.start_of.assign(cells, -1);
  for (int s = 0; s < sched.stages; ++s)
    for (int row = 0; row < sched.jobs; ++row) {
      int j = 0, m = 0, st = 0;
      if (!(is >> j >> m >> st))
        throw std::invalid_argument("read_schedule: truncated assignment lines");
      if (j < 0 || j >= sched.jobs)
        throw std::invalid_argument("read_schedule: job index out of range");
      sched.machine_of[static_cast<std::size_t>(s) * sched.jobs + j] = m;
      sched.start_of[static_cast<std::size_t>(s) * sched.jobs + j] = st;
    }
  return sched;
}

}  // namespace matnet::ffsp
