#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "matnet/atsp.hpp"  // Mode
#include "matnet/rng.hpp"

namespace matnet::ffsp {

using atsp::Mode;

// N jobs through S stages of M unrelated parallel machines.
// proc[s][m*N + j] = processing time of job j on machine m at stage s.
struct FfspInstance {
  int stages = 0;
  int machines = 0;
  int jobs = 0;
  std::vector<std::vector<int>> proc;

  int time(int s, int m, int j) const {
    return proc[static_cast<std::size_t>(s)][static_cast<std::size_t>(m) * jobs + j];
  }
  // Sum of every processing time; horizon cap for any schedule that
  // never leaves all machines idle forever.
  std::int64_t total_work() const;
  // Per-stage max entry summed over stages; scales rewards to O(1).
  int stage_max_sum() const;
};

struct FfspSchedule {
  int stages = 0, machines = 0, jobs = 0;
  std::vector<int> machine_of;  // s*jobs + j
  std::vector<int> start_of;    // s*jobs + j
  int makespan = 0;

  int machine(int s, int j) const { return machine_of[static_cast<std::size_t>(s) * jobs + j]; }
  int start(int s, int j) const { return start_of[static_cast<std::size_t>(s) * jobs + j]; }
  int completion(const FfspInstance& inst, int s, int j) const {
    return start(s, j) + inst.time(s, machine(s, j), j);
  }
};

FfspInstance generate_ffsp(int stages, int machines, int jobs, Rng& rng);

// First violated constraint (id + indices) or nullopt when valid.
// Constraint ids mirror the exported MIP: F2 one machine per job per
// stage, F9 stage precedence, F10 machine exclusivity, F1 makespan.
std::optional<std::string> validate_schedule(const FfspInstance& inst, const FfspSchedule& sched);

// One decision point of the Gantt-completion loop: a chooser sees the
// stage, the machine asked, the clock, the available jobs and whether
// assignment is forced (past the horizon cap); it returns a job or kSkip.
constexpr int kSkip = -1;
using Chooser = std::function<int(int stage, int machine, int t, const std::vector<int>& available,
                                  bool force_assign)>;

// Runs the time loop shared by every scheduler: at each t, stages in
// order, machines in visit order; a machine is asked only when idle
// with at least one available job. Time advances by one unit after all
// machines are visited.
FfspSchedule run_gantt(const FfspInstance& inst, const std::vector<int>& machine_order,
                       const Chooser& choose);

// Policy rollout over run_gantt. The policy returns a probability row
// over N+1 candidates (skip last); unavailable jobs must carry zero.
struct GanttRollout {
  FfspSchedule schedule;
  double logprob = 0;
  std::vector<int> actions;  // chosen candidate per decision (N = skip)
};
using StagePolicy = std::function<std::vector<double>(
    int stage, int machine, const std::vector<char>& available_mask, bool force_assign)>;
GanttRollout gantt_rollout(const FfspInstance& inst, const std::vector<StagePolicy>& stage_policies,
                           const std::vector<int>& machine_order, Mode mode, Rng& rng);

// Shortest-job-first: each idle machine takes the available job with
// the smallest processing time on it; never skips.
FfspSchedule sjf(const FfspInstance& inst);
// Uniform choice among available jobs; never skips.
FfspSchedule random_schedule(const FfspInstance& inst, Rng& rng);

// S*N reals; integer part = machine, fractional part = priority
// (smaller runs first among simultaneously available jobs).
struct Chromosome {
  std::vector<double> genes;  // s*jobs + j in [0, machines)
};
FfspSchedule decode_chromosome(const FfspInstance& inst, const Chromosome& chrom);
// Chromosome replaying the SJF schedule exactly (seeds GA and PSO).
Chromosome sjf_chromosome(const FfspInstance& inst);

struct GaOptions {
  int population = 25;
  double crossover = 0.3;
  double mutation = 0.3;
  int iterations = 1000;
};
FfspSchedule ga_solve(const FfspInstance& inst, const GaOptions& opt, Rng& rng);

struct PsoOptions {
  int particles = 25;
  double inertia = 0.7;
  double cognitive = 1.5;
  double social = 1.5;
  int iterations = 1000;
};
FfspSchedule pso_solve(const FfspInstance& inst, const PsoOptions& opt, Rng& rng);

// Big-M MIP export as LP text. big_m <= 0 selects the default horizon
// bound (total work).
std::string export_ffsp_lp(const FfspInstance& inst, double big_m = -1);
// (X, Y, C, U, Cmax) assignment of a schedule for feasibility checks.
std::vector<std::pair<std::string, double>> schedule_assignment(const FfspInstance& inst,
                                                                const FfspSchedule& sched);

// Converts a schedule into the decision sequence that reproduces it
// through gantt_rollout (skip wherever the schedule starts nothing).
std::vector<int> schedule_to_actions(const FfspInstance& inst, const FfspSchedule& sched,
                                     const std::vector<int>& machine_order);
// Policy that replays a recorded action sequence.
std::vector<StagePolicy> replay_policies(const FfspInstance& inst, std::vector<int> actions);

// Text format: "FFSP S M N" then S blocks of M rows x N integers.
std::string write_instance(const FfspInstance& inst);
FfspInstance read_instance(const std::string& text);
void save_instance(const FfspInstance& inst, const std::string& path);
FfspInstance load_instance(const std::string& path);

// Solution file: "SCHED S M N makespan" + S blocks of N lines "job machine start".
std::string write_schedule(const FfspSchedule& sched);
FfspSchedule read_schedule(const std::string& text);

}  // namespace matnet::ffsp
