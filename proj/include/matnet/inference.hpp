#pragma once

#include <cstdint>
#include <vector>

#include "matnet/model.hpp"

namespace matnet::infer {

using atsp::Mode;

struct SolveOptions {
  Mode mode = Mode::Sample;  // sampled rollouts beat greedy here
  bool pomo = true;          // all starts / machine orders vs a single one
  int augmentation = 1;      // fresh one-hot assignments (best-of selection)
  int sampling_count = 1;    // rollouts for sample_only_solve
  int max_perms = 24;        // ffsp machine orders per augmentation
  std::uint64_t seed = 1;

  void validate() const;
};

struct AtspSolve {
  atsp::Tour best;
  std::vector<double> candidate_lengths;       // every rollout, in order
  std::vector<std::vector<int>> assignments;   // one-hot draw per augmentation
};

// K augmentations x (n POMO starts); minimum-length tour wins, ties
// toward the lowest augmentation then start index.
AtspSolve solve_atsp(const model::AtspModel& m, const atsp::AtspInstance& inst,
                     const SolveOptions& opts);

struct FfspSolve {
  ffsp::FfspSchedule best;
  std::vector<int> candidate_makespans;
  std::vector<std::vector<std::vector<int>>> assignments;  // per aug, per stage
};

// K augmentations x machine-order permutations; every candidate is
// validated before selection.
FfspSolve solve_ffsp(const model::FfspModel& m, const ffsp::FfspInstance& inst,
                     const SolveOptions& opts);

// The sampling-only comparison arm: one encoding, `count` sampled
// rollouts (round-robin start cities), best kept.
AtspSolve sample_only_solve(const model::AtspModel& m, const atsp::AtspInstance& inst, int count,
                            std::uint64_t seed);

}  // namespace matnet::infer
