#include "matnet/inference.hpp"

#include <stdexcept>

namespace matnet::infer {

using ad::Tape;

namespace {
enum StreamTag : std::uint64_t { kAug = 11, kRoll = 12, kSampleOnly = 13 };
}

void SolveOptions::validate() const {
  if (augmentation < 1) throw std::invalid_argument("solve options: augmentation must be >= 1");
  if (sampling_count < 1) throw std::invalid_argument("solve options: sampling_count must be >= 1");
  if (max_perms < 1) throw std::invalid_argument("solve options: max_perms must be >= 1");
}

AtspSolve solve_atsp(const model::AtspModel& m, const atsp::AtspInstance& inst,
                     const SolveOptions& opts) {
  opts.validate();
  AtspSolve out;
  double best_len = 0;
  for (int aug = 0; aug < opts.augmentation; ++aug) {
    Tape tape;
    tape.grad_enabled = false;
    TapeParams tp(tape, m.params);
    Rng enc_rng = Rng::stream(opts.seed, {kAug, static_cast<std::uint64_t>(aug)});
    const model::AtspEncoding enc = encode_atsp(tp, m, inst, enc_rng);
    out.assignments.push_back(enc.assignment);
    const int starts = opts.pomo ? inst.n : 1;
    for (int start = 0; start < starts; ++start) {
      Rng roll = Rng::stream(opts.seed, {kRoll, static_cast<std::uint64_t>(aug),
                                         static_cast<std::uint64_t>(start)});
      model::NeuralTraj nt = rollout_atsp(tp, m, inst, enc, start, opts.mode, roll, false);
      out.candidate_lengths.push_back(nt.objective);
      if (out.best.perm.empty() || nt.objective < best_len) {
        best_len = nt.objective;
        out.best.perm = std::move(nt.actions);
        out.best.length = nt.objective;
      }
    }
  }
  return out;
}

FfspSolve solve_ffsp(const model::FfspModel& m, const ffsp::FfspInstance& inst,
                     const SolveOptions& opts) {
  opts.validate();
  FfspSolve out;
  int best_ms = 0;
  const auto perms = model::machine_permutations(inst.machines, opts.max_perms);
  for (int aug = 0; aug < opts.augmentation; ++aug) {
    Tape tape;
    tape.grad_enabled = false;
    TapeParams tp(tape, m.params);
    Rng enc_rng = Rng::stream(opts.seed, {kAug, static_cast<std::uint64_t>(aug)});
    const model::FfspEncoding enc = encode_ffsp(tp, m, inst, enc_rng);
    std::vector<std::vector<int>> aug_assignments;
    for (const auto& stage : enc.stages) aug_assignments.push_back(stage.assignment);
    out.assignments.push_back(std::move(aug_assignments));

    const std::size_t order_count = opts.pomo ? perms.size() : 1;
    for (std::size_t p = 0; p < order_count; ++p) {
      Rng roll = Rng::stream(opts.seed, {kRoll, static_cast<std::uint64_t>(aug), p});
      ffsp::FfspSchedule sched;
      model::NeuralTraj nt =
          rollout_ffsp(tp, m, inst, enc, perms[p], opts.mode, roll, false, &sched);
      if (auto violation = ffsp::validate_schedule(inst, sched))
        throw std::logic_error("solve_ffsp: invalid candidate schedule: " + *violation);
      out.candidate_makespans.push_back(sched.makespan);
      if (out.best.machine_of.empty() || sched.makespan < best_ms) {
        best_ms = sched.makespan;
        out.best = std::move(sched);
      }
    }
  }
  return out;
}

AtspSolve sample_only_solve(const model::AtspModel& m, const atsp::AtspInstance& inst, int count,
                            std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_only_solve: count must be >= 1");
  AtspSolve out;
  double best_len = 0;
  Tape tape;
  tape.grad_enabled = false;
  TapeParams tp(tape, m.params);
  Rng enc_rng = Rng::stream(seed, {kAug, 0});
  const model::AtspEncoding enc = encode_atsp(tp, m, inst, enc_rng);
  out.assignments.push_back(enc.assignment);
  for (int i = 0; i < count; ++i) {
    Rng roll = Rng::stream(seed, {kSampleOnly, static_cast<std::uint64_t>(i)});
    model::NeuralTraj nt = rollout_atsp(tp, m, inst, enc, i % inst.n, Mode::Sample, roll, false);
    out.candidate_lengths.push_back(nt.objective);
    if (out.best.perm.empty() || nt.objective < best_len) {
      best_len = nt.objective;
      out.best.perm = std::move(nt.actions);
      out.best.length = nt.objective;
    }
  }
  return out;
}

}  // namespace matnet::infer
