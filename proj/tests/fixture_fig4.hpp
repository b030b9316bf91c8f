#pragma once

// Reference 3-stage 4-4-4-machine 20-job fixture with a known valid
// schedule of makespan exactly 25. Jobs are grouped five per home
// machine (m = j/5); home-machine durations are 3/4/2 across the
// stages, which pipelines into waves:
//   stage 0: job p of a group runs [3p, 3p+3)
//   stage 1: runs [3+4p, 7+4p)
//   stage 2: runs [7+4p, 9+4p)  -> last completion 23+2 = 25.
// All other entries are pseudo-random in [2,9] and never used by the
// schedule.
#include "matnet/ffsp.hpp"
#include "matnet/rng.hpp"

namespace fixture {

inline matnet::ffsp::FfspInstance fig4_instance() {
  matnet::ffsp::FfspInstance inst;
  inst.stages = 3;
  inst.machines = 4;
  inst.jobs = 20;
  matnet::Rng rng(424242);
  const int home_time[3] = {3, 4, 2};
  inst.proc.assign(3, std::vector<int>(4 * 20));
  for (int s = 0; s < 3; ++s)
    for (int m = 0; m < 4; ++m)
      for (int j = 0; j < 20; ++j)
        inst.proc[static_cast<std::size_t>(s)][static_cast<std::size_t>(m) * 20 + j] =
            (j / 5 == m) ? home_time[s] : static_cast<int>(rng.uniform_int(2, 9));
  return inst;
}

inline matnet::ffsp::FfspSchedule fig4_schedule() {
  matnet::ffsp::FfspSchedule s;
  s.stages = 3;
  s.machines = 4;
  s.jobs = 20;
  s.machine_of.assign(3 * 20, -1);
  s.start_of.assign(3 * 20, -1);
  for (int j = 0; j < 20; ++j) {
    const int m = j / 5;
    const int p = j % 5;
    const int starts[3] = {3 * p, 3 + 4 * p, 7 + 4 * p};
    for (int st = 0; st < 3; ++st) {
      s.machine_of[static_cast<std::size_t>(st) * 20 + j] = m;
      s.start_of[static_cast<std::size_t>(st) * 20 + j] = starts[st];
    }
  }
  s.makespan = 25;
  return s;
}

}  // namespace fixture
