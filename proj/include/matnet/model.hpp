#pragma once

#include <cstdint>
#include <vector>

#include "matnet/atsp.hpp"
#include "matnet/decoder.hpp"
#include "matnet/encoder.hpp"
#include "matnet/ffsp.hpp"

namespace matnet::model {

using atsp::Mode;

// Tour solver: encoder over the distance matrix ("from" cities zero
// initialized, "to" cities one-hot) plus the two-city-query decoder.
struct AtspModelConfig {
  int n_max = 20;           // one-hot pool capacity for "to" cities
  EncoderConfig enc;        // pools/init schemes derived in finalize()
  double dist_scale = 1e6;  // raw distances divide by this before encoding

  void finalize();
  DecoderConfig decoder_config() const;
};

struct AtspModel {
  AtspModelConfig cfg;
  ParamStore params;
  EncoderIds enc_ids;
  DecoderIds dec_ids;
};

AtspModel init_atsp_model(AtspModelConfig cfg, std::uint64_t seed);

struct AtspEncoding {
  ad::Var h_from, h_to;
  KvCache cache;
  std::vector<int> assignment;
};

AtspEncoding encode_atsp(TapeParams& tp, const AtspModel& m, const atsp::AtspInstance& inst,
                         Rng& rng);

struct NeuralTraj {
  std::vector<int> actions;  // tour permutation / gantt decisions
  double objective = 0;      // tour length / makespan
  double logprob = 0;
  ad::Var logprob_var;       // set when want_grad
};

NeuralTraj rollout_atsp(TapeParams& tp, const AtspModel& m, const atsp::AtspInstance& inst,
                        const AtspEncoding& enc, int start_city, Mode mode, Rng& rng,
                        bool want_grad);

// Scheduler: one encoder+decoder pair per stage, untied parameters.
// Machines are the one-hot side, jobs the zero side; the decoder query
// is the machine embedding and candidates are jobs plus the skip row.
struct FfspModelConfig {
  int stages = 3;
  int machines = 4;         // one-hot pool capacity per stage
  EncoderConfig enc;        // shared hyperparameters across stages
  double time_scale = 10;   // raw processing times divide by this

  void finalize();
  DecoderConfig decoder_config() const;
};

struct FfspModel {
  FfspModelConfig cfg;
  ParamStore params;
  std::vector<EncoderIds> enc_ids;
  std::vector<DecoderIds> dec_ids;
};

FfspModel init_ffsp_model(FfspModelConfig cfg, std::uint64_t seed);

struct FfspEncoding {
  struct Stage {
    ad::Var h_machines, h_jobs;
    KvCache cache;  // jobs + skip
    std::vector<int> assignment;
  };
  std::vector<Stage> stages;
};

FfspEncoding encode_ffsp(TapeParams& tp, const FfspModel& m, const ffsp::FfspInstance& inst,
                         Rng& rng);

// One trajectory with a fixed machine visit order, reusing a prepared
// encoding (and its caches) across however many orders the caller runs.
NeuralTraj rollout_ffsp(TapeParams& tp, const FfspModel& m, const ffsp::FfspInstance& inst,
                        const FfspEncoding& enc, const std::vector<int>& machine_order, Mode mode,
                        Rng& rng, bool want_grad, ffsp::FfspSchedule* schedule_out = nullptr);

// The first `count` machine-visit permutations in lexicographic order.
std::vector<std::vector<int>> machine_permutations(int machines, int count);

}  // namespace matnet::model
