#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matnet/adam.hpp"
#include "matnet/model.hpp"

namespace matnet::trainer {

using atsp::Mode;

struct TrainConfig {
  std::string problem = "atsp";  // atsp | ffsp
  int n = 10;                    // cities (atsp) / jobs (ffsp)
  int stages = 3;                // ffsp
  int machines = 4;              // ffsp
  bool euclidean = false;        // atsp instance family

  int d_model = 64;
  int layers = 3;
  int heads = 4;
  int d_ff = 128;
  int mixer_hidden = 16;
  std::string update_mode = "parallel";
  bool share_update = false;
  std::string init_b = "one_hot_pool";  // atsp "to"-city scheme
  int pool_size = 0;                    // 0 -> n

  double lr = 4e-4;
  int batch_size = 50;
  int instances_per_epoch = 1000;
  int epochs = 30;
  int grad_accum = 1;
  int max_perms = 24;  // ffsp machine-order permutations per instance
  std::uint64_t seed = 1;

  void validate() const;
  std::string to_text() const;
  static TrainConfig from_text(const std::string& text);

  EncoderConfig encoder_config() const;
  model::AtspModelConfig atsp_model_config() const;
  model::FfspModelConfig ffsp_model_config() const;
};

// Named desk-scale presets plus the full-size configurations.
TrainConfig preset(const std::string& name);
std::vector<std::string> preset_names();

struct Trajectory {
  std::vector<int> actions;
  double logprob = 0;
  double reward = 0;  // -(scaled objective)
  double objective = 0;
};

// Evaluation-mode POMO rollouts (no gradients), parallel over the batch.
std::vector<std::vector<Trajectory>> pomo_rollout_atsp(const model::AtspModel& m,
                                                       const std::vector<atsp::AtspInstance>& batch,
                                                       Mode mode, std::uint64_t seed);
std::vector<std::vector<Trajectory>> pomo_rollout_ffsp(const model::FfspModel& m,
                                                       const std::vector<ffsp::FfspInstance>& batch,
                                                       Mode mode, std::uint64_t seed,
                                                       int max_perms = 24);

// Shared-baseline REINFORCE loss over one instance's trajectories:
// advantage_i = reward_i - mean(reward), loss = -mean(advantage_i * logprob_i).
ad::Var reinforce_loss(ad::Tape& tape, const std::vector<ad::Var>& logprobs,
                       const std::vector<double>& rewards);

struct Checkpoint {
  std::uint32_t version = 1;
  TrainConfig config;
  ParamStore params;
  AdamState adam;
  std::int64_t epoch = 0;
  std::string rng_state;
};

// Binary checkpoint file: magic, version, checksum, named tensor
// records, then config/counters/rng as a length-prefixed text blob.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Rebuilds the typed model around a checkpoint's parameters.
model::AtspModel atsp_model_from(const Checkpoint& ckpt);
model::FfspModel ffsp_model_from(const Checkpoint& ckpt);

struct EpochMetrics {
  int epoch = 0;
  double mean_reward = 0;      // mean scaled trajectory reward
  double baseline_metric = 0;  // mean heuristic objective (NN / SJF)
  double wall_seconds = 0;
};

// POMO REINFORCE training loop. Fresh instances every batch, gradient
// reduction in a deterministic order; (seed, config, thread count)
// fully determine the result. metrics_path may be empty.
Checkpoint train(const TrainConfig& cfg, const std::string& metrics_path = "",
                 std::vector<EpochMetrics>* metrics_out = nullptr);

}  // namespace matnet::trainer
