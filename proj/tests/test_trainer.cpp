#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "matnet/trainer.hpp"

using namespace matnet;
namespace tr = matnet::trainer;
using ad::Tape;
using ad::Var;

namespace {

tr::TrainConfig tiny_atsp_config() {
  tr::TrainConfig cfg;
  cfg.problem = "atsp";
  cfg.n = 5;
  cfg.d_model = 16;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.d_ff = 16;
  cfg.batch_size = 4;
  cfg.instances_per_epoch = 8;
  cfg.epochs = 1;
  cfg.seed = 11;
  return cfg;
}

tr::TrainConfig tiny_ffsp_config() {
  tr::TrainConfig cfg = tiny_atsp_config();
  cfg.problem = "ffsp";
  cfg.n = 4;
  cfg.stages = 2;
  cfg.machines = 3;
  cfg.max_perms = 6;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("advantages are mean-centered: logprob gradients sum to zero") {
  // Independent scalar "logprob" parameters expose d loss / d lp_i,
  // which is -advantage_i / T.
  ParamStore store;
  for (int i = 0; i < 4; ++i) store.add("lp" + std::to_string(i), Tensor::scalar(-1.0 - i));
  Tape t;
  TapeParams tp(t, store);
  std::vector<Var> lps;
  for (int i = 0; i < 4; ++i) lps.push_back(tp[i]);
  const std::vector<double> rewards{-1.5, -2.0, -0.5, -3.25};
  Var loss = tr::reinforce_loss(t, lps, rewards);
  t.backward(loss);
  std::vector<Tensor> grads;
  t.add_param_grads(grads);

  double mean = 0;
  for (double r : rewards) mean += r / 4;
  double sum = 0;
  for (int i = 0; i < 4; ++i) {
    const double adv = rewards[static_cast<std::size_t>(i)] - mean;
    CHECK(grads[static_cast<std::size_t>(i)].data[0] ==
          doctest::Approx(-adv / 4).epsilon(1e-14));
    sum += grads[static_cast<std::size_t>(i)].data[0];
  }
  CHECK(std::abs(sum) < 1e-12);
}

TEST_CASE("equal rewards produce exactly zero gradient") {
  ParamStore store;
  store.add("w", Tensor::matrix(1, 3, {0.3, -0.2, 0.1}));
  Tape t;
  TapeParams tp(t, store);
  Var probs = t.softmax(tp[0]);
  std::vector<Var> lps{t.log_(t.pick(probs, 0, 0)), t.log_(t.pick(probs, 0, 1)),
                       t.log_(t.pick(probs, 0, 2))};
  Var loss = tr::reinforce_loss(t, lps, {-2.0, -2.0, -2.0});
  CHECK(t.value(loss).data[0] == 0.0);
  t.backward(loss);
  std::vector<Tensor> grads;
  t.add_param_grads(grads);
  for (real_t g : grads[0].data) CHECK(g == 0.0);
}

TEST_CASE("a single trajectory is rejected (degenerate baseline)") {
  ParamStore store;
  store.add("lp", Tensor::scalar(-1.0));
  Tape t;
  TapeParams tp(t, store);
  CHECK_THROWS(tr::reinforce_loss(t, {tp[0]}, {-1.0}));
}

TEST_CASE("one plain gradient step raises the better trajectory's probability") {
  ParamStore store;
  store.add("w", Tensor::matrix(1, 2, {0.0, 0.0}));
  auto logprob_of = [&](int action) {
    Tape t;
    TapeParams tp(t, store);
    return std::log(static_cast<double>(t.value(t.softmax(tp[0])).at(0, action)));
  };
  const double before = logprob_of(0);

  Tape t;
  TapeParams tp(t, store);
  Var probs = t.softmax(tp[0]);
  std::vector<Var> lps{t.log_(t.pick(probs, 0, 0)), t.log_(t.pick(probs, 0, 1))};
  // Trajectory 0 is better: reward -1 vs -3.
  Var loss = tr::reinforce_loss(t, lps, {-1.0, -3.0});
  t.backward(loss);
  std::vector<Tensor> grads;
  t.add_param_grads(grads);
  for (std::size_t i = 0; i < 2; ++i)
    store.value(0).data[i] -= static_cast<real_t>(0.1 * grads[0].data[i]);

  CHECK(logprob_of(0) > before);
}

TEST_CASE("atsp pomo rollouts: one trajectory per start city, all valid") {
  tr::TrainConfig cfg = tiny_atsp_config();
  model::AtspModel m = model::init_atsp_model(cfg.atsp_model_config(), 3);
  std::vector<atsp::AtspInstance> batch;
  for (int i = 0; i < 4; ++i) {
    Rng rng = Rng::stream(5, {static_cast<std::uint64_t>(i)});
    batch.push_back(atsp::generate_tmat(cfg.n, rng));
  }
  auto rollouts = tr::pomo_rollout_atsp(m, batch, atsp::Mode::Sample, 17);
  REQUIRE(rollouts.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(rollouts[i].size() == static_cast<std::size_t>(cfg.n));
    for (std::size_t s = 0; s < rollouts[i].size(); ++s) {
      const auto& traj = rollouts[i][s];
      CHECK(traj.actions[0] == static_cast<int>(s));
      CHECK(traj.objective == atsp::tour_length(batch[i], traj.actions));
      CHECK(std::isfinite(traj.logprob));
    }
  }
}

TEST_CASE("atsp pomo on two cities gives equal rewards from both starts") {
  model::AtspModelConfig mc;
  mc.enc.layers = 1;
  mc.enc.d_model = 16;
  mc.enc.heads = 2;
  mc.enc.d_ff = 16;
  mc.n_max = 2;
  model::AtspModel m = model::init_atsp_model(mc, 4);
  atsp::AtspInstance inst;
  inst.n = 2;
  inst.dist = {0, 5, 9, 0};
  auto rollouts = tr::pomo_rollout_atsp(m, {inst}, atsp::Mode::Sample, 1);
  REQUIRE(rollouts[0].size() == 2);
  CHECK(rollouts[0][0].reward == rollouts[0][1].reward);
  CHECK(rollouts[0][0].objective == 14);
}

TEST_CASE("ffsp pomo uses distinct machine permutations and valid schedules") {
  const auto perms = model::machine_permutations(4, 24);
  CHECK(perms.size() == 24);
  std::set<std::vector<int>> distinct(perms.begin(), perms.end());
  CHECK(distinct.size() == 24);

  tr::TrainConfig cfg = tiny_ffsp_config();
  model::FfspModel m = model::init_ffsp_model(cfg.ffsp_model_config(), 9);
  std::vector<ffsp::FfspInstance> batch;
  for (int i = 0; i < 2; ++i) {
    Rng rng = Rng::stream(6, {static_cast<std::uint64_t>(i)});
    batch.push_back(ffsp::generate_ffsp(cfg.stages, cfg.machines, cfg.n, rng));
  }
  auto rollouts = tr::pomo_rollout_ffsp(m, batch, atsp::Mode::Sample, 21, cfg.max_perms);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(rollouts[i].size() == 6);  // 3! machine orders
    for (const auto& traj : rollouts[i]) CHECK(traj.objective > 0);
  }
}

TEST_CASE("ffsp rollouts share one encoding across machine orders") {
  tr::TrainConfig cfg = tiny_ffsp_config();
  model::FfspModel m = model::init_ffsp_model(cfg.ffsp_model_config(), 13);
  Rng rng(7);
  auto inst = ffsp::generate_ffsp(cfg.stages, cfg.machines, cfg.n, rng);

  Tape tape;
  tape.grad_enabled = false;
  TapeParams tp(tape, m.params);
  Rng enc_rng(8);
  const model::FfspEncoding enc = model::encode_ffsp(tp, m, inst, enc_rng);
  const std::size_t after_encode = tape.size();

  Rng r1(9), r2(10);
  auto t1 = model::rollout_ffsp(tp, m, inst, enc, {0, 1, 2}, atsp::Mode::Sample, r1, false);
  const std::size_t after_first = tape.size();
  auto t2 = model::rollout_ffsp(tp, m, inst, enc, {2, 1, 0}, atsp::Mode::Sample, r2, false);
  const std::size_t after_second = tape.size();

  // No re-encoding: per-rollout growth stays in the same small band.
  const std::size_t growth1 = after_first - after_encode;
  const std::size_t growth2 = after_second - after_first;
  CHECK(growth1 > 0);
  CHECK(growth2 < growth1 * 2);
  CHECK(t1.objective > 0);
  CHECK(t2.objective > 0);
}

TEST_CASE("training for zero epochs returns the initialized parameters") {
  tr::TrainConfig cfg = tiny_atsp_config();
  cfg.epochs = 0;
  tr::Checkpoint ckpt = tr::train(cfg);
  model::AtspModel fresh = model::init_atsp_model(cfg.atsp_model_config(), cfg.seed);
  REQUIRE(ckpt.params.count() == fresh.params.count());
  for (int i = 0; i < fresh.params.count(); ++i)
    CHECK(ckpt.params.value(i).data == fresh.params.value(ckpt.params.name(i)).data);
  CHECK(ckpt.adam.step == 0);
  CHECK(ckpt.epoch == 0);
}

TEST_CASE("training is bitwise reproducible at a fixed seed") {
  tr::TrainConfig cfg = tiny_atsp_config();
  tr::Checkpoint a = tr::train(cfg);
  tr::Checkpoint b = tr::train(cfg);
  REQUIRE(a.params.count() == b.params.count());
  for (int i = 0; i < a.params.count(); ++i) CHECK(a.params.value(i).data == b.params.value(i).data);
  CHECK(a.adam.step == b.adam.step);
}

TEST_CASE("gradient accumulation reproduces the full-batch update") {
  tr::TrainConfig cfg = tiny_atsp_config();
  cfg.instances_per_epoch = 4;
  cfg.batch_size = 4;
  cfg.grad_accum = 1;
  tr::Checkpoint full = tr::train(cfg);
  cfg.grad_accum = 2;
  tr::Checkpoint split = tr::train(cfg);
  double max_diff = 0;
  for (int i = 0; i < full.params.count(); ++i) {
    const auto& a = full.params.value(i).data;
    const auto& b = split.params.value(i).data;
    for (std::size_t k = 0; k < a.size(); ++k)
      max_diff = std::max(max_diff, std::abs(static_cast<double>(a[k]) - b[k]));
  }
  CHECK(max_diff < 1e-8);
}

TEST_CASE("ffsp training runs end to end and validates") {
  tr::TrainConfig cfg = tiny_ffsp_config();
  std::vector<tr::EpochMetrics> metrics;
  tr::Checkpoint ckpt = tr::train(cfg, "", &metrics);
  CHECK(metrics.size() == 1);
  CHECK(std::isfinite(metrics[0].mean_reward));
  CHECK(metrics[0].baseline_metric > 0);
  CHECK(ckpt.adam.step == 2);  // 8 instances / batch 4
}

TEST_CASE("checkpoints round-trip bitwise") {
  tr::TrainConfig cfg = tiny_atsp_config();
  tr::Checkpoint ckpt = tr::train(cfg);
  const std::string p1 = "ckpt_roundtrip_1.bin";
  const std::string p2 = "ckpt_roundtrip_2.bin";
  tr::save_checkpoint(p1, ckpt);
  tr::Checkpoint loaded = tr::load_checkpoint(p1);
  tr::save_checkpoint(p2, loaded);
  CHECK(slurp(p1) == slurp(p2));
  CHECK(loaded.epoch == ckpt.epoch);
  CHECK(loaded.adam.step == ckpt.adam.step);
  CHECK(loaded.config.to_text() == ckpt.config.to_text());
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("a truncated checkpoint reports a checksum error, not a crash") {
  tr::TrainConfig cfg = tiny_atsp_config();
  cfg.epochs = 0;
  tr::Checkpoint ckpt = tr::train(cfg);
  const std::string path = "ckpt_truncated.bin";
  tr::save_checkpoint(path, ckpt);
  std::string bytes = slurp(path);
  bytes.resize(bytes.size() / 2);
  {
    std::ofstream f(path, std::ios::binary);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  try {
    tr::load_checkpoint(path);
    FAIL("expected throw");
  } catch (const std::exception& e) {
    const std::string what = e.what();
    const bool mentions = what.find("checksum") != std::string::npos ||
                          what.find("truncated") != std::string::npos;
    CHECK(mentions);
  }
  std::remove(path.c_str());
}

TEST_CASE("a corrupted version field is an explicit version error") {
  tr::TrainConfig cfg = tiny_atsp_config();
  cfg.epochs = 0;
  tr::Checkpoint ckpt = tr::train(cfg);
  const std::string path = "ckpt_badversion.bin";
  tr::save_checkpoint(path, ckpt);
  std::string bytes = slurp(path);
  bytes[8] = 9;  // version field follows the 8-byte magic
  {
    std::ofstream f(path, std::ios::binary);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  try {
    tr::load_checkpoint(path);
    FAIL("expected throw");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("version") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("evaluation replays identically from a loaded checkpoint") {
  tr::TrainConfig cfg = tiny_atsp_config();
  tr::Checkpoint ckpt = tr::train(cfg);
  const std::string path = "ckpt_replay.bin";
  tr::save_checkpoint(path, ckpt);

  std::vector<atsp::AtspInstance> batch;
  for (int i = 0; i < 3; ++i) {
    Rng rng = Rng::stream(31, {static_cast<std::uint64_t>(i)});
    batch.push_back(atsp::generate_tmat(cfg.n, rng));
  }
  model::AtspModel original = tr::atsp_model_from(ckpt);
  model::AtspModel reloaded = tr::atsp_model_from(tr::load_checkpoint(path));
  auto r1 = tr::pomo_rollout_atsp(original, batch, atsp::Mode::Sample, 77);
  auto r2 = tr::pomo_rollout_atsp(reloaded, batch, atsp::Mode::Sample, 77);
  REQUIRE(r1.size() == r2.size());
  for (std::size_t i = 0; i < r1.size(); ++i)
    for (std::size_t s = 0; s < r1[i].size(); ++s) {
      CHECK(r1[i][s].actions == r2[i][s].actions);
      CHECK(r1[i][s].objective == r2[i][s].objective);
    }
  std::remove(path.c_str());
}

TEST_CASE("metrics files carry one csv line per epoch") {
  tr::TrainConfig cfg = tiny_atsp_config();
  cfg.epochs = 3;
  const std::string path = "metrics_test.csv";
  tr::train(cfg, path);
  std::istringstream is(slurp(path));
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line == "epoch,mean_reward,baseline_metric,wall_seconds");
  int lines = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 3);
  std::remove(path.c_str());
}

TEST_CASE("config validation names the offending field") {
  tr::TrainConfig cfg = tiny_atsp_config();
  cfg.batch_size = 3;  // does not divide instances_per_epoch = 8
  try {
    cfg.validate();
    FAIL("expected throw");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("instances_per_epoch") != std::string::npos);
  }
  cfg = tiny_atsp_config();
  cfg.problem = "qap";
  try {
    cfg.validate();
    FAIL("expected throw");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("problem") != std::string::npos);
  }
}

TEST_CASE("train config text round-trips") {
  tr::TrainConfig cfg = tr::preset("ffsp10");
  cfg.seed = 99;
  cfg.update_mode = "seq_a_first";
  tr::TrainConfig back = tr::TrainConfig::from_text(cfg.to_text());
  CHECK(back.to_text() == cfg.to_text());
  CHECK(back.problem == "ffsp");
  CHECK(back.seed == 99);
  CHECK(back.update_mode == "seq_a_first");
}
