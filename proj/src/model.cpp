#include "matnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace matnet::model {

using ad::Tape;
using ad::Var;

namespace {
constexpr real_t kNegInf = -std::numeric_limits<real_t>::infinity();
}

void AtspModelConfig::finalize() {
  enc.init_a = InitScheme::Zeros;
  if (enc.init_b == InitScheme::Zeros) enc.init_b = InitScheme::OneHotPool;
  enc.pool_b = n_max;
  enc.validate();
}

DecoderConfig AtspModelConfig::decoder_config() const {
  DecoderConfig dec;
  dec.d_model = enc.d_model;
  dec.heads = enc.heads;
  dec.query_input = 2 * enc.d_model;
  dec.clip = enc.clip;
  dec.has_skip = false;
  return dec;
}

AtspModel init_atsp_model(AtspModelConfig cfg, std::uint64_t seed) {
  cfg.finalize();
  AtspModel m;
  m.cfg = cfg;
  Rng rng = Rng::stream(seed, {0x1417});
  build_encoder_params(m.params, "enc.", cfg.enc, rng);
  build_decoder_params(m.params, "dec.", cfg.decoder_config(), rng);
  m.enc_ids = resolve_encoder_ids(m.params, "enc.", cfg.enc);
  m.dec_ids = resolve_decoder_ids(m.params, "dec.", cfg.decoder_config());
  return m;
}

AtspEncoding encode_atsp(TapeParams& tp, const AtspModel& m, const atsp::AtspInstance& inst,
                         Rng& rng) {
  Tensor plane = Tensor::zeros({inst.n, inst.n});
  for (std::size_t i = 0; i < inst.dist.size(); ++i)
    plane.data[i] = static_cast<real_t>(inst.dist[i] / m.cfg.dist_scale);
  DataMatrix d = DataMatrix::single(std::move(plane));

  EncodeResult enc = encode(tp, m.enc_ids, m.cfg.enc, d, rng);
  AtspEncoding out;
  out.h_from = enc.h_a;
  out.h_to = enc.h_b;
  out.assignment = std::move(enc.assignment_b);
  out.cache = precompute_kv(tp, m.dec_ids, m.cfg.decoder_config(), enc.h_b);
  return out;
}

NeuralTraj rollout_atsp(TapeParams& tp, const AtspModel& m, const atsp::AtspInstance& inst,
                        const AtspEncoding& enc, int start_city, Mode mode, Rng& rng,
                        bool want_grad) {
  Tape& t = tp.tape();
  const int n = inst.n;
  const DecoderConfig dec = m.cfg.decoder_config();

  NeuralTraj traj;
  traj.actions.reserve(static_cast<std::size_t>(n));
  traj.actions.push_back(start_city);
  std::vector<real_t> mask(static_cast<std::size_t>(n), 0);
  mask[static_cast<std::size_t>(start_city)] = kNegInf;
  int current = start_city;

  for (int step = 1; step < n; ++step) {
    Var query = make_query_atsp(tp, m.dec_ids, enc.h_from, start_city, current);
    Var probs = decode_step(tp, m.dec_ids, dec, query, enc.cache, mask);
    const Tensor& p = t.value(probs);
    std::vector<real_t> row(p.data.begin(), p.data.end());
    const int chosen = mode == Mode::Greedy ? greedy_pick(row) : sample_pick(row, rng);
    traj.logprob += std::log(static_cast<double>(row[static_cast<std::size_t>(chosen)]));
    if (want_grad) {
      Var lp = t.log_(t.pick(probs, 0, chosen));
      traj.logprob_var = traj.logprob_var.valid() ? t.add(traj.logprob_var, lp) : lp;
    }
    mask[static_cast<std::size_t>(chosen)] = kNegInf;
    traj.actions.push_back(chosen);
    current = chosen;
  }
  traj.objective = atsp::tour_length(inst, traj.actions);
  return traj;
}

void FfspModelConfig::finalize() {
  enc.init_a = InitScheme::OneHotPool;
  enc.pool_a = machines;
  enc.init_b = InitScheme::Zeros;
  enc.validate();
}

DecoderConfig FfspModelConfig::decoder_config() const {
  DecoderConfig dec;
  dec.d_model = enc.d_model;
  dec.heads = enc.heads;
  dec.query_input = enc.d_model;
  dec.clip = enc.clip;
  dec.has_skip = true;
  return dec;
}

FfspModel init_ffsp_model(FfspModelConfig cfg, std::uint64_t seed) {
  cfg.finalize();
  FfspModel m;
  m.cfg = cfg;
  Rng rng = Rng::stream(seed, {0xffe0});
  for (int s = 0; s < cfg.stages; ++s) {
    const std::string prefix = "g" + std::to_string(s) + ".";
    build_encoder_params(m.params, prefix + "enc.", cfg.enc, rng);
    build_decoder_params(m.params, prefix + "dec.", cfg.decoder_config(), rng);
  }
  for (int s = 0; s < cfg.stages; ++s) {
    const std::string prefix = "g" + std::to_string(s) + ".";
    m.enc_ids.push_back(resolve_encoder_ids(m.params, prefix + "enc.", cfg.enc));
    m.dec_ids.push_back(resolve_decoder_ids(m.params, prefix + "dec.", cfg.decoder_config()));
  }
  return m;
}

FfspEncoding encode_ffsp(TapeParams& tp, const FfspModel& m, const ffsp::FfspInstance& inst,
                         Rng& rng) {
  if (inst.stages != m.cfg.stages || inst.machines > m.cfg.machines)
    throw std::invalid_argument("encode_ffsp: instance does not fit the model configuration");
  FfspEncoding out;
  for (int s = 0; s < inst.stages; ++s) {
    Tensor plane = Tensor::zeros({inst.machines, inst.jobs});
    for (int mm = 0; mm < inst.machines; ++mm)
      for (int j = 0; j < inst.jobs; ++j)
        plane.at(mm, j) = static_cast<real_t>(inst.time(s, mm, j) / m.cfg.time_scale);
    DataMatrix d = DataMatrix::single(std::move(plane));
    EncodeResult enc = encode(tp, m.enc_ids[static_cast<std::size_t>(s)], m.cfg.enc, d, rng);
    FfspEncoding::Stage stage;
    stage.h_machines = enc.h_a;
    stage.h_jobs = enc.h_b;
    stage.assignment = std::move(enc.assignment_a);
    stage.cache = precompute_kv(tp, m.dec_ids[static_cast<std::size_t>(s)],
                                m.cfg.decoder_config(), enc.h_b);
    out.stages.push_back(std::move(stage));
  }
  return out;
}

NeuralTraj rollout_ffsp(TapeParams& tp, const FfspModel& m, const ffsp::FfspInstance& inst,
                        const FfspEncoding& enc, const std::vector<int>& machine_order, Mode mode,
                        Rng& rng, bool want_grad, ffsp::FfspSchedule* schedule_out) {
  Tape& t = tp.tape();
  const int n = inst.jobs;
  const DecoderConfig dec = m.cfg.decoder_config();
  NeuralTraj traj;

  ffsp::Chooser choose = [&](int s, int machine, int, const std::vector<int>& available,
                             bool force) -> int {
    std::vector<real_t> mask(static_cast<std::size_t>(n + 1), kNegInf);
    for (int j : available) mask[static_cast<std::size_t>(j)] = 0;
    if (!force) mask[static_cast<std::size_t>(n)] = 0;  // the skip row
    Var query = make_query_row(tp, m.dec_ids[static_cast<std::size_t>(s)],
                               enc.stages[static_cast<std::size_t>(s)].h_machines, machine);
    Var probs = decode_step(tp, m.dec_ids[static_cast<std::size_t>(s)], dec, query,
                            enc.stages[static_cast<std::size_t>(s)].cache, mask);
    const Tensor& p = t.value(probs);
    std::vector<real_t> row(p.data.begin(), p.data.end());
    const int chosen = mode == Mode::Greedy ? greedy_pick(row) : sample_pick(row, rng);
    traj.logprob += std::log(static_cast<double>(row[static_cast<std::size_t>(chosen)]));
    if (want_grad) {
      Var lp = t.log_(t.pick(probs, 0, chosen));
      traj.logprob_var = traj.logprob_var.valid() ? t.add(traj.logprob_var, lp) : lp;
    }
    traj.actions.push_back(chosen);
    return chosen == n ? ffsp::kSkip : chosen;
  };

  const ffsp::FfspSchedule sched = ffsp::run_gantt(inst, machine_order, choose);
  traj.objective = sched.makespan;
  if (schedule_out) *schedule_out = sched;
  return traj;
}

std::vector<std::vector<int>> machine_permutations(int machines, int count) {
  std::vector<int> order(static_cast<std::size_t>(machines));
  for (int i = 0; i < machines; ++i) order[static_cast<std::size_t>(i)] = i;
  std::vector<std::vector<int>> perms;
  do {
    perms.push_back(order);
    if (static_cast<int>(perms.size()) >= count) break;
  } while (std::next_permutation(order.begin(), order.end()));
  return perms;
}

}  // namespace matnet::model
