#include "matnet/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include "matnet/config.hpp"

namespace matnet::trainer {

using ad::Tape;
using ad::Var;

namespace {

// Stream purposes; combined with (epoch, instance, rollout) indices so
// results never depend on thread scheduling.
enum StreamTag : std::uint64_t {
  kGen = 1,
  kEncode = 2,
  kRollout = 3,
  kEvalEncode = 4,
  kEvalRollout = 5,
  kMaster = 6,
};

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

int thread_count() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("train config: field '" + field + "' " + why);
  };
  if (problem != "atsp" && problem != "ffsp") fail("problem", "must be atsp or ffsp");
  if (n < 2) fail("n", "must be >= 2");
  if (problem == "ffsp" && (stages < 1 || machines < 1)) fail("stages", "must be >= 1");
  if (d_model < 1 || heads < 1 || d_model % heads != 0)
    fail("d_model", "must be a positive multiple of heads");
  if (layers < 1) fail("layers", "must be >= 1");
  if (lr <= 0) fail("lr", "must be positive");
  if (batch_size < 1) fail("batch_size", "must be >= 1");
  if (instances_per_epoch < 1) fail("instances_per_epoch", "must be >= 1");
  if (instances_per_epoch % batch_size != 0)
    fail("instances_per_epoch", "must be a multiple of batch_size");
  if (epochs < 0) fail("epochs", "must be >= 0");
  if (grad_accum < 1) fail("grad_accum", "must be >= 1");
  if (batch_size % grad_accum != 0) fail("batch_size", "must be a multiple of grad_accum");
  if (max_perms < 2) fail("max_perms", "must be >= 2 (the baseline needs two trajectories)");
}

std::string TrainConfig::to_text() const {
  KeyValueConfig kv;
  kv.set("train.problem", problem);
  kv.set_int("train.n", n);
  kv.set_int("train.stages", stages);
  kv.set_int("train.machines", machines);
  kv.set_bool("train.euclidean", euclidean);
  kv.set_int("train.d_model", d_model);
  kv.set_int("train.layers", layers);
  kv.set_int("train.heads", heads);
  kv.set_int("train.d_ff", d_ff);
  kv.set_int("train.mixer_hidden", mixer_hidden);
  kv.set("train.update_mode", update_mode);
  kv.set_bool("train.share_update", share_update);
  kv.set("train.init_b", init_b);
  kv.set_int("train.pool_size", pool_size);
  kv.set_double("train.lr", lr);
  kv.set_int("train.batch_size", batch_size);
  kv.set_int("train.instances_per_epoch", instances_per_epoch);
  kv.set_int("train.epochs", epochs);
  kv.set_int("train.grad_accum", grad_accum);
  kv.set_int("train.max_perms", max_perms);
  kv.set_int("train.seed", static_cast<std::int64_t>(seed));
  return kv.serialize();
}

TrainConfig TrainConfig::from_text(const std::string& text) {
  const KeyValueConfig kv = KeyValueConfig::parse(text);
  TrainConfig cfg;
  cfg.problem = kv.get_or("train.problem", cfg.problem);
  auto geti = [&](const char* key, int fallback) {
    return kv.has(key) ? static_cast<int>(kv.get_int(key)) : fallback;
  };
  cfg.n = geti("train.n", cfg.n);
  cfg.stages = geti("train.stages", cfg.stages);
  cfg.machines = geti("train.machines", cfg.machines);
  if (kv.has("train.euclidean")) cfg.euclidean = kv.get_bool("train.euclidean");
  cfg.d_model = geti("train.d_model", cfg.d_model);
  cfg.layers = geti("train.layers", cfg.layers);
  cfg.heads = geti("train.heads", cfg.heads);
  cfg.d_ff = geti("train.d_ff", cfg.d_ff);
  cfg.mixer_hidden = geti("train.mixer_hidden", cfg.mixer_hidden);
  cfg.update_mode = kv.get_or("train.update_mode", cfg.update_mode);
  if (kv.has("train.share_update")) cfg.share_update = kv.get_bool("train.share_update");
  cfg.init_b = kv.get_or("train.init_b", cfg.init_b);
  cfg.pool_size = geti("train.pool_size", cfg.pool_size);
  if (kv.has("train.lr")) cfg.lr = kv.get_double("train.lr");
  cfg.batch_size = geti("train.batch_size", cfg.batch_size);
  cfg.instances_per_epoch = geti("train.instances_per_epoch", cfg.instances_per_epoch);
  cfg.epochs = geti("train.epochs", cfg.epochs);
  cfg.grad_accum = geti("train.grad_accum", cfg.grad_accum);
  cfg.max_perms = geti("train.max_perms", cfg.max_perms);
  if (kv.has("train.seed")) cfg.seed = static_cast<std::uint64_t>(kv.get_int("train.seed"));
  return cfg;
}

EncoderConfig TrainConfig::encoder_config() const {
  EncoderConfig enc;
  enc.layers = layers;
  enc.d_model = d_model;
  enc.heads = heads;
  enc.d_ff = d_ff;
  enc.mixer_hidden = mixer_hidden;
  enc.update_mode = update_mode_from_string(update_mode);
  enc.share_update_fn = share_update;
  return enc;
}

model::AtspModelConfig TrainConfig::atsp_model_config() const {
  model::AtspModelConfig mc;
  mc.enc = encoder_config();
  mc.enc.init_b = init_scheme_from_string(init_b);
  mc.n_max = pool_size > 0 ? pool_size : n;
  mc.finalize();
  return mc;
}

model::FfspModelConfig TrainConfig::ffsp_model_config() const {
  model::FfspModelConfig mc;
  mc.enc = encoder_config();
  mc.stages = stages;
  mc.machines = machines;
  mc.finalize();
  return mc;
}

TrainConfig preset(const std::string& name) {
  TrainConfig cfg;
  if (name == "atsp10") {
    cfg.problem = "atsp";
    cfg.n = 10;
    cfg.layers = 3;
    cfg.d_model = 64;
    cfg.heads = 4;
    cfg.d_ff = 128;
    cfg.lr = 4e-4;
    cfg.batch_size = 25;
    cfg.instances_per_epoch = 1000;
    cfg.epochs = 120;
  } else if (name == "atsp20") {
    cfg = preset("atsp10");
    cfg.n = 20;
    cfg.epochs = 40;
  } else if (name == "ffsp10") {
    cfg.problem = "ffsp";
    cfg.n = 10;
    cfg.layers = 2;
    cfg.d_model = 64;
    cfg.heads = 4;
    cfg.d_ff = 128;
    cfg.lr = 4e-4;
    cfg.batch_size = 50;
    cfg.instances_per_epoch = 1000;
    cfg.epochs = 20;
  } else if (name == "ffsp20") {
    cfg = preset("ffsp10");
    cfg.n = 20;
    cfg.epochs = 30;
  } else if (name == "atsp20-paper") {
    cfg.problem = "atsp";
    cfg.n = 20;
    cfg.layers = 5;
    cfg.d_model = 256;
    cfg.heads = 16;
    cfg.d_ff = 516;
    cfg.lr = 4e-4;
    cfg.batch_size = 200;
    cfg.instances_per_epoch = 10000;
    cfg.epochs = 2000;
  } else if (name == "ffsp20-paper") {
    cfg.problem = "ffsp";
    cfg.n = 20;
    cfg.layers = 3;
    cfg.d_model = 256;
    cfg.heads = 16;
    cfg.d_ff = 516;
    cfg.lr = 1e-4;
    cfg.batch_size = 50;
    cfg.instances_per_epoch = 1000;
    cfg.epochs = 100;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  return cfg;
}

std::vector<std::string> preset_names() {
  return {"atsp10", "atsp20", "ffsp10", "ffsp20", "atsp20-paper", "ffsp20-paper"};
}

Var reinforce_loss(Tape& tape, const std::vector<Var>& logprobs,
                   const std::vector<double>& rewards) {
  if (logprobs.size() != rewards.size())
    throw std::invalid_argument("reinforce_loss: logprob/reward count mismatch");
  if (rewards.size() < 2)
    throw std::invalid_argument("reinforce_loss: need >= 2 trajectories for a shared baseline");
  double mean = 0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(rewards.size());
  const double inv_t = 1.0 / static_cast<double>(rewards.size());
  Var loss;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    Var term = tape.scale(logprobs[i], -(rewards[i] - mean) * inv_t);
    loss = loss.valid() ? tape.add(loss, term) : term;
  }
  return loss;
}

std::vector<std::vector<Trajectory>> pomo_rollout_atsp(const model::AtspModel& m,
                                                       const std::vector<atsp::AtspInstance>& batch,
                                                       Mode mode, std::uint64_t seed) {
  std::vector<std::vector<Trajectory>> out(batch.size());
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(batch.size()); ++i) {
    const atsp::AtspInstance& inst = batch[static_cast<std::size_t>(i)];
    Tape tape;
    tape.grad_enabled = false;
    TapeParams tp(tape, m.params);
    Rng enc_rng = Rng::stream(seed, {kEvalEncode, static_cast<std::uint64_t>(i)});
    const model::AtspEncoding enc = encode_atsp(tp, m, inst, enc_rng);
    auto& trajs = out[static_cast<std::size_t>(i)];
    for (int start = 0; start < inst.n; ++start) {
      Rng roll = Rng::stream(seed, {kEvalRollout, static_cast<std::uint64_t>(i),
                                    static_cast<std::uint64_t>(start)});
      model::NeuralTraj nt = rollout_atsp(tp, m, inst, enc, start, mode, roll, false);
      trajs.push_back({std::move(nt.actions), nt.logprob, -nt.objective / m.cfg.dist_scale,
                       nt.objective});
    }
  }
  return out;
}

std::vector<std::vector<Trajectory>> pomo_rollout_ffsp(const model::FfspModel& m,
                                                       const std::vector<ffsp::FfspInstance>& batch,
                                                       Mode mode, std::uint64_t seed,
                                                       int max_perms) {
  std::vector<std::vector<Trajectory>> out(batch.size());
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(batch.size()); ++i) {
    const ffsp::FfspInstance& inst = batch[static_cast<std::size_t>(i)];
    const auto perms = model::machine_permutations(inst.machines, max_perms);
    const double scale = inst.stage_max_sum();
    Tape tape;
    tape.grad_enabled = false;
    TapeParams tp(tape, m.params);
    Rng enc_rng = Rng::stream(seed, {kEvalEncode, static_cast<std::uint64_t>(i)});
    const model::FfspEncoding enc = encode_ffsp(tp, m, inst, enc_rng);
    auto& trajs = out[static_cast<std::size_t>(i)];
    for (std::size_t p = 0; p < perms.size(); ++p) {
      Rng roll = Rng::stream(seed, {kEvalRollout, static_cast<std::uint64_t>(i), p});
      model::NeuralTraj nt = rollout_ffsp(tp, m, inst, enc, perms[p], mode, roll, false);
      trajs.push_back({std::move(nt.actions), nt.logprob, -nt.objective / scale, nt.objective});
    }
  }
  return out;
}

namespace {

// --- checkpoint serialization -----------------------------------------

constexpr char kMagic[8] = {'M', 'A', 'T', 'N', 'E', 'T', 'C', 'K'};

std::uint32_t crc32(const unsigned char* data, std::size_t len) {
  static std::uint32_t table[256];
  static bool built = false;
  if (!built) {
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      table[i] = c;
    }
    built = true;
  }
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  explicit Reader(const std::string& b) : buf(b) {}
  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw std::runtime_error("checkpoint: truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + static_cast<std::size_t>(i)])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + static_cast<std::size_t>(i)])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

void put_tensor_record(std::string& out, const std::string& name, const Tensor& t) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  out.push_back(1);  // dtype tag: 64-bit float
  put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
  for (auto d : t.shape) put_u64(out, static_cast<std::uint64_t>(d));
  for (real_t v : t.data) put_f64(out, static_cast<double>(v));
}

std::pair<std::string, Tensor> read_tensor_record(Reader& r) {
  const std::uint32_t name_len = r.u32();
  std::string name = r.bytes(name_len);
  const char dtype = r.bytes(1)[0];
  if (dtype != 1) throw std::runtime_error("checkpoint: unsupported dtype tag");
  const std::uint32_t rank = r.u32();
  std::vector<std::int64_t> shape;
  std::int64_t numel = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    shape.push_back(static_cast<std::int64_t>(r.u64()));
    numel *= shape.back();
  }
  Tensor t = Tensor::zeros(shape);
  for (std::int64_t i = 0; i < numel; ++i) t.data[static_cast<std::size_t>(i)] = static_cast<real_t>(r.f64());
  return {std::move(name), std::move(t)};
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::string body;
  const int n = ckpt.params.count();
  put_u32(body, static_cast<std::uint32_t>(3 * n));
  for (int i = 0; i < n; ++i) put_tensor_record(body, "p." + ckpt.params.name(i), ckpt.params.value(i));
  for (int i = 0; i < n; ++i)
    put_tensor_record(body, "adam.m." + ckpt.params.name(i), ckpt.adam.m[static_cast<std::size_t>(i)]);
  for (int i = 0; i < n; ++i)
    put_tensor_record(body, "adam.v." + ckpt.params.name(i), ckpt.adam.v[static_cast<std::size_t>(i)]);

  KeyValueConfig state;
  state.set_int("state.adam_step", ckpt.adam.step);
  state.set_double("state.adam_lr", ckpt.adam.cfg.lr);
  state.set_double("state.adam_beta1", ckpt.adam.cfg.beta1);
  state.set_double("state.adam_beta2", ckpt.adam.cfg.beta2);
  state.set_double("state.adam_eps", ckpt.adam.cfg.eps);
  state.set_int("state.epoch", ckpt.epoch);
  state.set("state.rng", ckpt.rng_state);
  const std::string blob = ckpt.config.to_text() + state.serialize();
  put_u64(body, blob.size());
  body += blob;

  std::string out(kMagic, 8);
  put_u32(out, ckpt.version);
  put_u32(out, crc32(reinterpret_cast<const unsigned char*>(body.data()), body.size()));
  out += body;

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read checkpoint " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string buf = ss.str();

  if (buf.size() < 16 || std::memcmp(buf.data(), kMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic bytes");
  Reader r(buf);
  r.pos = 8;
  const std::uint32_t version = r.u32();
  if (version != 1)
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version));
  const std::uint32_t stored_crc = r.u32();
  const std::uint32_t actual_crc = crc32(
      reinterpret_cast<const unsigned char*>(buf.data()) + r.pos, buf.size() - r.pos);
  if (stored_crc != actual_crc)
    throw std::runtime_error("checkpoint: checksum mismatch (corrupt or truncated file)");

  const std::uint32_t records = r.u32();
  std::vector<std::pair<std::string, Tensor>> tensors;
  tensors.reserve(records);
  for (std::uint32_t i = 0; i < records; ++i) tensors.push_back(read_tensor_record(r));
  const std::uint64_t blob_len = r.u64();
  const std::string blob = r.bytes(blob_len);

  Checkpoint ckpt;
  ckpt.version = version;
  ckpt.config = TrainConfig::from_text(blob);
  const KeyValueConfig state = KeyValueConfig::parse(blob);
  ckpt.epoch = state.get_int("state.epoch");
  ckpt.rng_state = state.get("state.rng");
  ckpt.adam.cfg.lr = state.get_double("state.adam_lr");
  ckpt.adam.cfg.beta1 = state.get_double("state.adam_beta1");
  ckpt.adam.cfg.beta2 = state.get_double("state.adam_beta2");
  ckpt.adam.cfg.eps = state.get_double("state.adam_eps");
  ckpt.adam.step = state.get_int("state.adam_step");

  for (auto& [name, tensor] : tensors) {
    if (name.rfind("p.", 0) == 0) ckpt.params.add(name.substr(2), std::move(tensor));
  }
  ckpt.adam.m.resize(static_cast<std::size_t>(ckpt.params.count()));
  ckpt.adam.v.resize(static_cast<std::size_t>(ckpt.params.count()));
  for (auto& [name, tensor] : tensors) {
    if (name.rfind("adam.m.", 0) == 0) {
      const int slot = ckpt.params.index_of(name.substr(7));
      if (slot < 0) throw std::runtime_error("checkpoint: moment for unknown parameter " + name);
      ckpt.adam.m[static_cast<std::size_t>(slot)] = std::move(tensor);
    } else if (name.rfind("adam.v.", 0) == 0) {
      const int slot = ckpt.params.index_of(name.substr(7));
      if (slot < 0) throw std::runtime_error("checkpoint: moment for unknown parameter " + name);
      ckpt.adam.v[static_cast<std::size_t>(slot)] = std::move(tensor);
    }
  }
  return ckpt;
}

namespace {

template <typename Model>
void adopt_params(Model& m, const ParamStore& loaded) {
  if (loaded.count() != m.params.count())
    throw std::runtime_error("checkpoint: parameter count mismatch with config");
  for (int i = 0; i < m.params.count(); ++i) {
    const int src = loaded.index_of(m.params.name(i));
    if (src < 0)
      throw std::runtime_error("checkpoint: missing parameter " + m.params.name(i));
    if (!loaded.value(src).same_shape(m.params.value(i)))
      throw std::runtime_error("checkpoint: shape mismatch for " + m.params.name(i));
    m.params.value(i) = loaded.value(src);
  }
}

}  // namespace

model::AtspModel atsp_model_from(const Checkpoint& ckpt) {
  if (ckpt.config.problem != "atsp")
    throw std::invalid_argument("checkpoint holds a " + ckpt.config.problem + " model");
  model::AtspModel m = model::init_atsp_model(ckpt.config.atsp_model_config(), ckpt.config.seed);
  adopt_params(m, ckpt.params);
  return m;
}

model::FfspModel ffsp_model_from(const Checkpoint& ckpt) {
  if (ckpt.config.problem != "ffsp")
    throw std::invalid_argument("checkpoint holds a " + ckpt.config.problem + " model");
  model::FfspModel m = model::init_ffsp_model(ckpt.config.ffsp_model_config(), ckpt.config.seed);
  adopt_params(m, ckpt.params);
  return m;
}

namespace {

struct InstanceOutcome {
  double reward_sum = 0;
  int traj_count = 0;
  double baseline = 0;
  std::string error;
};

}  // namespace

Checkpoint train(const TrainConfig& cfg, const std::string& metrics_path,
                 std::vector<EpochMetrics>* metrics_out) {
  cfg.validate();
  const bool is_atsp = cfg.problem == "atsp";

  model::AtspModel atsp_model;
  model::FfspModel ffsp_model;
  if (is_atsp)
    atsp_model = model::init_atsp_model(cfg.atsp_model_config(), cfg.seed);
  else
    ffsp_model = model::init_ffsp_model(cfg.ffsp_model_config(), cfg.seed);
  ParamStore& params = is_atsp ? atsp_model.params : ffsp_model.params;

  AdamState adam = AdamState::init(params, {.lr = cfg.lr});

  std::ofstream metrics;
  if (!metrics_path.empty()) {
    metrics.open(metrics_path, std::ios::binary);
    if (!metrics) throw std::runtime_error("cannot write metrics file " + metrics_path);
    metrics << "epoch,mean_reward,baseline_metric,wall_seconds\n";
  }

  const int batches = cfg.instances_per_epoch / cfg.batch_size;
  const int micro_size = cfg.batch_size / cfg.grad_accum;
  const int nthreads = thread_count();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double t0 = now_seconds();
    double epoch_reward = 0, epoch_baseline = 0;
    std::int64_t epoch_trajs = 0;

    for (int batch = 0; batch < batches; ++batch) {
      std::vector<Tensor> grads;
      grads.reserve(static_cast<std::size_t>(params.count()));
      for (int i = 0; i < params.count(); ++i) grads.push_back(Tensor::zeros(params.value(i).shape));

      std::vector<InstanceOutcome> outcomes(static_cast<std::size_t>(cfg.batch_size));

      for (int micro = 0; micro < cfg.grad_accum; ++micro) {
        std::vector<std::vector<Tensor>> thread_grads(static_cast<std::size_t>(nthreads));

#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
        for (int i = 0; i < micro_size; ++i) {
#if defined(_OPENMP)
          const int tid = omp_get_thread_num();
#else
          const int tid = 0;
#endif
          const int batch_local = micro * micro_size + i;
          const std::uint64_t gidx =
              static_cast<std::uint64_t>(batch) * cfg.batch_size + static_cast<std::uint64_t>(batch_local);
          InstanceOutcome& oc = outcomes[static_cast<std::size_t>(batch_local)];
          try {
            Rng gen = Rng::stream(cfg.seed, {kGen, static_cast<std::uint64_t>(epoch), gidx});
            Tape tape;
            TapeParams tp(tape, params);
            std::vector<Var> logprobs;
            std::vector<double> rewards;

            if (is_atsp) {
              const atsp::AtspInstance inst = cfg.euclidean
                                                  ? atsp::generate_euclidean(cfg.n, gen)
                                                  : atsp::generate_tmat(cfg.n, gen);
              Rng enc_rng =
                  Rng::stream(cfg.seed, {kEncode, static_cast<std::uint64_t>(epoch), gidx});
              const model::AtspEncoding enc = encode_atsp(tp, atsp_model, inst, enc_rng);
              for (int start = 0; start < inst.n; ++start) {
                Rng roll = Rng::stream(cfg.seed, {kRollout, static_cast<std::uint64_t>(epoch),
                                                  gidx, static_cast<std::uint64_t>(start)});
                model::NeuralTraj nt =
                    rollout_atsp(tp, atsp_model, inst, enc, start, Mode::Sample, roll, true);
                logprobs.push_back(nt.logprob_var);
                rewards.push_back(-nt.objective / atsp_model.cfg.dist_scale);
              }
              oc.baseline = atsp::nearest_neighbor(inst).length;
            } else {
              const ffsp::FfspInstance inst =
                  ffsp::generate_ffsp(cfg.stages, cfg.machines, cfg.n, gen);
              const double scale = inst.stage_max_sum();
              Rng enc_rng =
                  Rng::stream(cfg.seed, {kEncode, static_cast<std::uint64_t>(epoch), gidx});
              const model::FfspEncoding enc = encode_ffsp(tp, ffsp_model, inst, enc_rng);
              const auto perms = model::machine_permutations(inst.machines, cfg.max_perms);
              for (std::size_t p = 0; p < perms.size(); ++p) {
                Rng roll = Rng::stream(cfg.seed,
                                       {kRollout, static_cast<std::uint64_t>(epoch), gidx, p});
                model::NeuralTraj nt = rollout_ffsp(tp, ffsp_model, inst, enc, perms[p],
                                                    Mode::Sample, roll, true);
                logprobs.push_back(nt.logprob_var);
                rewards.push_back(-nt.objective / scale);
              }
              oc.baseline = ffsp::sjf(inst).makespan;
            }

            Var loss = reinforce_loss(tape, logprobs, rewards);
            const double loss_value = static_cast<double>(tape.value(loss).data[0]);
            if (!std::isfinite(loss_value))
              throw std::runtime_error("non-finite loss " + std::to_string(loss_value));
            tape.backward(loss);
            tape.add_param_grads(thread_grads[static_cast<std::size_t>(tid)],
                                 1.0 / cfg.batch_size);
            for (double r : rewards) oc.reward_sum += r;
            oc.traj_count = static_cast<int>(rewards.size());
          } catch (const std::exception& e) {
            oc.error = e.what();
          }
        }

        // Deterministic reduction: thread buffers merge in thread order.
        for (auto& buf : thread_grads) {
          if (buf.empty()) continue;
          for (std::size_t slot = 0; slot < buf.size(); ++slot) {
            if (buf[slot].empty()) continue;
            Tensor& g = grads[slot];
            for (std::size_t k = 0; k < g.data.size(); ++k) g.data[k] += buf[slot].data[k];
          }
        }
      }

      for (const auto& oc : outcomes) {
        if (!oc.error.empty()) {
          // Diagnostic dump before aborting.
          std::ostringstream dump;
          dump << "train: aborting at epoch " << epoch << " batch " << batch << ": " << oc.error
               << "\nparameter norms:\n";
          for (int i = 0; i < params.count(); ++i) {
            double norm = 0;
            for (real_t v : params.value(i).data) norm += static_cast<double>(v) * v;
            dump << "  " << params.name(i) << " l2=" << std::sqrt(norm) << "\n";
          }
          throw std::runtime_error(dump.str());
        }
        epoch_reward += oc.reward_sum;
        epoch_trajs += oc.traj_count;
        epoch_baseline += oc.baseline;
      }

      adam_step(adam, params, grads);
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.mean_reward = epoch_trajs > 0 ? epoch_reward / static_cast<double>(epoch_trajs) : 0;
    em.baseline_metric =
        cfg.instances_per_epoch > 0 ? epoch_baseline / cfg.instances_per_epoch : 0;
    em.wall_seconds = now_seconds() - t0;
    if (metrics.is_open()) {
      metrics.precision(12);
      metrics << em.epoch << ',' << em.mean_reward << ',' << em.baseline_metric << ','
              << em.wall_seconds << "\n";
      metrics.flush();
    }
    if (metrics_out) metrics_out->push_back(em);
  }

  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.params = std::move(params);
  ckpt.adam = std::move(adam);
  ckpt.epoch = cfg.epochs;
  ckpt.rng_state = Rng::stream(cfg.seed, {kMaster, static_cast<std::uint64_t>(cfg.epochs)}).serialize();
  return ckpt;
}

}  // namespace matnet::trainer
