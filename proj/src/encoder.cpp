#include "matnet/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace matnet {

using ad::Var;

InitScheme init_scheme_from_string(const std::string& s) {
  if (s == "zeros") return InitScheme::Zeros;
  if (s == "one_hot_pool") return InitScheme::OneHotPool;
  if (s == "random_vectors") return InitScheme::RandomVectors;
  if (s == "learned_pool") return InitScheme::LearnedPool;
  throw std::invalid_argument("unknown init scheme: " + s);
}

std::string to_string(InitScheme s) {
  switch (s) {
    case InitScheme::Zeros: return "zeros";
    case InitScheme::OneHotPool: return "one_hot_pool";
    case InitScheme::RandomVectors: return "random_vectors";
    case InitScheme::LearnedPool: return "learned_pool";
  }
  return "?";
}

UpdateMode update_mode_from_string(const std::string& s) {
  if (s == "parallel") return UpdateMode::Parallel;
  if (s == "seq_a_first") return UpdateMode::SeqAFirst;
  if (s == "seq_b_first") return UpdateMode::SeqBFirst;
  throw std::invalid_argument("unknown update mode: " + s);
}

std::string to_string(UpdateMode m) {
  switch (m) {
    case UpdateMode::Parallel: return "parallel";
    case UpdateMode::SeqAFirst: return "seq_a_first";
    case UpdateMode::SeqBFirst: return "seq_b_first";
  }
  return "?";
}

void EncoderConfig::validate() const {
  if (layers < 0) throw std::invalid_argument("encoder: layers must be >= 0");
  if (heads < 1 || d_model < 1 || d_model % heads != 0)
    throw std::invalid_argument("encoder: d_model must be a positive multiple of heads");
  if (feature_count < 1) throw std::invalid_argument("encoder: feature_count must be >= 1");
  if (d_ff < 1 || mixer_hidden < 1)
    throw std::invalid_argument("encoder: d_ff and mixer_hidden must be >= 1");
  auto check_pool = [&](InitScheme s, int pool, const char* side) {
    if ((s == InitScheme::OneHotPool || s == InitScheme::LearnedPool) && pool < 1)
      throw std::invalid_argument(std::string("encoder: pooled init on side ") + side +
                                  " needs a positive pool size");
    if (s == InitScheme::OneHotPool && pool > d_model)
      throw std::invalid_argument(std::string("encoder: one-hot pool on side ") + side +
                                  " cannot exceed d_model");
  };
  check_pool(init_a, pool_a, "A");
  check_pool(init_b, pool_b, "B");
}

DataMatrix DataMatrix::single(Tensor plane) {
  DataMatrix d;
  d.rows = plane.rows();
  d.cols = plane.cols();
  d.planes.push_back(std::move(plane));
  return d;
}

void DataMatrix::validate() const {
  if (planes.empty()) throw std::invalid_argument("DataMatrix: needs at least one plane");
  for (const auto& p : planes) {
    if (p.rank() != 2 || p.rows() != rows || p.cols() != cols)
      throw std::invalid_argument("DataMatrix: plane shape " + p.shape_str() + " mismatch");
    if (!p.all_finite()) throw std::invalid_argument("DataMatrix: non-finite entries");
  }
}

namespace {

void build_block(ParamStore& store, const std::string& base, const EncoderConfig& cfg, Rng& rng) {
  const int dk = cfg.d_head();
  for (int h = 0; h < cfg.heads; ++h) {
    const std::string hb = base + "h" + std::to_string(h) + ".";
    store.add(hb + "wq", init_weight(cfg.d_model, dk, rng));
    store.add(hb + "wk", init_weight(cfg.d_model, dk, rng));
    store.add(hb + "wv", init_weight(cfg.d_model, dk, rng));
    store.add(hb + "mix_w1", init_weight(cfg.feature_count + 1, cfg.mixer_hidden, rng));
    store.add(hb + "mix_b1", Tensor::zeros({1, cfg.mixer_hidden}));
    store.add(hb + "mix_w2", init_weight(cfg.mixer_hidden, 1, rng));
    store.add(hb + "mix_b2", Tensor::zeros({1, 1}));
  }
  store.add(base + "wo", init_weight(cfg.d_model, cfg.d_model, rng));
  store.add(base + "bo", Tensor::zeros({1, cfg.d_model}));
  store.add(base + "ff_w1", init_weight(cfg.d_model, cfg.d_ff, rng));
  store.add(base + "ff_b1", Tensor::zeros({1, cfg.d_ff}));
  store.add(base + "ff_w2", init_weight(cfg.d_ff, cfg.d_model, rng));
  store.add(base + "ff_b2", Tensor::zeros({1, cfg.d_model}));
  store.add(base + "n1_g", Tensor::full({1, cfg.d_model}, 1));
  store.add(base + "n1_b", Tensor::zeros({1, cfg.d_model}));
  store.add(base + "n2_g", Tensor::full({1, cfg.d_model}, 1));
  store.add(base + "n2_b", Tensor::zeros({1, cfg.d_model}));
}

BlockIds resolve_block(const ParamStore& store, const std::string& base,
                       const EncoderConfig& cfg) {
  BlockIds ids;
  for (int h = 0; h < cfg.heads; ++h) {
    const std::string hb = base + "h" + std::to_string(h) + ".";
    ids.heads.push_back({store.index_of(hb + "wq"), store.index_of(hb + "wk"),
                         store.index_of(hb + "wv"), store.index_of(hb + "mix_w1"),
                         store.index_of(hb + "mix_b1"), store.index_of(hb + "mix_w2"),
                         store.index_of(hb + "mix_b2")});
  }
  ids.wo = store.index_of(base + "wo");
  ids.bo = store.index_of(base + "bo");
  ids.ff_w1 = store.index_of(base + "ff_w1");
  ids.ff_b1 = store.index_of(base + "ff_b1");
  ids.ff_w2 = store.index_of(base + "ff_w2");
  ids.ff_b2 = store.index_of(base + "ff_b2");
  ids.n1_g = store.index_of(base + "n1_g");
  ids.n1_b = store.index_of(base + "n1_b");
  ids.n2_g = store.index_of(base + "n2_g");
  ids.n2_b = store.index_of(base + "n2_b");
  return ids;
}

Var norm_affine(TapeParams& tp, Var x, double eps, int g, int b) {
  ad::Tape& t = tp.tape();
  return t.add_rowvec(t.mul_rowvec(t.instance_norm(x, eps), tp[g]), tp[b]);
}

Var apply_update_block(TapeParams& tp, const BlockIds& ids, const EncoderConfig& cfg, Var h_q,
                       Var h_kv, const std::vector<Var>& plane_cols) {
  ad::Tape& t = tp.tape();
  Var att = mixed_score_attention(tp, ids, cfg, h_q, h_kv, plane_cols);
  Var x1 = norm_affine(tp, t.add(h_q, att), cfg.norm_eps, ids.n1_g, ids.n1_b);
  Var ff = ad::mlp2(t, x1, tp[ids.ff_w1], tp[ids.ff_b1], tp[ids.ff_w2], tp[ids.ff_b2]);
  return norm_affine(tp, t.add(x1, ff), cfg.norm_eps, ids.n2_g, ids.n2_b);
}

}  // namespace

void build_encoder_params(ParamStore& store, const std::string& prefix, const EncoderConfig& cfg,
                          Rng& rng) {
  cfg.validate();
  if (cfg.init_a == InitScheme::LearnedPool)
    store.add(prefix + "pool_a", init_weight(cfg.pool_a, cfg.d_model, rng));
  if (cfg.init_b == InitScheme::LearnedPool)
    store.add(prefix + "pool_b", init_weight(cfg.pool_b, cfg.d_model, rng));
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string lb = prefix + "l" + std::to_string(l) + ".";
    if (cfg.share_update_fn) {
      build_block(store, lb + "u.", cfg, rng);
    } else {
      build_block(store, lb + "a.", cfg, rng);
      build_block(store, lb + "b.", cfg, rng);
    }
  }
}

EncoderIds resolve_encoder_ids(const ParamStore& store, const std::string& prefix,
                               const EncoderConfig& cfg) {
  EncoderIds ids;
  ids.pool_a = store.index_of(prefix + "pool_a");
  ids.pool_b = store.index_of(prefix + "pool_b");
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string lb = prefix + "l" + std::to_string(l) + ".";
    if (cfg.share_update_fn) {
      BlockIds u = resolve_block(store, lb + "u.", cfg);
      ids.block_a.push_back(u);
      ids.block_b.push_back(u);
    } else {
      ids.block_a.push_back(resolve_block(store, lb + "a.", cfg));
      ids.block_b.push_back(resolve_block(store, lb + "b.", cfg));
    }
  }
  return ids;
}

SideEmbedding initial_embeddings(TapeParams& tp, InitScheme scheme, int count, int pool_size,
                                 int pool_slot, int d_model, Rng& rng) {
  ad::Tape& t = tp.tape();
  SideEmbedding out;
  switch (scheme) {
    case InitScheme::Zeros:
      out.e = t.constant(Tensor::zeros({count, d_model}));
      break;
    case InitScheme::RandomVectors: {
      Tensor e = Tensor::zeros({count, d_model});
      for (auto& x : e.data) x = static_cast<real_t>(rng.uniform_real());
      out.e = t.constant(std::move(e));
      break;
    }
    case InitScheme::OneHotPool:
    case InitScheme::LearnedPool: {
      if (count > pool_size)
        throw std::invalid_argument("init_embeddings: " + std::to_string(count) +
                                    " nodes exceed pool capacity " + std::to_string(pool_size));
      std::vector<int> perm = rng.permutation(pool_size);
      out.assignment.assign(perm.begin(), perm.begin() + count);
      if (scheme == InitScheme::OneHotPool) {
        Tensor e = Tensor::zeros({count, d_model});
        for (int i = 0; i < count; ++i) e.at(i, out.assignment[static_cast<std::size_t>(i)]) = 1;
        out.e = t.constant(std::move(e));
      } else {
        std::vector<std::int32_t> rows(out.assignment.begin(), out.assignment.end());
        out.e = t.gather_rows(tp[pool_slot], std::move(rows));
      }
      break;
    }
  }
  return out;
}

std::vector<Var> flatten_planes(ad::Tape& tape, const DataMatrix& d, bool transposed) {
  std::vector<Var> cols;
  const std::int64_t rows = transposed ? d.cols : d.rows;
  const std::int64_t n = d.rows * d.cols;
  for (const auto& p : d.planes) {
    Tensor flat = Tensor::zeros({n, 1});
    if (!transposed) {
      flat.data = p.data;
    } else {
      for (std::int64_t i = 0; i < d.rows; ++i)
        for (std::int64_t j = 0; j < d.cols; ++j)
          flat.data[static_cast<std::size_t>(j * d.rows + i)] = p.at(i, j);
    }
    (void)rows;
    cols.push_back(tape.constant(std::move(flat)));
  }
  return cols;
}

Var mixed_score_attention(TapeParams& tp, const BlockIds& ids, const EncoderConfig& cfg,
                          Var h_q, Var h_kv, const std::vector<Var>& plane_cols) {
  ad::Tape& t = tp.tape();
  const std::int64_t n_q = t.value(h_q).rows();
  const std::int64_t n_kv = t.value(h_kv).rows();
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(cfg.d_head()));

  std::vector<Var> head_outs;
  head_outs.reserve(ids.heads.size());
  for (const HeadIds& h : ids.heads) {
    Var q = t.matmul(h_q, tp[h.wq]);
    Var k = t.matmul(h_kv, tp[h.wk]);
    Var v = t.matmul(h_kv, tp[h.wv]);
    Var score = t.scale(t.matmul_nt(q, k), inv_sqrt_dk);
    // Element-wise mix of the dot-product score with the relationship
    // entries, as one (n_q*n_kv) x (f+1) matrix through the head's MLP.
    std::vector<Var> mix_in;
    mix_in.push_back(t.reshape(score, {n_q * n_kv, 1}));
    for (Var pc : plane_cols) mix_in.push_back(pc);
    Var mixed = ad::mlp2(t, t.concat_cols(mix_in), tp[h.mix_w1], tp[h.mix_b1], tp[h.mix_w2],
                         tp[h.mix_b2]);
    Var clipped = t.softclip(t.reshape(mixed, {n_q, n_kv}), cfg.clip);
    Var attn = t.softmax(clipped);
    head_outs.push_back(t.matmul(attn, v));
  }
  Var cat = head_outs.size() == 1 ? head_outs[0] : t.concat_cols(head_outs);
  return t.add_rowvec(t.matmul(cat, tp[ids.wo]), tp[ids.bo]);
}

std::pair<Var, Var> encoder_layer(TapeParams& tp, const BlockIds& ids_a, const BlockIds& ids_b,
                                  const EncoderConfig& cfg, Var h_a, Var h_b,
                                  const std::vector<Var>& planes_q_a,
                                  const std::vector<Var>& planes_q_b, UpdateMode mode) {
  switch (mode) {
    case UpdateMode::Parallel: {
      Var a = apply_update_block(tp, ids_a, cfg, h_a, h_b, planes_q_a);
      Var b = apply_update_block(tp, ids_b, cfg, h_b, h_a, planes_q_b);
      return {a, b};
    }
    case UpdateMode::SeqAFirst: {
      Var a = apply_update_block(tp, ids_a, cfg, h_a, h_b, planes_q_a);
      Var b = apply_update_block(tp, ids_b, cfg, h_b, a, planes_q_b);
      return {a, b};
    }
    case UpdateMode::SeqBFirst: {
      Var b = apply_update_block(tp, ids_b, cfg, h_b, h_a, planes_q_b);
      Var a = apply_update_block(tp, ids_a, cfg, h_a, b, planes_q_a);
      return {a, b};
    }
  }
  throw std::logic_error("encoder_layer: bad update mode");
}

EncodeResult encode(TapeParams& tp, const EncoderIds& ids, const EncoderConfig& cfg,
                    const DataMatrix& d, Rng& rng) {
  cfg.validate();
  d.validate();
  ad::Tape& t = tp.tape();

  SideEmbedding ea = initial_embeddings(tp, cfg.init_a, static_cast<int>(d.rows), cfg.pool_a,
                                        ids.pool_a, cfg.d_model, rng);
  SideEmbedding eb = initial_embeddings(tp, cfg.init_b, static_cast<int>(d.cols), cfg.pool_b,
                                        ids.pool_b, cfg.d_model, rng);

  const std::vector<Var> planes_a = flatten_planes(t, d, false);
  const std::vector<Var> planes_b = flatten_planes(t, d, true);

  Var h_a = ea.e;
  Var h_b = eb.e;
  for (int l = 0; l < cfg.layers; ++l) {
    auto [na, nb] =
        encoder_layer(tp, ids.block_a[static_cast<std::size_t>(l)],
                      ids.block_b[static_cast<std::size_t>(l)], cfg, h_a, h_b, planes_a, planes_b,
                      cfg.update_mode);
    h_a = na;
    h_b = nb;
  }
  return {h_a, h_b, std::move(ea.assignment), std::move(eb.assignment)};
}

}  // namespace matnet
