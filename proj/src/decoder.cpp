#include "matnet/decoder.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace matnet {

using ad::Var;

void DecoderConfig::validate() const {
  if (heads < 1 || d_model < 1 || d_model % heads != 0)
    throw std::invalid_argument("decoder: d_model must be a positive multiple of heads");
  if (query_input < 1) throw std::invalid_argument("decoder: query_input must be >= 1");
}

void build_decoder_params(ParamStore& store, const std::string& prefix, const DecoderConfig& cfg,
                          Rng& rng) {
  cfg.validate();
  store.add(prefix + "wq", init_weight(cfg.query_input, cfg.d_model, rng));
  store.add(prefix + "wk", init_weight(cfg.d_model, cfg.d_model, rng));
  store.add(prefix + "wv", init_weight(cfg.d_model, cfg.d_model, rng));
  store.add(prefix + "wc", init_weight(cfg.d_model, cfg.d_model, rng));
  store.add(prefix + "bc", Tensor::zeros({1, cfg.d_model}));
  store.add(prefix + "wsk", init_weight(cfg.d_model, cfg.d_model, rng));
  if (cfg.has_skip) store.add(prefix + "skip", init_weight(1, cfg.d_model, rng));
}

DecoderIds resolve_decoder_ids(const ParamStore& store, const std::string& prefix,
                               const DecoderConfig& cfg) {
  DecoderIds ids;
  ids.wq = store.index_of(prefix + "wq");
  ids.wk = store.index_of(prefix + "wk");
  ids.wv = store.index_of(prefix + "wv");
  ids.wc = store.index_of(prefix + "wc");
  ids.bc = store.index_of(prefix + "bc");
  ids.wsk = store.index_of(prefix + "wsk");
  ids.skip = cfg.has_skip ? store.index_of(prefix + "skip") : -1;
  return ids;
}

KvCache precompute_kv(TapeParams& tp, const DecoderIds& ids, const DecoderConfig& cfg,
                      ad::Var h_candidates) {
  ad::Tape& t = tp.tape();
  Var rows = h_candidates;
  if (cfg.has_skip) {
    const Var parts[] = {h_candidates, tp[ids.skip]};
    rows = t.concat_rows(parts);
  }
  KvCache cache;
  cache.candidates = static_cast<int>(t.value(rows).rows());
  Var k_full = t.matmul(rows, tp[ids.wk]);
  Var v_full = t.matmul(rows, tp[ids.wv]);
  const int dk = cfg.d_head();
  for (int h = 0; h < cfg.heads; ++h) {
    cache.k_heads.push_back(t.slice_cols(k_full, static_cast<std::int64_t>(h) * dk, dk));
    cache.v_heads.push_back(t.slice_cols(v_full, static_cast<std::int64_t>(h) * dk, dk));
  }
  cache.single_keys = t.matmul(rows, tp[ids.wsk]);
  return cache;
}

Var make_query_atsp(TapeParams& tp, const DecoderIds& ids, ad::Var h_a, int first_city,
                    int current_city) {
  ad::Tape& t = tp.tape();
  const std::int64_t d_model = t.value(h_a).cols();
  Var pair = t.gather_rows(h_a, {first_city, current_city});
  return t.matmul(t.reshape(pair, {1, 2 * d_model}), tp[ids.wq]);
}

Var make_query_row(TapeParams& tp, const DecoderIds& ids, ad::Var h_rows, int row) {
  ad::Tape& t = tp.tape();
  return t.matmul(t.gather_rows(h_rows, {row}), tp[ids.wq]);
}

Var decode_step(TapeParams& tp, const DecoderIds& ids, const DecoderConfig& cfg, ad::Var query,
                const KvCache& cache, const std::vector<real_t>& mask) {
  ad::Tape& t = tp.tape();
  if (static_cast<int>(mask.size()) != cache.candidates)
    throw std::invalid_argument("decode_step: mask size " + std::to_string(mask.size()) +
                                " != candidates " + std::to_string(cache.candidates));
  bool any_allowed = false;
  for (real_t m : mask) any_allowed = any_allowed || m == 0;
  if (!any_allowed) throw std::invalid_argument("decode_step: all candidates masked");

  Tensor mask_row = Tensor::row(std::vector<real_t>(mask.begin(), mask.end()));
  const int dk = cfg.d_head();
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

  std::vector<Var> head_outs;
  head_outs.reserve(cache.k_heads.size());
  for (std::size_t h = 0; h < cache.k_heads.size(); ++h) {
    Var q = t.slice_cols(query, static_cast<std::int64_t>(h) * dk, dk);
    Var logits = t.scale(t.matmul_nt(q, cache.k_heads[h]), inv_sqrt_dk);
    Var attn = t.masked_softmax(logits, mask_row);
    head_outs.push_back(t.matmul(attn, cache.v_heads[h]));
  }
  Var cat = head_outs.size() == 1 ? head_outs[0] : t.concat_cols(head_outs);
  Var glimpse = t.add_rowvec(t.matmul(cat, tp[ids.wc]), tp[ids.bc]);

  const double inv_sqrt_dm = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
  Var scores = t.softclip(t.scale(t.matmul_nt(glimpse, cache.single_keys), inv_sqrt_dm), cfg.clip);
  return t.masked_softmax(scores, std::move(mask_row));
}

int greedy_pick(const std::vector<real_t>& probs) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(probs.size()); ++i)
    if (probs[static_cast<std::size_t>(i)] > probs[static_cast<std::size_t>(best)]) best = i;
  return best;
}

int sample_pick(const std::vector<real_t>& probs, Rng& rng) {
  const double u = rng.uniform_real();
  double cum = 0;
  int last_positive = -1;
  for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
    const real_t p = probs[static_cast<std::size_t>(i)];
    if (p <= 0) continue;
    last_positive = i;
    cum += p;
    if (u < cum) return i;
  }
  if (last_positive < 0) throw std::logic_error("sample_pick: no positive probability");
  return last_positive;  // u landed in the rounding tail
}

}  // namespace matnet
