#pragma once

#include <string>
#include <vector>

#include "matnet/encoder.hpp"

namespace matnet {

struct DecoderConfig {
  int d_model = 256;
  int heads = 16;
  int query_input = 512;  // 2*d_model for the tour query, d_model for a machine query
  double clip = 10.0;
  bool has_skip = false;  // adds one learnable candidate row

  int d_head() const { return d_model / heads; }
  void validate() const;
};

struct DecoderIds {
  int wq;         // query_input x d_model; sliced per head
  int wk, wv;     // d_model x d_model; sliced per head
  int wc, bc;     // multi-head combine
  int wsk;        // single-head key projection
  int skip = -1;  // learnable skip embedding row (optional)
};

void build_decoder_params(ParamStore& store, const std::string& prefix, const DecoderConfig& cfg,
                          Rng& rng);
DecoderIds resolve_decoder_ids(const ParamStore& store, const std::string& prefix,
                               const DecoderConfig& cfg);

// Per-candidate projections computed once per encoding and reused at
// every step. Rows align with the candidate order (skip last).
struct KvCache {
  std::vector<ad::Var> k_heads;
  std::vector<ad::Var> v_heads;
  ad::Var single_keys;
  int candidates = 0;
};

// h_candidates: (n x d_model). When the decoder has a skip row it is
// appended as candidate index n.
KvCache precompute_kv(TapeParams& tp, const DecoderIds& ids, const DecoderConfig& cfg,
                      ad::Var h_candidates);

// [h_first ; h_current] -> projected query (1 x d_model).
ad::Var make_query_atsp(TapeParams& tp, const DecoderIds& ids, ad::Var h_a, int first_city,
                        int current_city);
// Single-row query (machine embedding) -> projected query.
ad::Var make_query_row(TapeParams& tp, const DecoderIds& ids, ad::Var h_rows, int row);

// Masked multi-head attention then the clipped single-head probability
// output. mask[i] must be 0 (allowed) or -inf (forbidden), with at
// least one entry allowed. Returns a (1 x candidates) probability row.
ad::Var decode_step(TapeParams& tp, const DecoderIds& ids, const DecoderConfig& cfg, ad::Var query,
                    const KvCache& cache, const std::vector<real_t>& mask);

// Action selection over a probability row. Greedy breaks ties toward
// the lowest index; sampling inverts the CDF with one uniform draw.
int greedy_pick(const std::vector<real_t>& probs);
int sample_pick(const std::vector<real_t>& probs, Rng& rng);

}  // namespace matnet
