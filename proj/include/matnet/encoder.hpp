#pragma once

#include <string>
#include <utility>
#include <vector>

#include "matnet/params.hpp"
#include "matnet/rng.hpp"
#include "matnet/tape.hpp"

namespace matnet {

// Creates (and caches) one tape leaf per parameter slot so that a
// parameter used many times accumulates its gradient on a single node.
class TapeParams {
 public:
  TapeParams(ad::Tape& tape, const ParamStore& store)
      : tape_(&tape), store_(&store), cache_(static_cast<std::size_t>(store.count())) {}

  ad::Var operator[](int slot) {
    auto& v = cache_[static_cast<std::size_t>(slot)];
    if (!v.valid()) v = tape_->param(store_->value(slot), slot);
    return v;
  }

  ad::Tape& tape() { return *tape_; }

 private:
  ad::Tape* tape_;
  const ParamStore* store_;
  std::vector<ad::Var> cache_;
};

enum class InitScheme { Zeros, OneHotPool, RandomVectors, LearnedPool };
enum class UpdateMode { Parallel, SeqAFirst, SeqBFirst };

InitScheme init_scheme_from_string(const std::string& s);
std::string to_string(InitScheme s);
UpdateMode update_mode_from_string(const std::string& s);
std::string to_string(UpdateMode m);

struct EncoderConfig {
  int layers = 5;
  int d_model = 256;
  int heads = 16;
  int d_ff = 516;            // kept as configured; override freely
  int feature_count = 1;     // number of relationship matrices (f)
  int mixer_hidden = 16;
  double clip = 10.0;        // soft-clip bound on mixed scores
  double norm_eps = 1e-5;
  UpdateMode update_mode = UpdateMode::Parallel;
  bool share_update_fn = false;
  InitScheme init_a = InitScheme::Zeros;
  InitScheme init_b = InitScheme::OneHotPool;
  int pool_a = 0;  // pool capacity when side A uses a pooled scheme
  int pool_b = 0;

  int d_head() const { return d_model / heads; }  // d_q = d_k = d_v
  void validate() const;
};

// The M x N relationship matrix stack fed to the encoder. Values are
// expected pre-scaled to an O(1) range by the domain adapter.
struct DataMatrix {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<Tensor> planes;

  static DataMatrix single(Tensor plane);
  void validate() const;
};

struct HeadIds {
  int wq, wk, wv;
  int mix_w1, mix_b1, mix_w2, mix_b2;
};

struct BlockIds {
  std::vector<HeadIds> heads;
  int wo, bo;
  int ff_w1, ff_b1, ff_w2, ff_b2;
  int n1_g, n1_b, n2_g, n2_b;
};

struct EncoderIds {
  std::vector<BlockIds> block_a;  // per layer
  std::vector<BlockIds> block_b;  // aliases block_a when sharing one update fn
  int pool_a = -1;
  int pool_b = -1;
};

void build_encoder_params(ParamStore& store, const std::string& prefix, const EncoderConfig& cfg,
                          Rng& rng);
EncoderIds resolve_encoder_ids(const ParamStore& store, const std::string& prefix,
                               const EncoderConfig& cfg);

struct SideEmbedding {
  ad::Var e;
  std::vector<int> assignment;  // pool indices (pooled schemes only)
};

// Initial rows for one node set. Pooled schemes draw `count` distinct
// pool indices without replacement, uniformly at random.
SideEmbedding initial_embeddings(TapeParams& tp, InitScheme scheme, int count, int pool_size,
                                 int pool_slot, int d_model, Rng& rng);

// Flattened column view of each plane: entry (i,j) lands at row i*cols+j
// (or j*rows+i when transposed), matching a reshaped score matrix.
std::vector<ad::Var> flatten_planes(ad::Tape& tape, const DataMatrix& d, bool transposed);

// One multi-head mixed-score attention + combine. h_q: (n_q x d_model),
// h_kv: (n_kv x d_model), plane_cols: f flattened (n_q*n_kv x 1) consts.
ad::Var mixed_score_attention(TapeParams& tp, const BlockIds& ids, const EncoderConfig& cfg,
                              ad::Var h_q, ad::Var h_kv, const std::vector<ad::Var>& plane_cols);

// One dual graph-attentional layer.
std::pair<ad::Var, ad::Var> encoder_layer(TapeParams& tp, const BlockIds& ids_a,
                                          const BlockIds& ids_b, const EncoderConfig& cfg,
                                          ad::Var h_a, ad::Var h_b,
                                          const std::vector<ad::Var>& planes_q_a,
                                          const std::vector<ad::Var>& planes_q_b,
                                          UpdateMode mode);

struct EncodeResult {
  ad::Var h_a, h_b;
  std::vector<int> assignment_a, assignment_b;
};

EncodeResult encode(TapeParams& tp, const EncoderIds& ids, const EncoderConfig& cfg,
                    const DataMatrix& d, Rng& rng);

}  // namespace matnet
