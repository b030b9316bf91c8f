#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "matnet/tensor.hpp"

namespace matnet::ad {

// Reverse-mode autodiff over a recorded op list. One tape per
// instance/rollout; a tape is single-threaded by contract. Parameters
// enter as leaf views into external storage so loading them is free;
// gradients come back keyed by the leaf's parameter slot.
enum class Op : std::uint8_t {
  Leaf,
  MatMulNN,
  MatMulNT,
  Add,
  AddRow,
  MulRow,
  Scale,
  Relu,
  Tanh,
  ConcatCols,
  ConcatRows,
  SliceCols,
  MaskedSoftmax,
  ColNorm,
  Reshape,
  GatherRows,
  Pick,
  Log,
  SumAll,
};

const char* op_name(Op op);

struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Process-wide default for the NaN/Inf guard; tapes snapshot it at
// construction. On by default in debug builds.
void set_default_finite_checks(bool on);
bool default_finite_checks();

class Tape {
 public:
  Tape() : check_finite_(default_finite_checks()) {}

  // When false, parameter leaves are recorded as constants and
  // backward() refuses to run. Forward values are unaffected.
  bool grad_enabled = true;

  Var param(const Tensor& external, int slot);
  Var constant(Tensor value);
  Var constant_view(const Tensor& external);

  Var matmul(Var a, Var b);      // A(m,k)*B(k,n)
  Var matmul_nt(Var a, Var b);   // A(m,k)*B(n,k)^T
  Var add(Var a, Var b);
  Var add_rowvec(Var a, Var v);  // (m,n) + (1,n)
  Var mul_rowvec(Var a, Var v);
  Var scale(Var a, double c);
  Var relu(Var a);
  Var tanh_(Var a);
  // c * tanh(x / c); the soft clip used before softmax stages.
  Var softclip(Var a, double c);
  Var concat_cols(std::span<const Var> parts);
  Var concat_rows(std::span<const Var> parts);
  Var slice_cols(Var a, std::int64_t offset, std::int64_t len);
  // Row-wise softmax after adding a {0, -inf} mask. Empty mask = no mask.
  // The mask must leave at least one entry per row unmasked.
  Var masked_softmax(Var a, Tensor mask);
  Var softmax(Var a) { return masked_softmax(a, Tensor{}); }
  // Per-column normalization over rows: (x - mean) / sqrt(var + eps).
  Var instance_norm(Var a, double eps);
  Var reshape(Var a, std::vector<std::int64_t> shape);
  Var gather_rows(Var a, std::vector<std::int32_t> rows);
  Var pick(Var a, std::int64_t r, std::int64_t c);  // 1x1
  Var log_(Var a);
  Var sum_all(Var a);

  const Tensor& value(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // Reverse pass from a scalar loss. May be called once per tape.
  void backward(Var loss);
  // Gradient of a node (null when unreachable or not yet computed).
  const Tensor* grad(Var v) const;
  // Adds every parameter-leaf gradient into out[slot]; missing entries
  // are created zero-shaped like the parameter. Unreached params stay
  // zero. `scale` multiplies contributions (for 1/batch averaging).
  void add_param_grads(std::vector<Tensor>& out, double scale = 1.0) const;

 private:
  struct Node {
    Op op = Op::Leaf;
    bool requires_grad = false;
    std::vector<std::int32_t> in;
    Tensor value;               // owned unless ext != nullptr
    const Tensor* ext = nullptr;
    double scalar = 0.0;        // Scale factor / norm eps
    std::vector<std::int32_t> idx;  // GatherRows rows; Pick (r,c); SliceCols (off,len)
    Tensor aux;                 // MaskedSoftmax mask
    int param_slot = -1;
  };

  const Tensor& val(std::int32_t id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.ext ? *n.ext : n.value;
  }
  Var push(Node n);
  void check_node(const Node& n) const;

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  bool ran_backward_ = false;
  bool check_finite_;
};

// Convenience: hidden = relu(x*W1 + b1); out = hidden*W2 + b2.
Var mlp2(Tape& t, Var x, Var w1, Var b1, Var w2, Var b2);

}  // namespace matnet::ad
