#include "matnet/tape.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "matnet/kernels.hpp"

namespace matnet::ad {

namespace {
std::atomic<bool> g_finite_checks{
#ifdef NDEBUG
    false
#else
    true
#endif
};

[[noreturn]] void shape_error(Op op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op_name(op)) + ": shape mismatch " + a.shape_str() +
                              " vs " + b.shape_str());
}

[[noreturn]] void shape_error(Op op, const Tensor& a, const std::string& what) {
  throw std::invalid_argument(std::string(op_name(op)) + ": " + what + " for input " +
                              a.shape_str());
}
}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::MatMulNN: return "matmul";
    case Op::MatMulNT: return "matmul-nt";
    case Op::Add: return "add";
    case Op::AddRow: return "add-rowvec";
    case Op::MulRow: return "mul-rowvec";
    case Op::Scale: return "elementwise-scale";
    case Op::Relu: return "relu";
    case Op::Tanh: return "tanh";
    case Op::ConcatCols: return "concat";
    case Op::ConcatRows: return "concat-rows";
    case Op::SliceCols: return "slice-cols";
    case Op::MaskedSoftmax: return "masked-softmax";
    case Op::ColNorm: return "instance-normalize";
    case Op::Reshape: return "reshape";
    case Op::GatherRows: return "embedding-gather";
    case Op::Pick: return "pick";
    case Op::Log: return "log";
    case Op::SumAll: return "sum";
  }
  return "?";
}

void set_default_finite_checks(bool on) { g_finite_checks.store(on); }
bool default_finite_checks() { return g_finite_checks.load(); }

Var Tape::push(Node n) {
  bool rg = false;
  for (auto id : n.in) rg = rg || nodes_[static_cast<std::size_t>(id)].requires_grad;
  if (n.op == Op::Leaf)
    rg = grad_enabled && n.param_slot >= 0;
  n.requires_grad = rg;
  if (check_finite_ && n.op != Op::Leaf && !(n.ext ? *n.ext : n.value).all_finite())
    throw std::runtime_error(std::string(op_name(n.op)) + ": non-finite value produced");
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::param(const Tensor& external, int slot) {
  Node n;
  n.op = Op::Leaf;
  n.ext = &external;
  n.param_slot = slot;
  return push(std::move(n));
}

Var Tape::constant(Tensor value) {
  Node n;
  n.op = Op::Leaf;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::constant_view(const Tensor& external) {
  Node n;
  n.op = Op::Leaf;
  n.ext = &external;
  return push(std::move(n));
}

const Tensor& Tape::value(Var v) const { return val(v.id); }

Var Tape::matmul(Var a, Var b) {
  const Tensor& A = val(a.id);
  const Tensor& B = val(b.id);
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows()) shape_error(Op::MatMulNN, A, B);
  Node n;
  n.op = Op::MatMulNN;
  n.in = {a.id, b.id};
  n.value = Tensor::zeros({A.rows(), B.cols()});
  kernels::matmul_nn(A.data.data(), B.data.data(), n.value.data.data(), A.rows(), A.cols(),
                     B.cols());
  return push(std::move(n));
}

Var Tape::matmul_nt(Var a, Var b) {
  const Tensor& A = val(a.id);
  const Tensor& B = val(b.id);
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.cols()) shape_error(Op::MatMulNT, A, B);
  Node n;
  n.op = Op::MatMulNT;
  n.in = {a.id, b.id};
  n.value = Tensor::zeros({A.rows(), B.rows()});
  kernels::matmul_nt(A.data.data(), B.data.data(), n.value.data.data(), A.rows(), A.cols(),
                     B.rows());
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const Tensor& A = val(a.id);
  const Tensor& B = val(b.id);
  if (!A.same_shape(B)) shape_error(Op::Add, A, B);
  Node n;
  n.op = Op::Add;
  n.in = {a.id, b.id};
  n.value = A;
  for (std::size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] += B.data[i];
  return push(std::move(n));
}

Var Tape::add_rowvec(Var a, Var v) {
  const Tensor& A = val(a.id);
  const Tensor& V = val(v.id);
  if (A.rank() != 2 || V.rank() != 2 || V.rows() != 1 || V.cols() != A.cols())
    shape_error(Op::AddRow, A, V);
  Node n;
  n.op = Op::AddRow;
  n.in = {a.id, v.id};
  n.value = A;
  const std::int64_t rows = A.rows(), cols = A.cols();
  for (std::int64_t i = 0; i < rows; ++i)
    for (std::int64_t j = 0; j < cols; ++j) n.value.data[static_cast<std::size_t>(i * cols + j)] += V.data[static_cast<std::size_t>(j)];
  return push(std::move(n));
}

Var Tape::mul_rowvec(Var a, Var v) {
  const Tensor& A = val(a.id);
  const Tensor& V = val(v.id);
  if (A.rank() != 2 || V.rank() != 2 || V.rows() != 1 || V.cols() != A.cols())
    shape_error(Op::MulRow, A, V);
  Node n;
  n.op = Op::MulRow;
  n.in = {a.id, v.id};
  n.value = A;
  const std::int64_t rows = A.rows(), cols = A.cols();
  for (std::int64_t i = 0; i < rows; ++i)
    for (std::int64_t j = 0; j < cols; ++j) n.value.data[static_cast<std::size_t>(i * cols + j)] *= V.data[static_cast<std::size_t>(j)];
  return push(std::move(n));
}

Var Tape::scale(Var a, double c) {
  Node n;
  n.op = Op::Scale;
  n.in = {a.id};
  n.scalar = c;
  n.value = val(a.id);
  for (auto& x : n.value.data) x = static_cast<real_t>(x * c);
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  Node n;
  n.op = Op::Relu;
  n.in = {a.id};
  n.value = val(a.id);
  for (auto& x : n.value.data) x = x > 0 ? x : real_t{0};
  return push(std::move(n));
}

Var Tape::tanh_(Var a) {
  Node n;
  n.op = Op::Tanh;
  n.in = {a.id};
  n.value = val(a.id);
  for (auto& x : n.value.data) x = std::tanh(x);
  return push(std::move(n));
}

Var Tape::softclip(Var a, double c) { return scale(tanh_(scale(a, 1.0 / c)), c); }

Var Tape::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const std::int64_t rows = val(parts[0].id).rows();
  std::int64_t cols = 0;
  for (Var p : parts) {
    const Tensor& t = val(p.id);
    if (t.rank() != 2 || t.rows() != rows) shape_error(Op::ConcatCols, val(parts[0].id), t);
    cols += t.cols();
  }
  Node n;
  n.op = Op::ConcatCols;
  for (Var p : parts) n.in.push_back(p.id);
  n.value = Tensor::zeros({rows, cols});
  std::int64_t off = 0;
  for (Var p : parts) {
    const Tensor& t = val(p.id);
    for (std::int64_t i = 0; i < rows; ++i)
      for (std::int64_t j = 0; j < t.cols(); ++j) n.value.at(i, off + j) = t.at(i, j);
    off += t.cols();
  }
  return push(std::move(n));
}

Var Tape::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat-rows: no inputs");
  const std::int64_t cols = val(parts[0].id).cols();
  std::int64_t rows = 0;
  for (Var p : parts) {
    const Tensor& t = val(p.id);
    if (t.rank() != 2 || t.cols() != cols) shape_error(Op::ConcatRows, val(parts[0].id), t);
    rows += t.rows();
  }
  Node n;
  n.op = Op::ConcatRows;
  for (Var p : parts) n.in.push_back(p.id);
  n.value = Tensor::zeros({rows, cols});
  std::int64_t off = 0;
  for (Var p : parts) {
    const Tensor& t = val(p.id);
    for (std::int64_t i = 0; i < t.rows(); ++i)
      for (std::int64_t j = 0; j < cols; ++j) n.value.at(off + i, j) = t.at(i, j);
    off += t.rows();
  }
  return push(std::move(n));
}

Var Tape::slice_cols(Var a, std::int64_t offset, std::int64_t len) {
  const Tensor& A = val(a.id);
  if (A.rank() != 2 || offset < 0 || len <= 0 || offset + len > A.cols())
    shape_error(Op::SliceCols, A, "bad column range [" + std::to_string(offset) + "," +
                                      std::to_string(offset + len) + ")");
  Node n;
  n.op = Op::SliceCols;
  n.in = {a.id};
  n.idx = {static_cast<std::int32_t>(offset), static_cast<std::int32_t>(len)};
  n.value = Tensor::zeros({A.rows(), len});
  for (std::int64_t i = 0; i < A.rows(); ++i)
    for (std::int64_t j = 0; j < len; ++j) n.value.at(i, j) = A.at(i, offset + j);
  return push(std::move(n));
}

Var Tape::masked_softmax(Var a, Tensor mask) {
  const Tensor& A = val(a.id);
  if (A.rank() != 2) shape_error(Op::MaskedSoftmax, A, "rank != 2");
  const bool has_mask = !mask.empty();
  if (has_mask && !mask.same_shape(A)) shape_error(Op::MaskedSoftmax, A, mask);
  if (has_mask) {
    for (real_t m : mask.data)
      if (!(m == real_t{0} || (std::isinf(m) && m < 0)))
        throw std::invalid_argument("masked-softmax: mask values must be 0 or -inf");
  }
  Node n;
  n.op = Op::MaskedSoftmax;
  n.in = {a.id};
  n.aux = std::move(mask);
  n.value = Tensor::zeros({A.rows(), A.cols()});
  const std::int64_t rows = A.rows(), cols = A.cols();
  for (std::int64_t i = 0; i < rows; ++i) {
    real_t mx = -std::numeric_limits<real_t>::infinity();
    for (std::int64_t j = 0; j < cols; ++j) {
      if (has_mask && n.aux.at(i, j) != 0) continue;
      mx = std::max(mx, A.at(i, j));
    }
    if (!std::isfinite(mx))
      throw std::invalid_argument("masked-softmax: all entries masked in row " +
                                  std::to_string(i));
    real_t sum = 0;
    for (std::int64_t j = 0; j < cols; ++j) {
      if (has_mask && n.aux.at(i, j) != 0) continue;
      const real_t e = std::exp(A.at(i, j) - mx);
      n.value.at(i, j) = e;
      sum += e;
    }
    for (std::int64_t j = 0; j < cols; ++j) n.value.at(i, j) /= sum;
  }
  return push(std::move(n));
}

Var Tape::instance_norm(Var a, double eps) {
  const Tensor& A = val(a.id);
  if (A.rank() != 2) shape_error(Op::ColNorm, A, "rank != 2");
  Node n;
  n.op = Op::ColNorm;
  n.in = {a.id};
  n.scalar = eps;
  n.value = Tensor::zeros({A.rows(), A.cols()});
  const std::int64_t rows = A.rows(), cols = A.cols();
  for (std::int64_t j = 0; j < cols; ++j) {
    real_t mean = 0;
    for (std::int64_t i = 0; i < rows; ++i) mean += A.at(i, j);
    mean /= static_cast<real_t>(rows);
    real_t var = 0;
    for (std::int64_t i = 0; i < rows; ++i) {
      const real_t d = A.at(i, j) - mean;
      var += d * d;
    }
    var /= static_cast<real_t>(rows);
    const real_t inv = real_t{1} / std::sqrt(var + static_cast<real_t>(eps));
    for (std::int64_t i = 0; i < rows; ++i) n.value.at(i, j) = (A.at(i, j) - mean) * inv;
  }
  return push(std::move(n));
}

Var Tape::reshape(Var a, std::vector<std::int64_t> shape) {
  const Tensor& A = val(a.id);
  std::int64_t ne = 1;
  for (auto d : shape) ne *= d;
  if (shape.empty() || ne != A.numel())
    shape_error(Op::Reshape, A, "cannot reshape to " + matnet::shape_str(shape));
  Node n;
  n.op = Op::Reshape;
  n.in = {a.id};
  n.value = Tensor(std::move(shape), A.data);
  return push(std::move(n));
}

Var Tape::gather_rows(Var a, std::vector<std::int32_t> rows) {
  const Tensor& A = val(a.id);
  if (A.rank() != 2) shape_error(Op::GatherRows, A, "rank != 2");
  for (auto r : rows)
    if (r < 0 || r >= A.rows())
      shape_error(Op::GatherRows, A, "row index " + std::to_string(r) + " out of range");
  Node n;
  n.op = Op::GatherRows;
  n.in = {a.id};
  n.value = Tensor::zeros({static_cast<std::int64_t>(rows.size()), A.cols()});
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::int64_t j = 0; j < A.cols(); ++j)
      n.value.at(static_cast<std::int64_t>(i), j) = A.at(rows[i], j);
  n.idx = std::move(rows);
  return push(std::move(n));
}

Var Tape::pick(Var a, std::int64_t r, std::int64_t c) {
  const Tensor& A = val(a.id);
  if (A.rank() != 2 || r < 0 || r >= A.rows() || c < 0 || c >= A.cols())
    shape_error(Op::Pick, A, "index (" + std::to_string(r) + "," + std::to_string(c) + ")");
  Node n;
  n.op = Op::Pick;
  n.in = {a.id};
  n.idx = {static_cast<std::int32_t>(r), static_cast<std::int32_t>(c)};
  n.value = Tensor::scalar(A.at(r, c));
  return push(std::move(n));
}

Var Tape::log_(Var a) {
  Node n;
  n.op = Op::Log;
  n.in = {a.id};
  n.value = val(a.id);
  for (auto& x : n.value.data) x = std::log(x);
  return push(std::move(n));
}

Var Tape::sum_all(Var a) {
  Node n;
  n.op = Op::SumAll;
  n.in = {a.id};
  real_t s = 0;
  for (real_t x : val(a.id).data) s += x;
  n.value = Tensor::scalar(s);
  return push(std::move(n));
}

void Tape::backward(Var loss) {
  if (!grad_enabled) throw std::logic_error("backward: tape recorded with grad disabled");
  if (ran_backward_) throw std::logic_error("backward: already ran on this tape");
  const Tensor& L = val(loss.id);
  if (L.numel() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got " + L.shape_str());
  ran_backward_ = true;
  grads_.assign(nodes_.size(), Tensor{});

  auto grad_of = [&](std::int32_t id) -> Tensor& {
    Tensor& g = grads_[static_cast<std::size_t>(id)];
    if (g.empty()) g = Tensor::zeros(val(id).shape);
    return g;
  };

  grad_of(loss.id).data[0] = 1;

  for (std::int32_t id = static_cast<std::int32_t>(nodes_.size()) - 1; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad) continue;
    const Tensor& g = grads_[static_cast<std::size_t>(id)];
    if (g.empty()) continue;  // unreachable from the loss

    auto needs = [&](std::size_t k) {
      return nodes_[static_cast<std::size_t>(n.in[k])].requires_grad;
    };

    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::MatMulNN: {
        const Tensor& A = val(n.in[0]);
        const Tensor& B = val(n.in[1]);
        if (needs(0)) {
          Tensor tmp = Tensor::zeros({A.rows(), A.cols()});
          kernels::matmul_nt(g.data.data(), B.data.data(), tmp.data.data(), g.rows(), g.cols(),
                             B.rows());
          Tensor& da = grad_of(n.in[0]);
          for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] += tmp.data[i];
        }
        if (needs(1)) {
          Tensor tmp = Tensor::zeros({B.rows(), B.cols()});
          kernels::matmul_tn(A.data.data(), g.data.data(), tmp.data.data(), A.cols(), A.rows(),
                             g.cols());
          Tensor& db = grad_of(n.in[1]);
          for (std::size_t i = 0; i < db.data.size(); ++i) db.data[i] += tmp.data[i];
        }
        break;
      }
      case Op::MatMulNT: {
        const Tensor& A = val(n.in[0]);
        const Tensor& B = val(n.in[1]);
        if (needs(0)) {
          Tensor tmp = Tensor::zeros({A.rows(), A.cols()});
          kernels::matmul_nn(g.data.data(), B.data.data(), tmp.data.data(), g.rows(), g.cols(),
                             B.cols());
          Tensor& da = grad_of(n.in[0]);
          for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] += tmp.data[i];
        }
        if (needs(1)) {
          Tensor tmp = Tensor::zeros({B.rows(), B.cols()});
          kernels::matmul_tn(g.data.data(), A.data.data(), tmp.data.data(), g.cols(), g.rows(),
                             A.cols());
          Tensor& db = grad_of(n.in[1]);
          for (std::size_t i = 0; i < db.data.size(); ++i) db.data[i] += tmp.data[i];
        }
        break;
      }
      case Op::Add: {
        for (int k = 0; k < 2; ++k)
          if (needs(static_cast<std::size_t>(k))) {
            Tensor& d = grad_of(n.in[static_cast<std::size_t>(k)]);
            for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] += g.data[i];
          }
        break;
      }
      case Op::AddRow: {
        if (needs(0)) {
          Tensor& da = grad_of(n.in[0]);
          for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] += g.data[i];
        }
        if (needs(1)) {
          Tensor& dv = grad_of(n.in[1]);
          const std::int64_t rows = g.rows(), cols = g.cols();
          for (std::int64_t i = 0; i < rows; ++i)
            for (std::int64_t j = 0; j < cols; ++j) dv.data[static_cast<std::size_t>(j)] += g.at(i, j);
        }
        break;
      }
      case Op::MulRow: {
        const Tensor& A = val(n.in[0]);
        const Tensor& V = val(n.in[1]);
        const std::int64_t rows = g.rows(), cols = g.cols();
        if (needs(0)) {
          Tensor& da = grad_of(n.in[0]);
          for (std::int64_t i = 0; i < rows; ++i)
            for (std::int64_t j = 0; j < cols; ++j)
              da.at(i, j) += g.at(i, j) * V.data[static_cast<std::size_t>(j)];
        }
        if (needs(1)) {
          Tensor& dv = grad_of(n.in[1]);
          for (std::int64_t i = 0; i < rows; ++i)
            for (std::int64_t j = 0; j < cols; ++j)
              dv.data[static_cast<std::size_t>(j)] += g.at(i, j) * A.at(i, j);
        }
        break;
      }
      case Op::Scale: {
        if (needs(0)) {
          Tensor& da = grad_of(n.in[0]);
          for (std::size_t i = 0; i < da.data.size(); ++i)
            da.data[i] += static_cast<real_t>(g.data[i] * n.scalar);
        }
        break;
      }
      case Op::Relu: {
        if (needs(0)) {
          const Tensor& A = val(n.in[0]);
          Tensor& da = grad_of(n.in[0]);
          for (std::size_t i = 0; i < da.data.size(); ++i)
            if (A.data[i] > 0) da.data[i] += g.data[i];
        }
        break;
      }
      case Op::Tanh: {
        if (needs(0)) {
          Tensor& da = grad_of(n.in[0]);
          for (std::size_t i = 0; i < da.data.size(); ++i)
            da.data[i] += g.data[i] * (real_t{1} - n.value.data[i] * n.value.data[i]);
        }
        break;
      }
      case Op::ConcatCols: {
        std::int64_t off = 0;
        for (std::size_t k = 0; k < n.in.size(); ++k) {
          const Tensor& part = val(n.in[k]);
          if (needs(k)) {
            Tensor& d = grad_of(n.in[k]);
            for (std::int64_t i = 0; i < part.rows(); ++i)
              for (std::int64_t j = 0; j < part.cols(); ++j) d.at(i, j) += g.at(i, off + j);
          }
          off += part.cols();
        }
        break;
      }
      case Op::ConcatRows: {
        std::int64_t off = 0;
        for (std::size_t k = 0; k < n.in.size(); ++k) {
          const Tensor& part = val(n.in[k]);
          if (needs(k)) {
            Tensor& d = grad_of(n.in[k]);
            for (std::int64_t i = 0; i < part.rows(); ++i)
              for (std::int64_t j = 0; j < part.cols(); ++j) d.at(i, j) += g.at(off + i, j);
          }
          off += part.rows();
        }
        break;
      }
      case Op::SliceCols: {
        if (needs(0)) {
          Tensor& da = grad_of(n.in[0]);
          const std::int64_t off = n.idx[0], len = n.idx[1];
          for (std::int64_t i = 0; i < g.rows(); ++i)
            for (std::int64_t j = 0; j < len; ++j) da.at(i, off + j) += g.at(i, j);
        }
        break;
      }
      case Op::MaskedSoftmax: {
        if (needs(0)) {
          Tensor& da = grad_of(n.in[0]);
          const Tensor& y = n.value;
          for (std::int64_t i = 0; i < y.rows(); ++i) {
            real_t dot = 0;
            for (std::int64_t j = 0; j < y.cols(); ++j) dot += g.at(i, j) * y.at(i, j);
            for (std::int64_t j = 0; j < y.cols(); ++j)
              da.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
          }
        }
        break;
      }
      case Op::ColNorm: {
        if (needs(0)) {
          const Tensor& A = val(n.in[0]);
          Tensor& da = grad_of(n.in[0]);
          const Tensor& y = n.value;
          const std::int64_t rows = A.rows(), cols = A.cols();
          for (std::int64_t j = 0; j < cols; ++j) {
            real_t mean = 0;
            for (std::int64_t i = 0; i < rows; ++i) mean += A.at(i, j);
            mean /= static_cast<real_t>(rows);
            real_t var = 0;
            for (std::int64_t i = 0; i < rows; ++i) {
              const real_t d = A.at(i, j) - mean;
              var += d * d;
            }
            var /= static_cast<real_t>(rows);
            const real_t inv = real_t{1} / std::sqrt(var + static_cast<real_t>(n.scalar));
            real_t gmean = 0, gymean = 0;
            for (std::int64_t i = 0; i < rows; ++i) {
              gmean += g.at(i, j);
              gymean += g.at(i, j) * y.at(i, j);
            }
            gmean /= static_cast<real_t>(rows);
            gymean /= static_cast<real_t>(rows);
            for (std::int64_t i = 0; i < rows; ++i)
              da.at(i, j) += inv * (g.at(i, j) - gmean - y.at(i, j) * gymean);
          }
        }
        break;
      }
      case Op::Reshape: {
        if (needs(0)) {
          Tensor& da = grad_of(n.in[0]);
          for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] += g.data[i];
        }
        break;
      }
      case Op::GatherRows: {
        if (needs(0)) {
          Tensor& da = grad_of(n.in[0]);
          for (std::size_t i = 0; i < n.idx.size(); ++i)
            for (std::int64_t j = 0; j < g.cols(); ++j)
              da.at(n.idx[i], j) += g.at(static_cast<std::int64_t>(i), j);
        }
        break;
      }
      case Op::Pick: {
        if (needs(0)) grad_of(n.in[0]).at(n.idx[0], n.idx[1]) += g.data[0];
        break;
      }
      case Op::Log: {
        if (needs(0)) {
          const Tensor& A = val(n.in[0]);
          Tensor& da = grad_of(n.in[0]);
          for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] += g.data[i] / A.data[i];
        }
        break;
      }
      case Op::SumAll: {
        if (needs(0)) {
          Tensor& da = grad_of(n.in[0]);
          for (auto& x : da.data) x += g.data[0];
        }
        break;
      }
    }
  }
}

const Tensor* Tape::grad(Var v) const {
  if (!ran_backward_) return nullptr;
  const Tensor& g = grads_[static_cast<std::size_t>(v.id)];
  return g.empty() ? nullptr : &g;
}

void Tape::add_param_grads(std::vector<Tensor>& out, double scale) const {
  if (!ran_backward_) throw std::logic_error("add_param_grads: backward has not run");
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const Node& n = nodes_[id];
    if (n.op != Op::Leaf || n.param_slot < 0) continue;
    const auto slot = static_cast<std::size_t>(n.param_slot);
    if (out.size() <= slot) out.resize(slot + 1);
    if (out[slot].empty()) out[slot] = Tensor::zeros(val(static_cast<std::int32_t>(id)).shape);
    const Tensor& g = grads_[id];
    if (g.empty()) continue;  // parameter not reached by this loss
    if (!out[slot].same_shape(g))
      throw std::logic_error("add_param_grads: slot shape mismatch");
    for (std::size_t i = 0; i < g.data.size(); ++i)
      out[slot].data[i] += static_cast<real_t>(g.data[i] * scale);
  }
}

void Tape::check_node(const Node&) const {}

Var mlp2(Tape& t, Var x, Var w1, Var b1, Var w2, Var b2) {
  Var hidden = t.relu(t.add_rowvec(t.matmul(x, w1), b1));
  return t.add_rowvec(t.matmul(hidden, w2), b2);
}

}  // namespace matnet::ad
