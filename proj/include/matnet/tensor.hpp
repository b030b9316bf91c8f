#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matnet/real.hpp"

namespace matnet {

// Dense row-major tensor. MatNet only needs rank 1 and 2 in practice;
// higher ranks are representable but no kernel requires them.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<real_t> data;

  Tensor() = default;
  Tensor(std::vector<std::int64_t> s, std::vector<real_t> d);

  static Tensor zeros(std::vector<std::int64_t> shape);
  static Tensor full(std::vector<std::int64_t> shape, real_t value);
  static Tensor scalar(real_t value);
  static Tensor row(std::vector<real_t> values);          // 1 x n
  static Tensor matrix(std::int64_t rows, std::int64_t cols, std::vector<real_t> values);

  std::int64_t numel() const;
  bool empty() const { return data.empty(); }
  int rank() const { return static_cast<int>(shape.size()); }

  // Rank-2 accessors.
  std::int64_t rows() const;
  std::int64_t cols() const;
  real_t& at(std::int64_t i, std::int64_t j);
  real_t at(std::int64_t i, std::int64_t j) const;

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;
  std::string shape_str() const;
};

std::string shape_str(const std::vector<std::int64_t>& shape);

}  // namespace matnet
