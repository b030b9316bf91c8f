#include "matnet/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace matnet {

Tensor::Tensor(std::vector<std::int64_t> s, std::vector<real_t> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (numel() != static_cast<std::int64_t>(data.size()))
    throw std::invalid_argument("Tensor: shape " + shape_str() + " does not match " +
                                std::to_string(data.size()) + " values");
}

Tensor Tensor::zeros(std::vector<std::int64_t> shape) {
  Tensor t;
  t.shape = std::move(shape);
  t.data.assign(static_cast<std::size_t>(t.numel()), real_t{0});
  return t;
}

Tensor Tensor::full(std::vector<std::int64_t> shape, real_t value) {
  Tensor t = zeros(std::move(shape));
  for (auto& x : t.data) x = value;
  return t;
}

Tensor Tensor::scalar(real_t value) { return Tensor({1, 1}, {value}); }

Tensor Tensor::row(std::vector<real_t> values) {
  const auto n = static_cast<std::int64_t>(values.size());
  return Tensor({1, n}, std::move(values));
}

Tensor Tensor::matrix(std::int64_t rows, std::int64_t cols, std::vector<real_t> values) {
  return Tensor({rows, cols}, std::move(values));
}

std::int64_t Tensor::numel() const {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

std::int64_t Tensor::rows() const {
  if (rank() != 2) throw std::logic_error("Tensor::rows: rank != 2");
  return shape[0];
}

std::int64_t Tensor::cols() const {
  if (rank() != 2) throw std::logic_error("Tensor::cols: rank != 2");
  return shape[1];
}

real_t& Tensor::at(std::int64_t i, std::int64_t j) {
  return data[static_cast<std::size_t>(i * cols() + j)];
}

real_t Tensor::at(std::int64_t i, std::int64_t j) const {
  return data[static_cast<std::size_t>(i * cols() + j)];
}

bool Tensor::all_finite() const {
  for (real_t x : data)
    if (!std::isfinite(x)) return false;
  return true;
}

std::string Tensor::shape_str() const { return matnet::shape_str(shape); }

std::string shape_str(const std::vector<std::int64_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  s += ")";
  return s;
}

}  // namespace matnet
