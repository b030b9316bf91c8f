#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "matnet/rng.hpp"
#include "matnet/tensor.hpp"

namespace matnet {

// Named parameter tensors in a fixed insertion order. The slot index is
// the canonical parameter id used for gradient reduction, Adam moments
// and checkpoint records, so creation order must be deterministic.
class ParamStore {
 public:
  int add(const std::string& name, Tensor value);
  int index_of(const std::string& name) const;  // -1 when absent
  bool contains(const std::string& name) const { return index_of(name) >= 0; }

  int count() const { return static_cast<int>(values_.size()); }
  const std::string& name(int slot) const { return names_[static_cast<std::size_t>(slot)]; }
  Tensor& value(int slot) { return values_[static_cast<std::size_t>(slot)]; }
  const Tensor& value(int slot) const { return values_[static_cast<std::size_t>(slot)]; }
  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;

  std::int64_t total_size() const;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::unordered_map<std::string, int> index_;
};

// Weight initialization: uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)).
Tensor init_weight(std::int64_t fan_in, std::int64_t fan_out, Rng& rng);

}  // namespace matnet
