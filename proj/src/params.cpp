#include "matnet/params.hpp"

#include <cmath>
#include <stdexcept>

namespace matnet {

int ParamStore::add(const std::string& name, Tensor value) {
  if (contains(name)) throw std::invalid_argument("ParamStore: duplicate parameter " + name);
  const int slot = count();
  names_.push_back(name);
  values_.push_back(std::move(value));
  index_[name] = slot;
  return slot;
}

int ParamStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

Tensor& ParamStore::value(const std::string& name) {
  const int slot = index_of(name);
  if (slot < 0) throw std::out_of_range("ParamStore: unknown parameter " + name);
  return values_[static_cast<std::size_t>(slot)];
}

const Tensor& ParamStore::value(const std::string& name) const {
  const int slot = index_of(name);
  if (slot < 0) throw std::out_of_range("ParamStore: unknown parameter " + name);
  return values_[static_cast<std::size_t>(slot)];
}

std::int64_t ParamStore::total_size() const {
  std::int64_t n = 0;
  for (const auto& t : values_) n += t.numel();
  return n;
}

Tensor init_weight(std::int64_t fan_in, std::int64_t fan_out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t = Tensor::zeros({fan_in, fan_out});
  for (auto& x : t.data) x = static_cast<real_t>(rng.uniform_range(-bound, bound));
  return t;
}

}  // namespace matnet
