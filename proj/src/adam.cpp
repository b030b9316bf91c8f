#include "matnet/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace matnet {

AdamState AdamState::init(const ParamStore& params, AdamConfig cfg) {
  AdamState s;
  s.cfg = cfg;
  s.m.reserve(static_cast<std::size_t>(params.count()));
  s.v.reserve(static_cast<std::size_t>(params.count()));
  for (int i = 0; i < params.count(); ++i) {
    s.m.push_back(Tensor::zeros(params.value(i).shape));
    s.v.push_back(Tensor::zeros(params.value(i).shape));
  }
  return s;
}

void adam_step(AdamState& state, ParamStore& params, const std::vector<Tensor>& grads) {
  if (static_cast<int>(grads.size()) != params.count() ||
      static_cast<int>(state.m.size()) != params.count())
    throw std::invalid_argument("adam_step: gradient/state count mismatch");
  state.step += 1;
  const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (int slot = 0; slot < params.count(); ++slot) {
    const Tensor& g = grads[static_cast<std::size_t>(slot)];
    if (g.empty())
      throw std::invalid_argument("adam_step: missing gradient for " + params.name(slot));
    Tensor& p = params.value(slot);
    if (!g.same_shape(p))
      throw std::invalid_argument("adam_step: gradient shape mismatch for " + params.name(slot));
    for (real_t x : g.data)
      if (!std::isfinite(x))
        throw std::invalid_argument("adam_step: non-finite gradient for " + params.name(slot));
    Tensor& m = state.m[static_cast<std::size_t>(slot)];
    Tensor& v = state.v[static_cast<std::size_t>(slot)];
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      m.data[i] = static_cast<real_t>(b1 * m.data[i] + (1.0 - b1) * g.data[i]);
      v.data[i] = static_cast<real_t>(b2 * v.data[i] + (1.0 - b2) * g.data[i] * g.data[i]);
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      p.data[i] -= static_cast<real_t>(state.cfg.lr * mhat / (std::sqrt(vhat) + state.cfg.eps));
    }
  }
}

}  // namespace matnet
