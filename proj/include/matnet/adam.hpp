#pragma once

#include <cstdint>
#include <vector>

#include "matnet/params.hpp"
#include "matnet/tensor.hpp"

namespace matnet {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment tensors shaped like the parameters; step counter
// drives bias correction.
struct AdamState {
  AdamConfig cfg;
  std::int64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  static AdamState init(const ParamStore& params, AdamConfig cfg);
};

// Standard Adam update with bias correction. Gradients must be finite
// and cover every parameter slot (empty gradient -> error naming it).
void adam_step(AdamState& state, ParamStore& params, const std::vector<Tensor>& grads);

}  // namespace matnet
