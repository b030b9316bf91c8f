#pragma once

// Central finite-difference oracle used by the gradient tests. Kept
// independent of the tape's backward pass: it only reruns forward
// evaluations under point perturbations of the parameter store.
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "matnet/encoder.hpp"
#include "matnet/params.hpp"
#include "matnet/tape.hpp"

namespace gradcheck {

using BuildFn = std::function<matnet::ad::Var(matnet::ad::Tape&, matnet::TapeParams&)>;

struct Result {
  double max_rel_err = 0;
  std::string worst;
  int checked = 0;
};

inline double eval(matnet::ParamStore& store, const BuildFn& build) {
  matnet::ad::Tape tape;
  matnet::TapeParams tp(tape, store);
  matnet::ad::Var loss = build(tape, tp);
  return static_cast<double>(tape.value(loss).data[0]);
}

inline Result check(matnet::ParamStore& store, const BuildFn& build, double h = 1e-5) {
  matnet::ad::Tape tape;
  matnet::TapeParams tp(tape, store);
  matnet::ad::Var loss = build(tape, tp);
  tape.backward(loss);
  std::vector<matnet::Tensor> grads;
  tape.add_param_grads(grads);
  grads.resize(static_cast<std::size_t>(store.count()));

  Result res;
  for (int slot = 0; slot < store.count(); ++slot) {
    matnet::Tensor& p = store.value(slot);
    const matnet::Tensor& g = grads[static_cast<std::size_t>(slot)];
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      const double saved = p.data[i];
      p.data[i] = static_cast<matnet::real_t>(saved + h);
      const double fp = eval(store, build);
      p.data[i] = static_cast<matnet::real_t>(saved - h);
      const double fm = eval(store, build);
      p.data[i] = static_cast<matnet::real_t>(saved);
      const double fd = (fp - fm) / (2 * h);
      const double adv = g.empty() ? 0.0 : static_cast<double>(g.data[i]);
      const double rel = std::abs(adv - fd) / std::max({std::abs(adv), std::abs(fd), 1e-4});
      ++res.checked;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst = store.name(slot) + "[" + std::to_string(i) + "] ad=" + std::to_string(adv) +
                    " fd=" + std::to_string(fd);
      }
    }
  }
  return res;
}

}  // namespace gradcheck
