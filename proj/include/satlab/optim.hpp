#pragma once

#include <cstdint>
#include <vector>

#include "satlab/tensor.hpp"

namespace satlab {

// Adaptive-moment optimizer state; accumulator shapes mirror the parameters.
struct OptimizerState {
  std::vector<Tensor> m;  // first moments
  std::vector<Tensor> v;  // second moments
  int64_t step = 0;
  double lr = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void init(const std::vector<Tensor*>& params);
};

// One bias-corrected adaptive-moment update; params mutated in place.
void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               OptimizerState& state);

}  // namespace satlab
