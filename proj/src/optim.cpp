#include "satlab/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace satlab {

void OptimizerState::init(const std::vector<Tensor*>& params) {
  m.clear();
  v.clear();
  for (const Tensor* p : params) {
    m.push_back(Tensor::zeros(p->rows, p->cols));
    v.push_back(Tensor::zeros(p->rows, p->cols));
  }
  step = 0;
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               OptimizerState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: param/grad/state count mismatch");
  ++state.step;
  double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    if (!p.same_shape(g))
      throw std::invalid_argument("adam_step: shape mismatch " + p.shape_str() + " vs " + g.shape_str());
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (size_t k = 0; k < p.data.size(); ++k) {
      m.data[k] = state.beta1 * m.data[k] + (1.0 - state.beta1) * g.data[k];
      v.data[k] = state.beta2 * v.data[k] + (1.0 - state.beta2) * g.data[k] * g.data[k];
      double mhat = m.data[k] / bc1;
      double vhat = v.data[k] / bc2;
      p.data[k] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace satlab
