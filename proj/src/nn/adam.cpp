#include "fv/nn/adam.hpp"

#include <cmath>

namespace fv::nn {

void adam_step(const std::vector<ParamSlot>& params, AdamState& state) {
  if (params.empty()) throw ParamError("adam_step: empty parameter list");
  if (!(state.lr >= 0.f)) throw ParamError("adam_step: lr must be non-negative");
  if (state.beta1 < 0.f || state.beta1 >= 1.f || state.beta2 < 0.f || state.beta2 >= 1.f)
    throw ParamError("adam_step: betas must lie in [0, 1)");
  if (!(state.eps > 0.f)) throw ParamError("adam_step: eps must be positive");

  if (state.m.empty() && state.v.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      const std::size_t n = static_cast<std::size_t>(params[i].tensor->numel());
      state.m[i].assign(n, 0.f);
      state.v[i].assign(n, 0.f);
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw ParamError("adam_step: state buffers do not match parameter list");

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor* t = params[i].tensor;
    if (t == nullptr) throw ParamError("adam_step: null parameter " + params[i].name);
    const std::size_t n = static_cast<std::size_t>(t->numel());
    if (!t->has_grad())
      throw ParamError("adam_step: parameter " + params[i].name + " has no gradient");
    if (state.m[i].size() != n || state.v[i].size() != n)
      throw ParamError("adam_step: moment buffers for " + params[i].name +
                       " do not match its shape");
    const float* g = t->grad();
    for (std::size_t j = 0; j < n; ++j)
      if (!std::isfinite(g[j]))
        throw NumericError("adam_step: non-finite gradient in " + params[i].name +
                           ", state left untouched");
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(static_cast<double>(state.beta1), static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(static_cast<double>(state.beta2), static_cast<double>(state.step));
  const float b1 = state.beta1;
  const float b2 = state.beta2;

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor* t = params[i].tensor;
    const std::size_t n = static_cast<std::size_t>(t->numel());
    float* w = t->data();
    const float* g = t->grad();
    float* m = state.m[i].data();
    float* v = state.v[i].data();
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = b1 * m[j] + (1.f - b1) * g[j];
      v[j] = b2 * v[j] + (1.f - b2) * g[j] * g[j];
      const double mh = m[j] / bc1;
      const double vh = v[j] / bc2;
      w[j] = static_cast<float>(w[j] - state.lr * mh / (std::sqrt(vh) + state.eps));
    }
  }
}

}  // namespace fv::nn
