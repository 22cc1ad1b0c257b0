#include "fv/nn/tensor.hpp"

#include <cmath>

namespace fv::nn {

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
         std::to_string(h) + "," + std::to_string(w) + ")";
}

Tensor::Tensor(Shape shape, float fill) : shape_(shape) {
  if (shape.n <= 0 || shape.c <= 0 || shape.h <= 0 || shape.w <= 0)
    throw ParamError("tensor dims must be positive, got " + shape.str());
  data_.assign(static_cast<std::size_t>(shape.numel()), fill);
}

void Tensor::ensure_grad() {
  if (grad_.size() != data_.size()) grad_.assign(data_.size(), 0.f);
}

void Tensor::zero_grad() {
  grad_.assign(data_.size(), 0.f);
}

bool Tensor::all_finite() const {
  for (float v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape()))
    throw ParamError("add: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  Tensor out(a.shape());
  const float* pa = a.data();
  const float* pb = b.data();
  float* po = out.data();
  const std::int64_t n = a.numel();
  for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
  return out;
}

void add_into(Tensor& dst, const Tensor& src) {
  if (!(dst.shape() == src.shape()))
    throw ParamError("add_into: shape mismatch " + dst.shape().str() + " vs " + src.shape().str());
  float* pd = dst.data();
  const float* ps = src.data();
  const std::int64_t n = dst.numel();
  for (std::int64_t i = 0; i < n; ++i) pd[i] += ps[i];
}

void add_grad(Tensor& param, const Tensor& grad) {
  if (!(param.shape() == grad.shape()))
    throw ParamError("add_grad: shape mismatch " + param.shape().str() + " vs " +
                     grad.shape().str());
  param.ensure_grad();
  float* pg = param.grad();
  const float* ps = grad.data();
  const std::int64_t n = param.numel();
  for (std::int64_t i = 0; i < n; ++i) pg[i] += ps[i];
}

Tensor scale(const Tensor& a, float s) {
  Tensor out(a.shape());
  const float* pa = a.data();
  float* po = out.data();
  const std::int64_t n = a.numel();
  for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] * s;
  return out;
}

}  // namespace fv::nn
