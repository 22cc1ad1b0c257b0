#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fv/common/error.hpp"

namespace fv::nn {

// Dense NCHW float tensor. Values live in `data`; `grad` is allocated only
// for tensors that take part in training and always matches `data` in size.
struct Shape {
  std::int64_t n = 0;
  std::int64_t c = 0;
  std::int64_t h = 0;
  std::int64_t w = 0;

  std::int64_t numel() const { return n * c * h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.f);
  static Tensor zeros(Shape shape) { return Tensor(shape); }
  static Tensor full(Shape shape, float v) { return Tensor(shape, v); }

  const Shape& shape() const { return shape_; }
  std::int64_t numel() const { return shape_.numel(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::vector<float>& vec() { return data_; }
  const std::vector<float>& vec() const { return data_; }

  std::int64_t index(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) const {
    return ((n * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  float& at(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) {
    return data_[static_cast<std::size_t>(index(n, c, y, x))];
  }
  float at(std::int64_t n, std::int64_t c, std::int64_t y, std::int64_t x) const {
    return data_[static_cast<std::size_t>(index(n, c, y, x))];
  }

  bool has_grad() const { return !grad_.empty(); }
  void ensure_grad();
  void zero_grad();
  void drop_grad() { grad_.clear(); grad_.shrink_to_fit(); }
  float* grad() { return grad_.data(); }
  const float* grad() const { return grad_.data(); }
  std::vector<float>& grad_vec() { return grad_; }
  const std::vector<float>& grad_vec() const { return grad_; }

  bool all_finite() const;

 private:
  Shape shape_{};
  std::vector<float> data_;
  std::vector<float> grad_;
};

// Elementwise helpers used when wiring ops together.
Tensor add(const Tensor& a, const Tensor& b);
void add_into(Tensor& dst, const Tensor& src);
Tensor scale(const Tensor& a, float s);

// Accumulates `grad.data` into `param.grad`, allocating it on first use.
void add_grad(Tensor& param, const Tensor& grad);

}  // namespace fv::nn
