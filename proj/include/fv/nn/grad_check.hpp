#pragma once

#include <cstdint>
#include <functional>

#include "fv/nn/tensor.hpp"

namespace fv::nn {

struct GradCheckOptions {
  double h = 1e-3;             // central-difference step
  double denom_floor = 1e-6;   // lower bound on the relative-error denominator
  std::int64_t max_checks = 0; // 0 checks every entry, otherwise a random subset
  std::uint64_t seed = 0;      // subset selection
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  double tol = 0.0;
  std::int64_t checked = 0;
  std::int64_t worst_index = -1;
  bool pass = false;
};

// Central finite differences of a scalar-valued function against an
// analytic gradient, entry by entry. The relative error divides by
// max(|analytic|, |numeric|, denom_floor) so near-zero entries do not
// explode the ratio.
GradCheckReport grad_check(const std::function<double(const Tensor&)>& f,
                           const Tensor& x, const Tensor& analytic_grad,
                           double tol, const GradCheckOptions& opts = {});

}  // namespace fv::nn
