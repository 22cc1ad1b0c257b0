#include "fv/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fv/common/rng.hpp"

namespace fv::nn {

GradCheckReport grad_check(const std::function<double(const Tensor&)>& f,
                           const Tensor& x, const Tensor& analytic_grad,
                           double tol, const GradCheckOptions& opts) {
  if (!(x.shape() == analytic_grad.shape()))
    throw ParamError("grad_check: analytic grad shape mismatch");
  if (!(opts.h > 0.0)) throw ParamError("grad_check: step must be positive");

  const std::int64_t n = x.numel();
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  if (opts.max_checks > 0 && opts.max_checks < n) {
    Rng rng(opts.seed);
    for (std::int64_t i = 0; i < opts.max_checks; ++i) {
      const std::int64_t j = rng.uniform_int(i, n - 1);
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(opts.max_checks));
  }

  GradCheckReport rep;
  rep.tol = tol;
  Tensor probe = x;
  for (const std::int64_t i : idx) {
    const float orig = x.data()[i];
    probe.data()[i] = static_cast<float>(orig + opts.h);
    const double fp = f(probe);
    probe.data()[i] = static_cast<float>(orig - opts.h);
    const double fm = f(probe);
    probe.data()[i] = orig;

    const double numeric = (fp - fm) / (2.0 * opts.h);
    const double analytic = analytic_grad.data()[i];
    const double denom =
        std::max({std::abs(analytic), std::abs(numeric), opts.denom_floor});
    const double rel = std::abs(analytic - numeric) / denom;
    if (rel > rep.max_rel_err) {
      rep.max_rel_err = rel;
      rep.worst_index = i;
    }
    rep.checked += 1;
  }
  rep.pass = rep.max_rel_err < tol;
  return rep;
}

}  // namespace fv::nn
