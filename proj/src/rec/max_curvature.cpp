#include "fv/rec/max_curvature.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fv/common/error.hpp"

namespace fv::rec {

std::int64_t VeinTemplate::count() const {
  std::int64_t n = 0;
  for (std::uint8_t v : map) n += v;
  return n;
}

VeinTemplate make_template(std::int64_t h, std::int64_t w) {
  if (h < 1 || w < 1) throw ParamError("template dims must be positive");
  VeinTemplate t;
  t.h = h;
  t.w = w;
  t.map.assign(static_cast<std::size_t>(h * w), 0);
  return t;
}

namespace {

std::int64_t reflect101(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

struct Plane {
  std::int64_t h = 0, w = 0;
  std::vector<double> v;
  double at(std::int64_t y, std::int64_t x) const {
    return v[static_cast<std::size_t>(y * w + x)];
  }
  double& at(std::int64_t y, std::int64_t x) {
    return v[static_cast<std::size_t>(y * w + x)];
  }
};

Plane make_plane(std::int64_t h, std::int64_t w) {
  return Plane{h, w, std::vector<double>(static_cast<std::size_t>(h * w), 0.0)};
}

// Separable filtering with mirrored borders; kr runs along rows (x), kc
// along columns (y).
Plane sep_filter(const Plane& src, const std::vector<double>& kr,
                 const std::vector<double>& kc) {
  const std::int64_t h = src.h, w = src.w;
  const std::int64_t rr = static_cast<std::int64_t>(kr.size() / 2);
  const std::int64_t rc = static_cast<std::int64_t>(kc.size() / 2);
  Plane tmp = make_plane(h, w);
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::int64_t i = -rr; i <= rr; ++i)
        acc += kr[static_cast<std::size_t>(i + rr)] *
               src.at(y, reflect101(x + i, w));
      tmp.at(y, x) = acc;
    }
  Plane out = make_plane(h, w);
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::int64_t i = -rc; i <= rc; ++i)
        acc += kc[static_cast<std::size_t>(i + rc)] * tmp.at(reflect101(y + i, h), x);
      out.at(y, x) = acc;
    }
  return out;
}

struct DerivKernels {
  std::vector<double> g, g1, g2;
};

DerivKernels deriv_kernels(double sigma) {
  const std::int64_t r = static_cast<std::int64_t>(std::ceil(4.0 * sigma));
  const double s2 = sigma * sigma;
  DerivKernels k;
  k.g.resize(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (std::int64_t i = -r; i <= r; ++i) {
    const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * s2));
    k.g[static_cast<std::size_t>(i + r)] = v;
    sum += v;
  }
  for (double& v : k.g) v /= sum;
  k.g1.resize(k.g.size());
  k.g2.resize(k.g.size());
  for (std::int64_t i = -r; i <= r; ++i) {
    const double t = static_cast<double>(i);
    const double gv = k.g[static_cast<std::size_t>(i + r)];
    k.g1[static_cast<std::size_t>(i + r)] = -(t / s2) * gv;
    k.g2[static_cast<std::size_t>(i + r)] = ((t * t - s2) / (s2 * s2)) * gv;
  }
  return k;
}

// Walks one profile line, scores every stretch of positive curvature at
// its curvature maximum and accumulates the votes into `votes`.
void score_line(const Plane& kappa, Plane& votes, std::int64_t y0,
                std::int64_t x0, std::int64_t dy, std::int64_t dx) {
  std::int64_t y = y0, x = x0;
  std::int64_t run_len = 0;
  double run_max = 0.0;
  std::int64_t max_y = 0, max_x = 0;
  auto flush = [&]() {
    if (run_len > 0)
      votes.at(max_y, max_x) += run_max * static_cast<double>(run_len);
    run_len = 0;
    run_max = 0.0;
  };
  while (y >= 0 && y < kappa.h && x >= 0 && x < kappa.w) {
    const double k = kappa.at(y, x);
    if (k > 0.0) {
      if (run_len == 0 || k > run_max) {
        run_max = k;
        max_y = y;
        max_x = x;
      }
      ++run_len;
    } else {
      flush();
    }
    y += dy;
    x += dx;
  }
  flush();
}

}  // namespace

VeinTemplate mc_extract(const Image& img, const McOptions& opt) {
  if (!(opt.sigma > 0.0)) throw ParamError("mc_extract: sigma must be positive");
  const std::int64_t h = img.h, w = img.w;

  Plane src = make_plane(h, w);
  for (std::size_t i = 0; i < img.pix.size(); ++i) src.v[i] = img.pix[i];

  const DerivKernels k = deriv_kernels(opt.sigma);
  const Plane fx = sep_filter(src, k.g1, k.g);
  const Plane fy = sep_filter(src, k.g, k.g1);
  const Plane fxx = sep_filter(src, k.g2, k.g);
  const Plane fyy = sep_filter(src, k.g, k.g2);
  const Plane fxy = sep_filter(src, k.g1, k.g1);

  const double rh = 1.0 / std::sqrt(2.0);
  struct Dir {
    double ux, uy;
    std::int64_t dy, dx;
  };
  const std::array<Dir, 4> dirs{{{1.0, 0.0, 0, 1},
                                 {0.0, 1.0, 1, 0},
                                 {rh, rh, 1, 1},
                                 {rh, -rh, -1, 1}}};

  Plane votes = make_plane(h, w);
  Plane kappa = make_plane(h, w);
  for (const Dir& d : dirs) {
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < w; ++x) {
        const double p1 = fx.at(y, x) * d.ux + fy.at(y, x) * d.uy;
        const double p2 = fxx.at(y, x) * d.ux * d.ux +
                          2.0 * fxy.at(y, x) * d.ux * d.uy +
                          fyy.at(y, x) * d.uy * d.uy;
        kappa.at(y, x) = p2 / std::pow(1.0 + p1 * p1, 1.5);
      }
    if (d.dy == 0) {
      for (std::int64_t y = 0; y < h; ++y) score_line(kappa, votes, y, 0, 0, 1);
    } else if (d.dx == 0) {
      for (std::int64_t x = 0; x < w; ++x) score_line(kappa, votes, 0, x, 1, 0);
    } else if (d.dy > 0) {
      for (std::int64_t y = 0; y < h; ++y) score_line(kappa, votes, y, 0, 1, 1);
      for (std::int64_t x = 1; x < w; ++x) score_line(kappa, votes, 0, x, 1, 1);
    } else {
      for (std::int64_t x = 0; x < w; ++x)
        score_line(kappa, votes, h - 1, x, -1, 1);
      for (std::int64_t y = 0; y + 1 < h; ++y)
        score_line(kappa, votes, y, 0, -1, 1);
    }
  }

  // Link vote maxima along each direction: a pixel keeps the smaller of
  // the stronger neighbour votes on either side, and the best direction
  // wins. This bridges one-pixel gaps and suppresses isolated votes.
  auto vote_at = [&](std::int64_t y, std::int64_t x) -> double {
    if (y < 0 || y >= h || x < 0 || x >= w) return 0.0;
    return votes.at(y, x);
  };
  Plane linked = make_plane(h, w);
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      double best = 0.0;
      for (const Dir& d : dirs) {
        const double fwd =
            std::max(vote_at(y + d.dy, x + d.dx), vote_at(y + 2 * d.dy, x + 2 * d.dx));
        const double bwd =
            std::max(vote_at(y - d.dy, x - d.dx), vote_at(y - 2 * d.dy, x - 2 * d.dx));
        best = std::max(best, std::min(fwd, bwd));
      }
      linked.at(y, x) = best;
    }

  std::vector<double> pos;
  pos.reserve(linked.v.size() / 8);
  for (double v : linked.v)
    if (v > 0.0) pos.push_back(v);

  VeinTemplate tpl = make_template(h, w);
  if (pos.empty()) return tpl;
  std::sort(pos.begin(), pos.end());
  const double thr = pos[(pos.size() - 1) / 2];
  for (std::size_t i = 0; i < linked.v.size(); ++i)
    tpl.map[i] = linked.v[i] >= thr ? 1 : 0;
  return tpl;
}

}  // namespace fv::rec
