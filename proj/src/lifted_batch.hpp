#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "corrdepth/geometry.hpp"
#include "corrdepth/kernels.hpp"

namespace corrdepth::detail {

inline kernels::Camera8 flatten(const AffineCamera& cam) {
  kernels::Camera8 c;
  for (int r = 0; r < 2; ++r)
    for (int k = 0; k < 4; ++k) c[static_cast<std::size_t>(r * 4 + k)] = cam.p(r, k);
  return c;
}

/// Correspondences lifted through a depth field, stored as structure of arrays.
struct LiftedBatch {
  std::vector<double> xs, ys, ds, xt, yt;
  std::vector<std::size_t> pixel;  ///< flat depth-field index of each source

  LiftedBatch(const CorrespondenceSet& corr, const DepthField& field) {
    const std::size_t n = corr.size();
    xs.resize(n);
    ys.resize(n);
    ds.resize(n);
    xt.resize(n);
    yt.resize(n);
    pixel.resize(n);
    const auto depth = field.values();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = pixel_index(corr.source[i], field);
      pixel[i] = k;
      xs[i] = corr.source[i].x;
      ys[i] = corr.source[i].y;
      ds[i] = depth[k];
      xt[i] = corr.target[i].x;
      yt[i] = corr.target[i].y;
    }
  }

  std::size_t size() const noexcept { return xs.size(); }
  kernels::PointBatch batch() const { return {xs, ys, ds, xt, yt}; }
  HPoint3 point(std::size_t i) const { return {xs[i], ys[i], ds[i], 1.0}; }
  Pixel2 target(std::size_t i) const { return {xt[i], yt[i]}; }
};

}  // namespace corrdepth::detail
