#include "kernels_impl.hpp"

#include <algorithm>
#include <cmath>

namespace corrdepth::kernels::scalar {

void residuals(const Camera8& p, const PointBatch& b, std::span<double> out) {
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double ex = p[0] * b.xs[i] + p[1] * b.ys[i] + p[2] * b.ds[i] + p[3] - b.xt[i];
    const double ey = p[4] * b.xs[i] + p[5] * b.ys[i] + p[6] * b.ds[i] + p[7] - b.yt[i];
    out[i] = std::sqrt(ex * ex + ey * ey);
  }
}

InlierTally tally_inliers(const Camera8& p, const PointBatch& b, double threshold,
                          std::span<std::uint8_t> mask) {
  InlierTally t;
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double ex = p[0] * b.xs[i] + p[1] * b.ys[i] + p[2] * b.ds[i] + p[3] - b.xt[i];
    const double ey = p[4] * b.xs[i] + p[5] * b.ys[i] + p[6] * b.ds[i] + p[7] - b.yt[i];
    const double r = std::sqrt(ex * ex + ey * ey);
    const bool in = r < threshold;
    if (!mask.empty()) mask[i] = in ? 1 : 0;
    if (in) {
      ++t.count;
      t.residual_sum += r;
    }
  }
  return t;
}

double robust_sum(std::span<const double> args, double tau) {
  const double tau2 = tau * tau;
  const double cap = 0.25 * tau2;
  const double two_tau2 = 2.0 * tau2;
  double sum = 0.0;
  for (double x : args) {
    const double x2 = x * x;
    sum += x2 <= tau2 ? 0.5 * x2 * (1.0 - x2 / two_tau2) : cap;
  }
  return sum;
}

void sgd_step(std::span<double> depth, std::span<double> velocity, std::span<const double> grad,
              const SgdParams& s) {
  const std::size_t n = depth.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double g = std::min(std::max(grad[i], -s.grad_clamp), s.grad_clamp);
    const double v = s.momentum * velocity[i] + g;
    velocity[i] = v;
    depth[i] = std::min(std::max(depth[i] - s.learning_rate * v, s.lower), s.upper);
  }
}

ErrorSums error_sums(std::span<const double> pred, std::span<const double> gt,
                     std::span<const std::uint8_t> mask) {
  ErrorSums s;
  const std::size_t n = pred.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const double e = pred[i] - gt[i];
    const double ae = std::fabs(e);
    const double ag = std::fabs(gt[i]);
    s.abs += ae;
    s.sq += e * e;
    s.rel_abs += ae / ag;
    s.rel_sq += e * e / ag;
    ++s.count;
  }
  return s;
}

}  // namespace corrdepth::kernels::scalar
