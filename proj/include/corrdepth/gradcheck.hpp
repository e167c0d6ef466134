#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "corrdepth/geometry.hpp"
#include "corrdepth/robust_loss.hpp"

namespace corrdepth {

/// A random least-squares instance with a frozen inlier mask.
struct GradInstance {
  CorrespondenceSet corr;
  DepthField depth{1, 1};
  std::vector<std::uint8_t> inlier_mask;
  RobustParams robust;
};

/// K distinct source pixels on a 16 x 16 grid, a random affine camera, targets
/// perturbed so residuals straddle the robust knee, and roughly 80% inliers.
GradInstance make_grad_instance(std::uint64_t seed, std::size_t k);

struct GradCheckResult {
  std::size_t k = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

/// Analytic gradient against central differences of fixed_mask_loss.
/// corrupt_analytic scales the analytic gradient by 1.01 (negative control).
GradCheckResult check_gradient(const GradInstance& inst, double h = 1e-5, bool corrupt_analytic = false);

}  // namespace corrdepth
