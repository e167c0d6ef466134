#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "corrdepth/camera_solver.hpp"
#include "corrdepth/geometry.hpp"
#include "corrdepth/robust_loss.hpp"

namespace corrdepth {

/// Column j holds d vec(P) / d d_j, with P flattened row-major (8 entries).
using CameraJacobian = Eigen::Matrix<double, 8, Eigen::Dynamic>;

/// Relative gap between consecutive singular values below which the SVD
/// differential is considered unstable.
inline constexpr double kSingularGapTolerance = 1e-8;

/// Which correspondences enter the loss average.
enum class LossScope { all, inliers_only };

struct GradOptions {
  LossScope scope = LossScope::all;
  double norm_guard = 1e-12;  ///< floor on ||e|| when normalising the residual direction
};

struct LossGradient {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> per_depth;  ///< dL/dd per pixel, row-major
  double loss_value = 0.0;
  AffineCamera camera;  ///< least-squares camera on the inlier set
  std::vector<std::uint8_t> inlier_mask;
  std::size_t inlier_count = 0;
};

/// Derivative of the least-squares camera with respect to each inlier depth,
/// built from the SVD of the inlier stack. Throws IllConditionedJacobian on
/// rank deficiency or (near-)repeated singular values.
CameraJacobian camera_jacobian(const SvdFactors& svd, std::span<const HPoint3> inlier_points,
                               std::span<const Pixel2> inlier_targets);

/// Loss for a frozen inlier mask: refit the camera on the inliers, then score.
double fixed_mask_loss(const CorrespondenceSet& corr, const DepthField& depth_field,
                       std::span<const std::uint8_t> inlier_mask, const RobustParams& robust,
                       const GradOptions& options = {});

/// Loss and exact gradient for a frozen inlier mask.
LossGradient loss_and_grad_fixed_mask(const CorrespondenceSet& corr, const DepthField& depth_field,
                                      std::span<const std::uint8_t> inlier_mask,
                                      const RobustParams& robust, const GradOptions& options = {});

/// RANSAC selects the inliers (not differentiated); the gradient then flows
/// through every lifted point directly and through the camera solve for inliers.
LossGradient loss_and_grad(const CorrespondenceSet& corr, const DepthField& depth_field,
                           const RansacConfig& ransac_cfg, const RobustParams& robust,
                           const GradOptions& options = {});

}  // namespace corrdepth
