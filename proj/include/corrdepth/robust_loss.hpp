#pragma once

#include <limits>

#include "corrdepth/geometry.hpp"

namespace corrdepth {

/// What the robust kernel is applied to.
enum class RobustArgument { distance, squared_distance };

struct RobustParams {
  double tau = 5.0;  ///< pixels; +infinity disables the cap (plain half-square)
  RobustArgument argument = RobustArgument::distance;

  void validate() const;
  static RobustParams disabled() { return {std::numeric_limits<double>::infinity()}; }
};

/// Residual norms below this many pixels count as exact reprojections.
inline constexpr double kZeroResidual = 1e-9;

/// R(x) = x^2/2 (1 - x^2 / (2 tau^2)) for x^2 <= tau^2, tau^2/4 beyond.
double robust_weight(double x, const RobustParams& params);

/// dR/dx = x - x^3 / tau^2 for x <= tau, 0 beyond.
double robust_weight_grad(double x, const RobustParams& params);

/// Maps a residual norm to the kernel argument (after zero snapping).
double robust_argument(double residual, const RobustParams& params);

/// Mean robust reprojection cost over every correspondence.
double corr_loss(const AffineCamera& cam, const CorrespondenceSet& corr,
                 const DepthField& depth_field, const RobustParams& params);

}  // namespace corrdepth
