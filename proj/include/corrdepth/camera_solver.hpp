#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "corrdepth/geometry.hpp"

namespace corrdepth {

struct RansacConfig {
  double threshold = 2.0;  ///< inlier threshold T on the reprojection distance, pixels
  std::size_t max_iterations = 256;
  std::size_t min_sample_size = 4;
  std::uint64_t seed = 0;
  /// Number of refit-and-remask rounds after hypothesis selection.
  std::size_t refit_rounds = 1;

  void validate() const;
};

/// Thin SVD of the 4 x K stack of lifted points X = U diag(sigma) V^T.
/// The pseudo-inverse of X^T is then U diag(sigma)^+ V^T.
struct SvdFactors {
  Eigen::Matrix4d u;
  Eigen::Vector4d sigma;  ///< descending
  Eigen::MatrixX4d v;     ///< K x 4, orthonormal columns
};

struct LstsqSolution {
  AffineCamera camera;
  SvdFactors svd;
};

struct RansacOutcome {
  AffineCamera camera;
  std::vector<std::uint8_t> inlier_mask;
  std::size_t inlier_count = 0;
  std::size_t degenerate_samples = 0;
};

/// Singular values at or below this fraction of the largest are treated as zero.
inline constexpr double kRankTolerance = 1e-10;

/// Packs points into the 4 x K matrix with rows x, y, d, 1.
Eigen::Matrix4Xd stack_points(std::span<const HPoint3> points);

/// Least-squares affine camera via the SVD pseudo-inverse:
/// P^T = U diag(sigma)^+ V^T x^T. Throws DegenerateConfiguration when the
/// point stack has rank below 4.
LstsqSolution solve_lstsq(std::span<const HPoint3> points, std::span<const Pixel2> targets);

/// Fixed-budget RANSAC over minimal samples followed by a least-squares refit
/// on the consensus set. Sampling runs over a canonical (sorted) ordering of
/// the input so the outcome does not depend on input order.
RansacOutcome ransac_fit(std::span<const HPoint3> points, std::span<const Pixel2> targets,
                         const RansacConfig& cfg);

}  // namespace corrdepth
