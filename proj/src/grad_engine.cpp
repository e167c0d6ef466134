#include "corrdepth/grad_engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "corrdepth/error.hpp"
#include "corrdepth/kernels.hpp"
#include "lifted_batch.hpp"

namespace corrdepth {

CameraJacobian camera_jacobian(const SvdFactors& svd, std::span<const HPoint3> inlier_points,
                               std::span<const Pixel2> inlier_targets) {
  const std::size_t k = inlier_points.size();
  if (k != inlier_targets.size()) throw InputError("points and targets differ in length");
  if (static_cast<std::size_t>(svd.v.rows()) != k) throw InputError("SVD does not match the inlier stack");

  const Eigen::Vector4d& s = svd.sigma;
  if (!(s(3) > kRankTolerance * s(0))) {
    throw IllConditionedJacobian("inlier stack is rank deficient; camera derivative undefined");
  }
  for (int i = 0; i + 1 < 4; ++i) {
    if (s(i) - s(i + 1) <= kSingularGapTolerance * s(0)) {
      throw IllConditionedJacobian("repeated singular values (" + std::to_string(s(i)) + ", " +
                                   std::to_string(s(i + 1)) + "); SVD derivative is unstable");
    }
  }

  Eigen::MatrixX2d xt(static_cast<Eigen::Index>(k), 2);
  for (std::size_t j = 0; j < k; ++j) {
    xt(static_cast<Eigen::Index>(j), 0) = inlier_targets[j].x;
    xt(static_cast<Eigen::Index>(j), 1) = inlier_targets[j].y;
  }
  const Eigen::Vector4d inv_s = s.cwiseInverse();
  Eigen::Matrix<double, 4, 2> proj = svd.v.transpose() * xt;
  proj.array().colwise() *= inv_s.array();
  const CameraMatrix p = (svd.u * proj).transpose();
  const Eigen::Vector2d p3 = p.col(2);

  // A = X^T has A^+ = U S^-1 V^T and (A^T A)^-1 = U S^-2 U^T. Perturbing the
  // depth entry of row j gives
  //   dP/dd_j = -p3 a_j^T - e_j c^T,  a_j = U S^-1 V^T e_j,  c = U S^-2 U^T e_3,
  // where e_j = P X_j - x_j is the fit residual.
  const Eigen::Vector4d c = svd.u * (inv_s.cwiseAbs2().asDiagonal() * svd.u.row(2).transpose());

  CameraJacobian jac(8, static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < k; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    const Eigen::Vector4d a = svd.u * (inv_s.asDiagonal() * svd.v.row(col).transpose());
    const HPoint3& x = inlier_points[j];
    const Eigen::Vector4d xj(x.x, x.y, x.d, x.w);
    const Eigen::Vector2d e = p * xj - Eigen::Vector2d(inlier_targets[j].x, inlier_targets[j].y);
    for (int r = 0; r < 2; ++r) {
      for (int q = 0; q < 4; ++q) jac(r * 4 + q, col) = -p3(r) * a(q) - e(r) * c(q);
    }
  }
  return jac;
}

namespace {

struct InlierStack {
  std::vector<HPoint3> points;
  std::vector<Pixel2> targets;
  std::vector<std::size_t> index;  ///< position in the full correspondence list
};

InlierStack gather_inliers(const detail::LiftedBatch& lifted, std::span<const std::uint8_t> mask) {
  if (mask.size() != lifted.size()) throw InputError("inlier mask length does not match correspondences");
  InlierStack s;
  for (std::size_t i = 0; i < lifted.size(); ++i) {
    if (!mask[i]) continue;
    s.points.push_back(lifted.point(i));
    s.targets.push_back(lifted.target(i));
    s.index.push_back(i);
  }
  return s;
}

bool in_scope(const GradOptions& o, std::span<const std::uint8_t> mask, std::size_t i) {
  return o.scope == LossScope::all || mask[i] != 0;
}

// Shared by the forward-only path and the gradient path so both report the
// same loss bit for bit.
double scored_loss(const AffineCamera& cam, const detail::LiftedBatch& lifted,
                   std::span<const std::uint8_t> mask, const RobustParams& robust,
                   const GradOptions& options, std::vector<double>& residuals) {
  const auto& kt = kernels::active();
  residuals.resize(lifted.size());
  kt.residuals(detail::flatten(cam), lifted.batch(), residuals);
  std::vector<double> args;
  args.reserve(lifted.size());
  for (std::size_t i = 0; i < lifted.size(); ++i) {
    if (in_scope(options, mask, i)) args.push_back(robust_argument(residuals[i], robust));
  }
  return kt.robust_sum(args, robust.tau) / static_cast<double>(args.size());
}

}  // namespace

double fixed_mask_loss(const CorrespondenceSet& corr, const DepthField& depth_field,
                       std::span<const std::uint8_t> inlier_mask, const RobustParams& robust,
                       const GradOptions& options) {
  corr.validate();
  robust.validate();
  const detail::LiftedBatch lifted(corr, depth_field);
  const InlierStack in = gather_inliers(lifted, inlier_mask);
  const AffineCamera cam = solve_lstsq(in.points, in.targets).camera;
  std::vector<double> residuals;
  return scored_loss(cam, lifted, inlier_mask, robust, options, residuals);
}

LossGradient loss_and_grad_fixed_mask(const CorrespondenceSet& corr, const DepthField& depth_field,
                                      std::span<const std::uint8_t> inlier_mask,
                                      const RobustParams& robust, const GradOptions& options) {
  corr.validate();
  robust.validate();
  const detail::LiftedBatch lifted(corr, depth_field);
  const InlierStack in = gather_inliers(lifted, inlier_mask);
  const LstsqSolution sol = solve_lstsq(in.points, in.targets);
  const CameraJacobian jac = camera_jacobian(sol.svd, in.points, in.targets);

  LossGradient out;
  out.width = depth_field.width();
  out.height = depth_field.height();
  out.per_depth.assign(depth_field.size(), 0.0);
  out.camera = sol.camera;
  out.inlier_mask.assign(inlier_mask.begin(), inlier_mask.end());
  out.inlier_count = in.points.size();

  std::vector<double> residuals;
  out.loss_value = scored_loss(sol.camera, lifted, inlier_mask, robust, options, residuals);

  std::size_t scored = 0;
  for (std::size_t i = 0; i < lifted.size(); ++i) scored += in_scope(options, inlier_mask, i) ? 1 : 0;
  const double inv_n = 1.0 / static_cast<double>(scored);

  const CameraMatrix& p = sol.camera.p;
  const Eigen::Vector2d p3 = p.col(2);
  // dL/dP accumulated over every scored correspondence.
  CameraMatrix dl_dp = CameraMatrix::Zero();
  for (std::size_t i = 0; i < lifted.size(); ++i) {
    if (!in_scope(options, inlier_mask, i)) continue;
    const double r = residuals[i];
    if (r < kZeroResidual) continue;
    const double arg = robust_argument(r, robust);
    double dl_dr = robust_weight_grad(arg, robust);
    if (robust.argument == RobustArgument::squared_distance) dl_dr *= 2.0 * r;
    if (dl_dr == 0.0) continue;
    const Eigen::Vector4d x(lifted.xs[i], lifted.ys[i], lifted.ds[i], 1.0);
    const Eigen::Vector2d e = p * x - Eigen::Vector2d(lifted.xt[i], lifted.yt[i]);
    const Eigen::Vector2d g = (inv_n * dl_dr / std::max(r, options.norm_guard)) * e;
    out.per_depth[lifted.pixel[i]] += g.dot(p3);
    dl_dp += g * x.transpose();
  }

  for (std::size_t j = 0; j < in.index.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    double acc = 0.0;
    for (int r = 0; r < 2; ++r)
      for (int q = 0; q < 4; ++q) acc += dl_dp(r, q) * jac(r * 4 + q, col);
    out.per_depth[lifted.pixel[in.index[j]]] += acc;
  }
  return out;
}

LossGradient loss_and_grad(const CorrespondenceSet& corr, const DepthField& depth_field,
                           const RansacConfig& ransac_cfg, const RobustParams& robust,
                           const GradOptions& options) {
  corr.validate();
  const detail::LiftedBatch lifted(corr, depth_field);
  std::vector<HPoint3> pts(lifted.size());
  std::vector<Pixel2> tgt(lifted.size());
  for (std::size_t i = 0; i < lifted.size(); ++i) {
    pts[i] = lifted.point(i);
    tgt[i] = lifted.target(i);
  }
  const RansacOutcome fit = ransac_fit(pts, tgt, ransac_cfg);
  return loss_and_grad_fixed_mask(corr, depth_field, fit.inlier_mask, robust, options);
}

}  // namespace corrdepth
