#include "corrdepth/camera_solver.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <tuple>

#include <Eigen/SVD>

#include "corrdepth/error.hpp"
#include "corrdepth/kernels.hpp"
#include "lifted_batch.hpp"

namespace corrdepth {

void RansacConfig::validate() const {
  if (!(threshold > 0.0)) throw InputError("RANSAC threshold must be positive");
  if (max_iterations < 1) throw InputError("RANSAC needs at least one iteration");
  if (min_sample_size < 4) throw InputError("RANSAC minimal sample size must be at least 4");
  if (refit_rounds < 1) throw InputError("RANSAC needs at least one refit round");
}

Eigen::Matrix4Xd stack_points(std::span<const HPoint3> points) {
  Eigen::Matrix4Xd x(4, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    x(0, c) = points[i].x;
    x(1, c) = points[i].y;
    x(2, c) = points[i].d;
    x(3, c) = points[i].w;
  }
  return x;
}

LstsqSolution solve_lstsq(std::span<const HPoint3> points, std::span<const Pixel2> targets) {
  if (points.size() != targets.size()) throw InputError("points and targets differ in length");
  if (points.size() < 4) {
    throw DegenerateConfiguration(
        "least-squares camera needs at least 4 points, got " + std::to_string(points.size()),
        static_cast<int>(points.size()));
  }
  const Eigen::MatrixXd x = stack_points(points);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();

  int rank = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s(k) > kRankTolerance * s(0)) ++rank;
  }
  if (rank < 4) {
    throw DegenerateConfiguration(
        "degenerate point configuration: lifted points have rank " + std::to_string(rank) + " < 4",
        rank);
  }

  Eigen::MatrixX2d xt(static_cast<Eigen::Index>(targets.size()), 2);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    xt(static_cast<Eigen::Index>(i), 0) = targets[i].x;
    xt(static_cast<Eigen::Index>(i), 1) = targets[i].y;
  }

  LstsqSolution out;
  out.svd.u = svd.matrixU();
  out.svd.sigma = s;
  out.svd.v = svd.matrixV();

  // P^T = U Sigma^+ V^T x^T
  Eigen::Matrix<double, 4, 2> proj = out.svd.v.transpose() * xt;
  for (int k = 0; k < 4; ++k) proj.row(k) /= s(k);
  out.camera.p = (out.svd.u * proj).transpose();
  return out;
}

namespace {

struct SoaPoints {
  std::vector<double> xs, ys, ds, xt, yt;

  SoaPoints(std::span<const HPoint3> pts, std::span<const Pixel2> tgt) {
    const std::size_t n = pts.size();
    xs.resize(n);
    ys.resize(n);
    ds.resize(n);
    xt.resize(n);
    yt.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = pts[i].x;
      ys[i] = pts[i].y;
      ds[i] = pts[i].d;
      xt[i] = tgt[i].x;
      yt[i] = tgt[i].y;
    }
  }

  kernels::PointBatch batch() const { return {xs, ys, ds, xt, yt}; }
};

using detail::flatten;

std::vector<std::size_t> canonical_order(std::span<const HPoint3> pts, std::span<const Pixel2> tgt) {
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto key = [&](std::size_t i) {
    return std::make_tuple(pts[i].x, pts[i].y, pts[i].d, tgt[i].x, tgt[i].y);
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  return order;
}

void gather(std::span<const HPoint3> pts, std::span<const Pixel2> tgt,
            std::span<const std::uint8_t> mask, std::vector<HPoint3>& sub_pts,
            std::vector<Pixel2>& sub_tgt) {
  sub_pts.clear();
  sub_tgt.clear();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (mask[i]) {
      sub_pts.push_back(pts[i]);
      sub_tgt.push_back(tgt[i]);
    }
  }
}

}  // namespace

RansacOutcome ransac_fit(std::span<const HPoint3> points, std::span<const Pixel2> targets,
                         const RansacConfig& cfg) {
  cfg.validate();
  if (points.size() != targets.size()) throw InputError("points and targets differ in length");
  const std::size_t n = points.size();
  if (n < cfg.min_sample_size) {
    throw InputError("RANSAC needs at least " + std::to_string(cfg.min_sample_size) +
                     " correspondences, got " + std::to_string(n));
  }

  const SoaPoints soa(points, targets);
  const auto& kt = kernels::active();
  const std::vector<std::size_t> canon = canonical_order(points, targets);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> sample;
  std::vector<HPoint3> sample_pts(cfg.min_sample_size);
  std::vector<Pixel2> sample_tgt(cfg.min_sample_size);

  bool have_best = false;
  AffineCamera best_cam;
  std::size_t best_count = 0;
  double best_mean = 0.0;
  std::size_t degenerate = 0;
  int last_rank = -1;

  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    sample.clear();
    while (sample.size() < cfg.min_sample_size) {
      const std::size_t c = pick(rng);
      if (std::find(sample.begin(), sample.end(), c) == sample.end()) sample.push_back(c);
    }
    for (std::size_t k = 0; k < sample.size(); ++k) {
      sample_pts[k] = points[canon[sample[k]]];
      sample_tgt[k] = targets[canon[sample[k]]];
    }
    AffineCamera cam;
    try {
      cam = solve_lstsq(sample_pts, sample_tgt).camera;
    } catch (const DegenerateConfiguration& e) {
      ++degenerate;
      last_rank = e.rank();
      continue;
    }
    const kernels::InlierTally t = kt.tally_inliers(flatten(cam), soa.batch(), cfg.threshold, {});
    if (t.count == 0) continue;
    const double mean = t.residual_sum / static_cast<double>(t.count);
    if (!have_best || t.count > best_count || (t.count == best_count && mean < best_mean)) {
      have_best = true;
      best_cam = cam;
      best_count = t.count;
      best_mean = mean;
    }
  }

  if (degenerate == cfg.max_iterations) {
    throw DegenerateConfiguration(
        "every RANSAC sample was degenerate (rank " + std::to_string(last_rank) + ")", last_rank);
  }
  if (!have_best || best_count < cfg.min_sample_size) {
    throw NoConsensus("no RANSAC hypothesis reached " + std::to_string(cfg.min_sample_size) +
                      " inliers at threshold " + std::to_string(cfg.threshold));
  }

  RansacOutcome out;
  out.degenerate_samples = degenerate;
  out.inlier_mask.assign(n, 0);
  out.camera = best_cam;
  out.inlier_count =
      kt.tally_inliers(flatten(best_cam), soa.batch(), cfg.threshold, out.inlier_mask).count;

  std::vector<HPoint3> in_pts;
  std::vector<Pixel2> in_tgt;
  for (std::size_t round = 0; round < cfg.refit_rounds; ++round) {
    gather(points, targets, out.inlier_mask, in_pts, in_tgt);
    out.camera = solve_lstsq(in_pts, in_tgt).camera;
    std::vector<std::uint8_t> mask(n, 0);
    const std::size_t count =
        kt.tally_inliers(flatten(out.camera), soa.batch(), cfg.threshold, mask).count;
    const bool stable = mask == out.inlier_mask;
    out.inlier_mask = std::move(mask);
    out.inlier_count = count;
    if (stable) break;
  }
  if (out.inlier_count < cfg.min_sample_size) {
    throw NoConsensus("refit camera keeps only " + std::to_string(out.inlier_count) + " inliers");
  }
  return out;
}

}  // namespace corrdepth
