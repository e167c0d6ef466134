#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "corrdepth/error.hpp"
#include "corrdepth/gradcheck.hpp"
#include "corrdepth/grad_engine.hpp"
#include "oracles.hpp"

using namespace corrdepth;

namespace {

std::vector<double> oracle_fd(const GradInstance& in, double tau, std::size_t i, double h = 1e-5) {
  std::vector<double> d(in.depth.values().begin(), in.depth.values().end());
  const std::size_t px = pixel_index(in.corr.source[i], in.depth);
  const double keep = d[px];
  d[px] = keep + h;
  const double lp = oracle::fixed_mask_loss(in.corr, d, in.depth.width(), in.inlier_mask, tau);
  d[px] = keep - h;
  const double lm = oracle::fixed_mask_loss(in.corr, d, in.depth.width(), in.inlier_mask, tau);
  return {(lp - lm) / (2 * h)};
}

}  // namespace

TEST_CASE("analytic gradient matches differences of an independent loss") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const std::size_t k = 8 + seed * 16;
    CAPTURE(k);
    for (double tau : {5.0, 2.0, std::numeric_limits<double>::infinity()}) {
      GradInstance in = make_grad_instance(seed, k);
      in.robust.tau = tau;
      const LossGradient g = loss_and_grad_fixed_mask(in.corr, in.depth, in.inlier_mask, in.robust);
      double scale = 0.0;
      std::vector<double> fd(k);
      for (std::size_t i = 0; i < k; ++i) {
        fd[i] = oracle_fd(in, tau, i)[0];
        scale = std::max(scale, std::fabs(fd[i]));
      }
      for (std::size_t i = 0; i < k; ++i) {
        const double a = g.per_depth[pixel_index(in.corr.source[i], in.depth)];
        CHECK(std::fabs(a - fd[i]) <= 2e-3 * std::max({std::fabs(a), std::fabs(fd[i]), 1e-6 * scale}));
      }
    }
  }
}

TEST_CASE("squared-distance argument and inlier-only scope are differentiated too") {
  GradInstance in = make_grad_instance(42, 60);
  in.robust.argument = RobustArgument::squared_distance;
  in.robust.tau = 30.0;
  for (LossScope scope : {LossScope::all, LossScope::inliers_only}) {
    const GradOptions opt{scope};
    const LossGradient g = loss_and_grad_fixed_mask(in.corr, in.depth, in.inlier_mask, in.robust, opt);
    for (std::size_t i = 0; i < in.corr.size(); i += 7) {
      const std::size_t px = pixel_index(in.corr.source[i], in.depth);
      DepthField p = in.depth, m = in.depth;
      p.mutable_values()[px] += 1e-5;
      m.mutable_values()[px] -= 1e-5;
      const double fd = (fixed_mask_loss(in.corr, p, in.inlier_mask, in.robust, opt) -
                         fixed_mask_loss(in.corr, m, in.inlier_mask, in.robust, opt)) / 2e-5;
      CHECK(g.per_depth[px] == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("camera jacobian matches differences of the refit camera") {
  const GradInstance in = make_grad_instance(5, 40);
  std::vector<HPoint3> pts;
  std::vector<Pixel2> tgt;
  for (std::size_t i = 0; i < in.corr.size(); ++i) {
    pts.push_back(lift(in.corr.source[i], in.depth));
    tgt.push_back(in.corr.target[i]);
  }
  const LstsqSolution sol = solve_lstsq(pts, tgt);
  const CameraJacobian jac = camera_jacobian(sol.svd, pts, tgt);
  for (std::size_t j = 0; j < pts.size(); j += 3) {
    std::vector<HPoint3> up = pts, dn = pts;
    up[j].d += 1e-6;
    dn[j].d -= 1e-6;
    const CameraMatrix diff =
        (oracle::normal_equations_camera(up, tgt) - oracle::normal_equations_camera(dn, tgt)) / 2e-6;
    for (int r = 0; r < 2; ++r)
      for (int q = 0; q < 4; ++q)
        CHECK(jac(r * 4 + q, static_cast<Eigen::Index>(j)) == doctest::Approx(diff(r, q)).epsilon(1e-5).scale(1e-3));
  }
}

TEST_CASE("camera jacobian refuses unstable factorizations") {
  SvdFactors f;
  f.u.setIdentity();
  f.v = Eigen::MatrixX4d::Zero(6, 4);
  std::vector<HPoint3> pts(6);
  std::vector<Pixel2> tgt(6);
  f.sigma << 3, 3, 1, 0.5;
  CHECK_THROWS_AS(camera_jacobian(f, pts, tgt), IllConditionedJacobian);
  f.sigma << 3, 2, 1, 0;
  CHECK_THROWS_AS(camera_jacobian(f, pts, tgt), IllConditionedJacobian);
  f.sigma << 3, 2, 1, 0.5;
  CHECK_THROWS_AS(camera_jacobian(f, std::span(pts).first(5), std::span(tgt).first(5)), InputError);
}

TEST_CASE("gradient is orthogonal to the affine depth gauge when every point is an inlier") {
  GradInstance in = make_grad_instance(17, 90);
  std::fill(in.inlier_mask.begin(), in.inlier_mask.end(), 1);
  const LossGradient g = loss_and_grad_fixed_mask(in.corr, in.depth, in.inlier_mask, in.robust);
  const auto d = in.depth.values();
  double gd = 0, gx = 0, gy = 0, g1 = 0, norm = 0;
  for (std::size_t k = 0; k < g.per_depth.size(); ++k) {
    const double x = double(k % in.depth.width()), y = double(k / in.depth.width());
    gd += g.per_depth[k] * d[k];
    gx += g.per_depth[k] * x;
    gy += g.per_depth[k] * y;
    g1 += g.per_depth[k];
    norm += std::fabs(g.per_depth[k]);
  }
  CHECK(norm > 1e-3);
  CHECK(std::fabs(gd) < 1e-10);
  CHECK(std::fabs(gx) < 1e-9);
  CHECK(std::fabs(gy) < 1e-9);
  CHECK(std::fabs(g1) < 1e-10);
}

TEST_CASE("exact correspondences give zero loss and zero gradient") {
  GradInstance in = make_grad_instance(3, 50);
  std::fill(in.inlier_mask.begin(), in.inlier_mask.end(), 1);
  AffineCamera cam;
  cam.p << 1, 0.05, 9, 2, -0.05, 1, -7, 1;
  for (std::size_t i = 0; i < in.corr.size(); ++i) in.corr.target[i] = project(cam, lift(in.corr.source[i], in.depth));
  const LossGradient g = loss_and_grad_fixed_mask(in.corr, in.depth, in.inlier_mask, in.robust);
  CHECK(g.loss_value == 0.0);
  for (double v : g.per_depth) CHECK(v == 0.0);
}

TEST_CASE("forward and gradient paths agree; ransac path freezes its own mask") {
  const GradInstance in = make_grad_instance(9, 120);
  const LossGradient g = loss_and_grad_fixed_mask(in.corr, in.depth, in.inlier_mask, in.robust);
  CHECK(g.loss_value == fixed_mask_loss(in.corr, in.depth, in.inlier_mask, in.robust));
  CHECK(g.per_depth.size() == in.depth.size());

  RansacConfig rc;
  rc.threshold = 6.0;
  rc.seed = 4;
  const LossGradient r = loss_and_grad(in.corr, in.depth, rc, in.robust);
  const LossGradient f = loss_and_grad_fixed_mask(in.corr, in.depth, r.inlier_mask, in.robust);
  CHECK(r.loss_value == f.loss_value);
  CHECK(r.per_depth == f.per_depth);
  CHECK(r.inlier_count == static_cast<std::size_t>(std::count(r.inlier_mask.begin(), r.inlier_mask.end(), 1)));
}

TEST_CASE("gradcheck helper flags a corrupted analytic gradient") {
  const GradInstance in = make_grad_instance(1, 8);
  CHECK(check_gradient(in).max_rel_error < 2e-3);
  CHECK(check_gradient(in, 1e-5, true).max_rel_error > 2e-3);
  CHECK_THROWS_AS(make_grad_instance(1, 7), InputError);
}
