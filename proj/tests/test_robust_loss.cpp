#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "corrdepth/error.hpp"
#include "corrdepth/robust_loss.hpp"
#include "oracles.hpp"

using namespace corrdepth;

TEST_CASE("kernel value at and beyond the knee") {
  for (double tau : {0.5, 1.0, 2.0, 3.0, 5.0, 7.3, 10.0}) {
    const RobustParams p{tau};
    CHECK(robust_weight(tau, p) == tau * tau / 4.0);
    CHECK(robust_weight(-tau, p) == tau * tau / 4.0);
    for (double x : {tau * 1.0000001, tau * 1.5, tau * 10.0, 1e6}) CHECK(robust_weight(x, p) == tau * tau / 4.0);
  }
}

TEST_CASE("kernel matches the closed form inside the knee") {
  const RobustParams p{5.0};
  for (double x = 0.0; x <= 5.0; x += 0.173) {
    CHECK(robust_weight(x, p) == doctest::Approx(x * x / 2.0 - std::pow(x, 4) / (4.0 * 25.0)).epsilon(1e-14));
  }
  CHECK(robust_weight(0.0, p) == 0.0);
}

TEST_CASE("derivative is continuous at the knee and matches differences") {
  for (double tau : {1.0, 5.0, 9.0}) {
    const RobustParams p{tau};
    CHECK(std::fabs(robust_weight_grad(tau, p)) < 1e-12);
    CHECK(std::fabs(robust_weight_grad(tau * (1 - 1e-9), p) - robust_weight_grad(tau * (1 + 1e-9), p)) < 1e-6);
    for (double x = 0.05; x < tau; x += tau / 13.0) {
      const double h = 1e-6;
      const double fd = (robust_weight(x + h, p) - robust_weight(x - h, p)) / (2 * h);
      CHECK(robust_weight_grad(x, p) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("disabled kernel is the plain half square") {
  const RobustParams p = RobustParams::disabled();
  CHECK(std::isinf(p.tau));
  for (double x : {0.0, 0.5, 3.0, 100.0}) {
    CHECK(robust_weight(x, p) == 0.5 * x * x);
    CHECK(robust_weight_grad(x, p) == x);
  }
}

TEST_CASE("argument mapping and zero snapping") {
  RobustParams p{5.0};
  CHECK(robust_argument(1e-12, p) == 0.0);
  CHECK(robust_argument(2.0, p) == 2.0);
  p.argument = RobustArgument::squared_distance;
  CHECK(robust_argument(2.0, p) == 4.0);
  CHECK_THROWS_AS((RobustParams{0.0}).validate(), InputError);
  CHECK_THROWS_AS((RobustParams{-1.0}).validate(), InputError);
  CHECK_THROWS_AS((RobustParams{std::nan("")}).validate(), InputError);
}

TEST_CASE("corr_loss is the mean kernel cost") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> depth(64);
  for (double& d : depth) d = u(rng);
  const DepthField f = DepthField::from_values(8, 8, depth);
  AffineCamera cam;
  cam.p << 1, 0.1, 6, 1, -0.1, 1, -4, 2;
  CorrespondenceSet c;
  for (int i = 0; i < 40; ++i) {
    const Pixel2 s{double(i % 8), double((i * 3) % 8)};
    c.source.push_back(s);
    c.target.push_back({s.x + 8 * u(rng), s.y + 8 * u(rng)});
  }
  for (double tau : {2.0, 5.0, std::numeric_limits<double>::infinity()}) {
    double ref = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double d = depth[static_cast<std::size_t>(c.source[i].y * 8 + c.source[i].x)];
      ref += oracle::robust(oracle::residual(cam.p, c.source[i].x, c.source[i].y, d, c.target[i].x, c.target[i].y), tau);
    }
    CHECK(corr_loss(cam, c, f, RobustParams{tau}) == doctest::Approx(ref / 40.0).epsilon(1e-12));
  }
}
