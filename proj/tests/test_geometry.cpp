#include <doctest.h>

#include <cmath>
#include <limits>

#include "corrdepth/error.hpp"
#include "corrdepth/geometry.hpp"

using namespace corrdepth;

TEST_CASE("depth field validates size and range") {
  CHECK_THROWS_AS(DepthField::from_values(2, 2, {0.0, 0.0, 0.0}), InputError);
  CHECK_THROWS_AS(DepthField::from_values(2, 2, {0.0, 1.5, 0.0, 0.0}), InputError);
  CHECK_THROWS_AS(DepthField::from_values(1, 1, {std::nan("")}), InputError);
  CHECK_THROWS_AS(DepthField(0, 3), InputError);

  DepthField f = DepthField::from_values(3, 2, {-1, -0.5, 0, 0.25, 0.5, 1});
  CHECK(f.at(2, 1) == 1.0);
  CHECK(f.at(1, 0) == -0.5);
  CHECK_THROWS_AS(f.at(3, 0), BoundsError);
  CHECK_THROWS_AS(f.at(0, 2), BoundsError);
  CHECK_THROWS_AS(f.set(0, 0, -1.0001), InputError);
  f.set(0, 0, 0.75);
  CHECK(f.values()[0] == 0.75);
}

TEST_CASE("mask counts and bounds") {
  Mask m(4, 3);
  CHECK(m.count() == 0);
  m.set(1, 2, true);
  m.set(3, 0, true);
  CHECK(m.count() == 2);
  CHECK(m[2 * 4 + 1]);
  CHECK(m.at(3, 0));
  CHECK_THROWS_AS(m.at(4, 0), BoundsError);
}

TEST_CASE("correspondence set validation") {
  CorrespondenceSet c;
  CHECK_THROWS_AS(c.validate(), InputError);
  c.source = {{0, 0}, {1, 1}};
  c.target = {{0, 0}};
  CHECK_THROWS_AS(c.validate(), InputError);
  c.target.push_back({std::numeric_limits<double>::infinity(), 0});
  CHECK_THROWS_AS(c.validate(), InputError);
  c.target.back() = {2, 2};
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("lift, project and residual") {
  const DepthField f = DepthField::from_values(2, 2, {0.1, 0.2, 0.3, 0.4});
  const HPoint3 x = lift({1, 1}, f);
  CHECK(x.x == 1.0);
  CHECK(x.y == 1.0);
  CHECK(x.d == 0.4);
  CHECK(x.w == 1.0);

  AffineCamera cam;
  cam.p << 1, 0, 2, 3,
           0, 1, -1, 5;
  const Pixel2 p = project(cam, x);
  CHECK(p.x == doctest::Approx(1 + 0.8 + 3));
  CHECK(p.y == doctest::Approx(1 - 0.4 + 5));
  CHECK(reprojection_residual(cam, {1, 1}, {p.x + 3, p.y + 4}, f) == doctest::Approx(5.0));
  CHECK(cam.depth_column() == Eigen::Vector2d(2, -1));
}

TEST_CASE("pixel index rejects off-grid and out-of-range sources") {
  const DepthField f(4, 4);
  CHECK(pixel_index({3, 2}, f) == 11);
  CHECK_THROWS_AS(pixel_index({4, 0}, f), BoundsError);
  CHECK_THROWS_AS(pixel_index({-1, 0}, f), BoundsError);
  CHECK_THROWS_AS(pixel_index({1.5, 0}, f), InputError);
  try {
    (void)pixel_index({1.5, 0}, f);
  } catch (const BoundsError&) {
    FAIL("non-integer source should not be a bounds error");
  } catch (const InputError&) {
  }
}

TEST_CASE("snap rounds sources and reports displacement") {
  CorrespondenceSet c;
  c.source = {{1.0, 2.0}, {1.4, 2.6}, {3.0, 0.2}};
  c.target = {{0, 0}, {1, 1}, {2, 2}};
  const SnapReport r = snap_sources(c);
  CHECK(r.snapped == 2);
  CHECK(r.max_displacement == doctest::Approx(std::hypot(0.4, 0.4)));
  CHECK(c.source[1].x == 1.0);
  CHECK(c.source[1].y == 3.0);
  CHECK(c.target[1].x == 1.0);
}
