#include "corrdepth/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "corrdepth/error.hpp"

namespace corrdepth {

namespace {

void check_range(double v) {
  if (!std::isfinite(v) || v < -1.0 || v > 1.0) {
    throw InputError("depth value " + std::to_string(v) + " outside [-1, 1]");
  }
}

}  // namespace

DepthField::DepthField(std::size_t width, std::size_t height, double fill)
    : DepthField(width, height, std::vector<double>(width * height, fill)) {}

DepthField::DepthField(std::size_t width, std::size_t height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width_ == 0 || height_ == 0) throw InputError("depth field dimensions must be positive");
  if (values_.size() != width_ * height_) throw InputError("depth field value count does not match W*H");
  for (double v : values_) check_range(v);
}

DepthField DepthField::from_values(std::size_t width, std::size_t height, std::vector<double> values) {
  return DepthField(width, height, std::move(values));
}

double DepthField::at(std::size_t x, std::size_t y) const {
  if (!contains(x, y)) {
    throw BoundsError("pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") outside " +
                      std::to_string(width_) + "x" + std::to_string(height_) + " field");
  }
  return values_[index(x, y)];
}

void DepthField::set(std::size_t x, std::size_t y, double value) {
  if (!contains(x, y)) throw BoundsError("pixel outside depth field");
  check_range(value);
  values_[index(x, y)] = value;
}

Mask::Mask(std::size_t width, std::size_t height, bool fill)
    : width_(width), height_(height), bits_(width * height, fill ? 1 : 0) {
  if (width_ == 0 || height_ == 0) throw InputError("mask dimensions must be positive");
}

std::size_t Mask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool Mask::at(std::size_t x, std::size_t y) const {
  if (x >= width_ || y >= height_) throw BoundsError("pixel outside mask");
  return bits_[y * width_ + x] != 0;
}

void Mask::set(std::size_t x, std::size_t y, bool value) {
  if (x >= width_ || y >= height_) throw BoundsError("pixel outside mask");
  bits_[y * width_ + x] = value ? 1 : 0;
}

void CorrespondenceSet::validate() const {
  if (source.empty()) throw InputError("correspondence set is empty");
  if (source.size() != target.size()) throw InputError("source and target lists differ in length");
  auto finite = [](const Pixel2& p) { return std::isfinite(p.x) && std::isfinite(p.y); };
  if (!std::all_of(source.begin(), source.end(), finite) ||
      !std::all_of(target.begin(), target.end(), finite)) {
    throw InputError("correspondence set contains non-finite coordinates");
  }
}

SnapReport snap_sources(CorrespondenceSet& corr) {
  SnapReport report;
  for (auto& p : corr.source) {
    const double rx = std::round(p.x);
    const double ry = std::round(p.y);
    const double dist = std::hypot(rx - p.x, ry - p.y);
    if (dist > 0.0) {
      ++report.snapped;
      report.max_displacement = std::max(report.max_displacement, dist);
    }
    p = {rx, ry};
  }
  return report;
}

std::size_t pixel_index(const Pixel2& pix, const DepthField& depth_field) {
  if (!(pix.x >= 0.0 && pix.y >= 0.0 && pix.x < static_cast<double>(depth_field.width()) &&
        pix.y < static_cast<double>(depth_field.height()))) {
    throw BoundsError("source pixel (" + std::to_string(pix.x) + ", " + std::to_string(pix.y) +
                      ") outside " + std::to_string(depth_field.width()) + "x" +
                      std::to_string(depth_field.height()) + " depth field");
  }
  if (pix.x != std::floor(pix.x) || pix.y != std::floor(pix.y)) {
    throw InputError("source pixel is not at an integer location; snap correspondences first");
  }
  return depth_field.index(static_cast<std::size_t>(pix.x), static_cast<std::size_t>(pix.y));
}

HPoint3 lift(const Pixel2& pix, const DepthField& depth_field) {
  const std::size_t i = pixel_index(pix, depth_field);
  return {pix.x, pix.y, depth_field.values()[i], 1.0};
}

Pixel2 project(const AffineCamera& cam, const HPoint3& pt) {
  const auto& p = cam.p;
  return {p(0, 0) * pt.x + p(0, 1) * pt.y + p(0, 2) * pt.d + p(0, 3) * pt.w,
          p(1, 0) * pt.x + p(1, 1) * pt.y + p(1, 2) * pt.d + p(1, 3) * pt.w};
}

double reprojection_residual(const AffineCamera& cam, const Pixel2& src, const Pixel2& tgt,
                             const DepthField& depth_field) {
  const Pixel2 q = project(cam, lift(src, depth_field));
  const double dx = q.x - tgt.x;
  const double dy = q.y - tgt.y;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace corrdepth
