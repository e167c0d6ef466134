#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace corrdepth {

struct Pixel2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Pixel2&) const = default;
};

/// Homogeneous source-view point [x, y, d, 1]. The w component is fixed at 1.
struct HPoint3 {
  double x = 0.0;
  double y = 0.0;
  double d = 0.0;
  double w = 1.0;

  bool operator==(const HPoint3&) const = default;
};

using CameraMatrix = Eigen::Matrix<double, 2, 4>;

/// 2x4 affine projection from the lifted source frame into a target view.
struct AffineCamera {
  CameraMatrix p = CameraMatrix::Zero();

  /// Column holding the response of the projection to depth.
  Eigen::Vector2d depth_column() const { return p.col(2); }
  bool finite() const { return p.allFinite(); }
};

/// Row-major W x H grid of depths, every value in [-1, 1].
class DepthField {
public:
  DepthField(std::size_t width, std::size_t height, double fill = 0.0);

  /// Validates dimensions and range.
  static DepthField from_values(std::size_t width, std::size_t height, std::vector<double> values);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::size_t index(std::size_t x, std::size_t y) const noexcept { return y * width_ + x; }
  bool contains(std::size_t x, std::size_t y) const noexcept { return x < width_ && y < height_; }

  /// Bounds-checked read; throws BoundsError.
  double at(std::size_t x, std::size_t y) const;
  /// Bounds- and range-checked write.
  void set(std::size_t x, std::size_t y, double value);

  std::span<const double> values() const noexcept { return values_; }
  /// Raw access for in-place updates. Callers must keep values inside [-1, 1].
  std::span<double> mutable_values() noexcept { return values_; }

  bool operator==(const DepthField&) const = default;

private:
  DepthField(std::size_t width, std::size_t height, std::vector<double> values);

  std::size_t width_;
  std::size_t height_;
  std::vector<double> values_;
};

/// Boolean pixel mask with the same layout as DepthField.
class Mask {
public:
  Mask(std::size_t width, std::size_t height, bool fill = false);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }
  std::size_t count() const noexcept;

  bool at(std::size_t x, std::size_t y) const;
  void set(std::size_t x, std::size_t y, bool value);
  bool operator[](std::size_t i) const noexcept { return bits_[i] != 0; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  bool operator==(const Mask&) const = default;

private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint8_t> bits_;
};

struct CorrespondenceSet {
  std::vector<Pixel2> source;
  std::vector<Pixel2> target;

  std::size_t size() const noexcept { return source.size(); }
  /// Throws InputError unless both lists are nonempty, equal length and finite.
  void validate() const;
};

struct SnapReport {
  std::size_t snapped = 0;       ///< sources that moved
  double max_displacement = 0.0;  ///< largest Euclidean move, pixels
};

/// Rounds every source point to the nearest integer pixel.
SnapReport snap_sources(CorrespondenceSet& corr);

/// [pix.x, pix.y, depth(pix), 1]. pix must be an integer location inside the field.
HPoint3 lift(const Pixel2& pix, const DepthField& depth_field);

Pixel2 project(const AffineCamera& cam, const HPoint3& pt);

/// ||project(cam, lift(src)) - tgt||_2
double reprojection_residual(const AffineCamera& cam, const Pixel2& src, const Pixel2& tgt,
                             const DepthField& depth_field);

/// Flat index into depth_field for an integer source pixel; throws BoundsError.
std::size_t pixel_index(const Pixel2& pix, const DepthField& depth_field);

}  // namespace corrdepth
