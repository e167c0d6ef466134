#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "corrdepth/geometry.hpp"

namespace corrdepth {

enum class SurfaceKind { gaussian_bumps, saddle, hemisphere, ridge_mix };

std::string_view to_string(SurfaceKind kind);
/// Accepts "gaussian-bumps", "saddle", "hemisphere", "ridge-mix".
SurfaceKind parse_surface_kind(std::string_view name);

struct ViewSpec {
  double azimuth = 0.0;    ///< degrees, [0, 360)
  double elevation = 0.0;  ///< degrees, [-45, 45]
};

/// Height-field surface over the unit disc, seen orthographically from each view.
///
/// surface_params by kind (an empty list selects the defaults shown):
///   gaussian-bumps  groups of (amplitude, centre u, centre v, sigma)
///   saddle          (a, b) for h = a u^2 - b v^2                      [0.6, 0.6]
///   hemisphere      (radius) for h = sqrt(radius^2 - u^2 - v^2)      [0.9]
///   ridge-mix       (amplitude, fu, fv) for
///                   h = amplitude (0.6 cos(pi fu u) + 0.4 cos(pi fv v))  [0.5, 1.5, 1.0]
struct SceneSpec {
  SurfaceKind surface_kind = SurfaceKind::hemisphere;
  std::vector<double> surface_params;
  std::size_t width = 32;
  std::size_t height = 32;
  std::vector<ViewSpec> views;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CorruptionSpec {
  double gaussian_sigma = 0.0;     ///< pixels, added to every target
  double outlier_fraction = 0.0;   ///< ceil(fraction * N) targets are displaced
  double outlier_magnitude = 0.0;  ///< pixels, random direction
  std::uint64_t seed = 0;

  void validate() const;
};

struct RenderedView {
  DepthField depth;  ///< 0 outside the mask
  Mask mask;         ///< pixels whose ray hits the surface
};

/// Object-space height; only meaningful inside the unit disc.
double surface_height(const SceneSpec& spec, double u, double v);

/// Orthographic depth (larger = nearer) normalised into [-1, 1].
RenderedView render_view(const SceneSpec& spec, std::size_t view_index);
DepthField render_depth(const SceneSpec& spec, std::size_t view_index);

/// Exact affine map of [x, y, d, 1] from view a's pixel frame into view b's.
Eigen::Matrix4d view_transform(const SceneSpec& spec, std::size_t from, std::size_t to);

/// First two rows of view_transform: the affine camera from a's lifted frame into b.
AffineCamera ground_truth_camera(const SceneSpec& spec, std::size_t from, std::size_t to);

/// Samples n_points distinct visible source pixels and maps them exactly into
/// the target view. Throws InsufficientSupport if fewer pixels are visible.
CorrespondenceSet generate_correspondences(const SceneSpec& spec, std::size_t src_view,
                                           std::size_t tgt_view, std::size_t n_points);

/// Every visible source pixel, in raster order.
CorrespondenceSet generate_dense_correspondences(const SceneSpec& spec, std::size_t src_view,
                                                 std::size_t tgt_view);

/// Gaussian noise on every target, then a random subset displaced as outliers.
CorrespondenceSet corrupt(const CorrespondenceSet& corr, const CorruptionSpec& c);

SceneSpec parse_scene_spec(std::string_view json_text);
SceneSpec load_scene_spec(const std::string& path);
std::string scene_spec_to_json(const SceneSpec& spec);

}  // namespace corrdepth
