#include "corrdepth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Geometry>
#include <json.hpp>

#include "corrdepth/error.hpp"
#include "seeding.hpp"

namespace corrdepth {

namespace {

constexpr double kImageHalfExtent = 1.4;  // object units visible from image centre to edge
constexpr double kDepthExtent = 1.5;      // camera-frame depth mapped to +-1
constexpr int kMarchSteps = 768;
constexpr int kBisectSteps = 200;

const std::vector<double>& default_params(SurfaceKind kind) {
  static const std::vector<double> bumps{0.7,  0.0,  0.0, 0.35, 0.35, 0.5,  0.0,  0.2, 0.35, -0.5,
                                         0.0,  0.2,  0.35, 0.0, 0.5,  0.2,  0.35, 0.0, -0.5, 0.2};
  static const std::vector<double> saddle{0.6, 0.6};
  static const std::vector<double> hemi{0.9};
  static const std::vector<double> ridge{0.5, 1.5, 1.0};
  switch (kind) {
    case SurfaceKind::gaussian_bumps: return bumps;
    case SurfaceKind::saddle: return saddle;
    case SurfaceKind::hemisphere: return hemi;
    case SurfaceKind::ridge_mix: return ridge;
  }
  return hemi;
}

const std::vector<double>& params_of(const SceneSpec& spec) {
  return spec.surface_params.empty() ? default_params(spec.surface_kind) : spec.surface_params;
}

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

/// Object frame (u right, v up, h toward the frontal camera) to camera frame.
Eigen::Matrix3d view_rotation(const ViewSpec& view) {
  const Eigen::Matrix3d ry = Eigen::AngleAxisd(deg2rad(view.azimuth), Eigen::Vector3d::UnitY()).toRotationMatrix();
  const Eigen::Matrix3d rx = Eigen::AngleAxisd(-deg2rad(view.elevation), Eigen::Vector3d::UnitX()).toRotationMatrix();
  return rx * ry;
}

struct PixelFrame {
  double ox, oy, scale;
};

PixelFrame pixel_frame(const SceneSpec& spec) {
  const double span = static_cast<double>(std::min(spec.width, spec.height) - 1);
  return {0.5 * static_cast<double>(spec.width - 1), 0.5 * static_cast<double>(spec.height - 1),
          span / (2.0 * kImageHalfExtent)};
}

/// [px, py, d, 1] -> [cx, cy, cz, 1]
Eigen::Matrix4d pixel_to_camera(const PixelFrame& f) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m(0, 0) = 1.0 / f.scale;
  m(0, 3) = -f.ox / f.scale;
  m(1, 1) = -1.0 / f.scale;
  m(1, 3) = f.oy / f.scale;
  m(2, 2) = kDepthExtent;
  m(3, 3) = 1.0;
  return m;
}

Eigen::Matrix4d camera_to_pixel(const PixelFrame& f) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m(0, 0) = f.scale;
  m(0, 3) = f.ox;
  m(1, 1) = -f.scale;
  m(1, 3) = f.oy;
  m(2, 2) = 1.0 / kDepthExtent;
  m(3, 3) = 1.0;
  return m;
}

bool in_support(double u, double v) { return u * u + v * v <= 1.0; }

void check_view(const SceneSpec& spec, std::size_t i) {
  if (i >= spec.views.size()) {
    throw InputError("view index " + std::to_string(i) + " out of range (" +
                     std::to_string(spec.views.size()) + " views)");
  }
}

}  // namespace

std::string_view to_string(SurfaceKind kind) {
  switch (kind) {
    case SurfaceKind::gaussian_bumps: return "gaussian-bumps";
    case SurfaceKind::saddle: return "saddle";
    case SurfaceKind::hemisphere: return "hemisphere";
    case SurfaceKind::ridge_mix: return "ridge-mix";
  }
  return "?";
}

SurfaceKind parse_surface_kind(std::string_view name) {
  for (auto k : {SurfaceKind::gaussian_bumps, SurfaceKind::saddle, SurfaceKind::hemisphere,
                 SurfaceKind::ridge_mix}) {
    if (name == to_string(k)) return k;
  }
  throw ParseError("unknown surface_kind '" + std::string(name) + "'");
}

void SceneSpec::validate() const {
  if (views.size() < 2) throw InputError("scene needs at least 2 views, got " + std::to_string(views.size()));
  if (width < 16 || height < 16) throw InputError("scene resolution must be at least 16x16");
  for (const auto& v : views) {
    if (!(v.azimuth >= 0.0 && v.azimuth < 360.0)) throw InputError("view azimuth must lie in [0, 360)");
    if (!(v.elevation >= -45.0 && v.elevation <= 45.0)) throw InputError("view elevation must lie in [-45, 45]");
  }
  const auto& p = params_of(*this);
  switch (surface_kind) {
    case SurfaceKind::gaussian_bumps:
      if (p.size() % 4 != 0) throw InputError("gaussian-bumps params come in groups of 4");
      for (std::size_t i = 0; i < p.size(); i += 4)
        if (!(p[i + 3] > 0.0)) throw InputError("gaussian-bumps sigma must be positive");
      break;
    case SurfaceKind::saddle:
      if (p.size() != 2) throw InputError("saddle takes 2 params");
      break;
    case SurfaceKind::hemisphere:
      if (p.size() != 1 || !(p[0] > 0.0 && p[0] <= 1.0)) throw InputError("hemisphere takes 1 radius in (0, 1]");
      break;
    case SurfaceKind::ridge_mix:
      if (p.size() != 3) throw InputError("ridge-mix takes 3 params");
      break;
  }
  // The depth normalisation assumes |h| stays well inside the depth extent.
  for (double u = -1.0; u <= 1.0; u += 0.05)
    for (double v = -1.0; v <= 1.0; v += 0.05)
      if (in_support(u, v) && std::fabs(surface_height(*this, u, v)) > 1.1)
        throw InputError("surface height exceeds 1.1 object units; reduce amplitude");
}

void CorruptionSpec::validate() const {
  if (!(gaussian_sigma >= 0.0) || !(outlier_magnitude >= 0.0)) throw InputError("corruption magnitudes must be nonnegative");
  if (!(outlier_fraction >= 0.0 && outlier_fraction <= 1.0)) throw InputError("outlier fraction must lie in [0, 1]");
}

double surface_height(const SceneSpec& spec, double u, double v) {
  const auto& p = params_of(spec);
  switch (spec.surface_kind) {
    case SurfaceKind::gaussian_bumps: {
      double h = 0.0;
      for (std::size_t i = 0; i + 3 < p.size(); i += 4) {
        const double du = u - p[i + 1];
        const double dv = v - p[i + 2];
        h += p[i] * std::exp(-(du * du + dv * dv) / (2.0 * p[i + 3] * p[i + 3]));
      }
      return h;
    }
    case SurfaceKind::saddle:
      return p[0] * u * u - p[1] * v * v;
    case SurfaceKind::hemisphere: {
      const double r2 = p[0] * p[0] - u * u - v * v;
      return r2 > 0.0 ? std::sqrt(r2) : 0.0;
    }
    case SurfaceKind::ridge_mix:
      return p[0] * (0.6 * std::cos(std::numbers::pi * p[1] * u) +
                     0.4 * std::cos(std::numbers::pi * p[2] * v));
  }
  return 0.0;
}

RenderedView render_view(const SceneSpec& spec, std::size_t view_index) {
  spec.validate();
  check_view(spec, view_index);
  const PixelFrame frame = pixel_frame(spec);
  const Eigen::Matrix3d rt = view_rotation(spec.views[view_index]).transpose();
  const Eigen::Vector3d axis = rt.col(2);  // object-frame direction of camera +z

  RenderedView out{DepthField(spec.width, spec.height), Mask(spec.width, spec.height)};
  auto depth = out.depth.mutable_values();

  for (std::size_t py = 0; py < spec.height; ++py) {
    for (std::size_t px = 0; px < spec.width; ++px) {
      const double cx = (static_cast<double>(px) - frame.ox) / frame.scale;
      const double cy = (frame.oy - static_cast<double>(py)) / frame.scale;
      const Eigen::Vector3d base = rt * Eigen::Vector3d(cx, cy, 0.0);
      auto gap = [&](double z, bool& inside) {
        const Eigen::Vector3d o = base + z * axis;
        inside = in_support(o.x(), o.y());
        return inside ? o.z() - surface_height(spec, o.x(), o.y()) : 0.0;
      };

      // March from the camera side; the first sign change of the height gap
      // inside the support is the visible hit.
      bool prev_in = false;
      double prev_z = kDepthExtent;
      double prev_f = gap(prev_z, prev_in);
      for (int s = 1; s <= kMarchSteps; ++s) {
        const double z = kDepthExtent - 2.0 * kDepthExtent * s / kMarchSteps;
        bool in = false;
        const double f = gap(z, in);
        if (in && prev_in && ((prev_f > 0.0) != (f > 0.0) || f == 0.0)) {
          double hi = prev_z, lo = z, f_hi = prev_f;
          for (int b = 0; b < kBisectSteps && hi - lo > 0.0; ++b) {
            const double mid = 0.5 * (hi + lo);
            if (mid == hi || mid == lo) break;
            bool mid_in = false;
            const double f_mid = gap(mid, mid_in);
            if ((f_mid > 0.0) == (f_hi > 0.0)) {
              hi = mid;
              f_hi = f_mid;
            } else {
              lo = mid;
            }
          }
          const std::size_t k = out.depth.index(px, py);
          depth[k] = std::clamp(0.5 * (hi + lo) / kDepthExtent, -1.0, 1.0);
          out.mask.set(px, py, true);
          break;
        }
        prev_in = in;
        prev_z = z;
        prev_f = f;
      }
    }
  }
  return out;
}

DepthField render_depth(const SceneSpec& spec, std::size_t view_index) {
  return render_view(spec, view_index).depth;
}

Eigen::Matrix4d view_transform(const SceneSpec& spec, std::size_t from, std::size_t to) {
  check_view(spec, from);
  check_view(spec, to);
  const PixelFrame frame = pixel_frame(spec);
  Eigen::Matrix4d rot = Eigen::Matrix4d::Identity();
  rot.topLeftCorner<3, 3>() = view_rotation(spec.views[to]) * view_rotation(spec.views[from]).transpose();
  return camera_to_pixel(frame) * rot * pixel_to_camera(frame);
}

AffineCamera ground_truth_camera(const SceneSpec& spec, std::size_t from, std::size_t to) {
  AffineCamera cam;
  cam.p = view_transform(spec, from, to).topRows<2>();
  return cam;
}

namespace {

CorrespondenceSet map_pixels(const SceneSpec& spec, const RenderedView& src,
                             const std::vector<std::size_t>& pixels, std::size_t from, std::size_t to) {
  const AffineCamera cam = ground_truth_camera(spec, from, to);
  CorrespondenceSet corr;
  corr.source.reserve(pixels.size());
  corr.target.reserve(pixels.size());
  for (std::size_t k : pixels) {
    const Pixel2 s{static_cast<double>(k % spec.width), static_cast<double>(k / spec.width)};
    corr.source.push_back(s);
    corr.target.push_back(project(cam, lift(s, src.depth)));
  }
  return corr;
}

std::vector<std::size_t> visible_pixels(const RenderedView& v) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < v.mask.size(); ++k)
    if (v.mask[k]) out.push_back(k);
  return out;
}

}  // namespace

CorrespondenceSet generate_correspondences(const SceneSpec& spec, std::size_t src_view,
                                           std::size_t tgt_view, std::size_t n_points) {
  check_view(spec, src_view);
  check_view(spec, tgt_view);
  if (src_view == tgt_view) throw InputError("source and target views must differ");
  if (n_points < 4) throw InputError("need at least 4 correspondences");
  const RenderedView src = render_view(spec, src_view);
  std::vector<std::size_t> pool = visible_pixels(src);
  if (pool.size() < n_points) {
    throw InsufficientSupport("only " + std::to_string(pool.size()) + " visible pixels, " +
                              std::to_string(n_points) + " requested");
  }
  std::mt19937_64 rng(detail::mix_seed(spec.seed, {src_view, tgt_view}));
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(n_points);
  std::sort(pool.begin(), pool.end());
  return map_pixels(spec, src, pool, src_view, tgt_view);
}

CorrespondenceSet generate_dense_correspondences(const SceneSpec& spec, std::size_t src_view,
                                                 std::size_t tgt_view) {
  check_view(spec, src_view);
  check_view(spec, tgt_view);
  if (src_view == tgt_view) throw InputError("source and target views must differ");
  const RenderedView src = render_view(spec, src_view);
  const std::vector<std::size_t> pool = visible_pixels(src);
  if (pool.size() < 4) throw InsufficientSupport("fewer than 4 visible pixels");
  return map_pixels(spec, src, pool, src_view, tgt_view);
}

CorrespondenceSet corrupt(const CorrespondenceSet& corr, const CorruptionSpec& c) {
  c.validate();
  CorrespondenceSet out = corr;
  std::mt19937_64 rng(c.seed);
  if (c.gaussian_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, c.gaussian_sigma);
    for (auto& t : out.target) {
      t.x += noise(rng);
      t.y += noise(rng);
    }
  }
  const auto n_out = static_cast<std::size_t>(std::ceil(c.outlier_fraction * static_cast<double>(out.size())));
  if (n_out > 0) {
    std::vector<std::size_t> idx(out.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    for (std::size_t k = 0; k < std::min(n_out, idx.size()); ++k) {
      const double a = angle(rng);
      out.target[idx[k]].x += c.outlier_magnitude * std::cos(a);
      out.target[idx[k]].y += c.outlier_magnitude * std::sin(a);
    }
  }
  return out;
}

namespace {

using nlohmann::json;

template <typename T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) throw ParseError(std::string("scene spec: missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("scene spec: field '") + name + "': " + e.what());
  }
}

std::size_t line_of(std::string_view text, std::size_t byte) {
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(std::min(byte, text.size())), '\n'));
}

}  // namespace

SceneSpec parse_scene_spec(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError("scene spec: malformed JSON at line " + std::to_string(line_of(json_text, e.byte)) +
                     ": " + e.what());
  }
  if (!j.is_object()) throw ParseError("scene spec: top level must be an object");

  SceneSpec spec;
  spec.surface_kind = parse_surface_kind(field<std::string>(j, "surface_kind"));
  if (j.contains("surface_params")) spec.surface_params = field<std::vector<double>>(j, "surface_params");
  const auto res = field<std::vector<std::size_t>>(j, "resolution");
  if (res.size() != 2) throw ParseError("scene spec: field 'resolution' must be [W, H]");
  spec.width = res[0];
  spec.height = res[1];
  const json& views = j.contains("views") ? j.at("views") : throw ParseError("scene spec: missing field 'views'");
  if (!views.is_array()) throw ParseError("scene spec: field 'views' must be an array");
  for (std::size_t i = 0; i < views.size(); ++i) {
    const json& v = views[i];
    if (!v.is_object()) throw ParseError("scene spec: views[" + std::to_string(i) + "] must be an object");
    ViewSpec vs;
    try {
      vs.azimuth = v.at("azimuth").get<double>();
      vs.elevation = v.at("elevation").get<double>();
    } catch (const json::exception& e) {
      throw ParseError("scene spec: views[" + std::to_string(i) + "]: " + e.what());
    }
    spec.views.push_back(vs);
  }
  spec.seed = j.contains("seed") ? field<std::uint64_t>(j, "seed") : 0;
  spec.validate();
  return spec;
}

SceneSpec load_scene_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scene spec '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene_spec(ss.str());
}

std::string scene_spec_to_json(const SceneSpec& spec) {
  json j;
  j["surface_kind"] = std::string(to_string(spec.surface_kind));
  j["surface_params"] = spec.surface_params;
  j["resolution"] = {spec.width, spec.height};
  j["views"] = json::array();
  for (const auto& v : spec.views) j["views"].push_back({{"azimuth", v.azimuth}, {"elevation", v.elevation}});
  j["seed"] = spec.seed;
  return j.dump(2);
}

}  // namespace corrdepth
