#include "corrdepth/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "corrdepth/error.hpp"
#include "corrdepth/grad_engine.hpp"
#include "seeding.hpp"

namespace corrdepth {

namespace {
constexpr std::size_t kSide = 16;
}

GradInstance make_grad_instance(std::uint64_t seed, std::size_t k) {
  if (k < 8 || k > kSide * kSide) throw InputError("gradcheck instance size must lie in [8, 256]");
  std::mt19937_64 rng(detail::mix_seed(seed, {k}));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  GradInstance inst;
  inst.robust.tau = 5.0;
  std::vector<double> depth(kSide * kSide);
  for (double& d : depth) d = 0.9 * unit(rng);
  inst.depth = DepthField::from_values(kSide, kSide, std::move(depth));

  std::vector<std::size_t> cells(kSide * kSide);
  std::iota(cells.begin(), cells.end(), std::size_t{0});
  std::shuffle(cells.begin(), cells.end(), rng);
  cells.resize(k);

  CameraMatrix p;
  p << 1.0 + 0.2 * unit(rng), 0.2 * unit(rng), 10.0 * unit(rng), 3.0 * unit(rng),
      0.2 * unit(rng), 1.0 + 0.2 * unit(rng), 10.0 * unit(rng), 3.0 * unit(rng);
  const AffineCamera cam{p};

  std::uniform_real_distribution<double> radius(0.5, 8.0);
  std::uniform_real_distribution<double> angle(0.0, 6.283185307179586);
  std::bernoulli_distribution inlier(0.8);
  for (std::size_t c : cells) {
    const Pixel2 src{static_cast<double>(c % kSide), static_cast<double>(c / kSide)};
    const Pixel2 proj = project(cam, lift(src, inst.depth));
    const double r = radius(rng), a = angle(rng);
    inst.corr.source.push_back(src);
    inst.corr.target.push_back({proj.x + r * std::cos(a), proj.y + r * std::sin(a)});
    inst.inlier_mask.push_back(inlier(rng) ? 1 : 0);
  }
  // Keep the minimal case fully determined.
  const auto on = static_cast<std::size_t>(std::count(inst.inlier_mask.begin(), inst.inlier_mask.end(), 1));
  if (on < 8) std::fill(inst.inlier_mask.begin(), inst.inlier_mask.end(), 1);
  return inst;
}

GradCheckResult check_gradient(const GradInstance& inst, double h, bool corrupt_analytic) {
  const LossGradient g = loss_and_grad_fixed_mask(inst.corr, inst.depth, inst.inlier_mask, inst.robust);

  std::vector<double> fd(inst.corr.size());
  std::vector<double> an(inst.corr.size());
  double scale = 0.0;
  for (std::size_t i = 0; i < inst.corr.size(); ++i) {
    const std::size_t px = pixel_index(inst.corr.source[i], inst.depth);
    DepthField plus = inst.depth, minus = inst.depth;
    plus.mutable_values()[px] += h;
    minus.mutable_values()[px] -= h;
    const double lp = fixed_mask_loss(inst.corr, plus, inst.inlier_mask, inst.robust);
    const double lm = fixed_mask_loss(inst.corr, minus, inst.inlier_mask, inst.robust);
    fd[i] = (lp - lm) / (2.0 * h);
    an[i] = g.per_depth[px] * (corrupt_analytic ? 1.01 : 1.0);
    scale = std::max(scale, std::fabs(fd[i]));
  }

  GradCheckResult out;
  out.k = inst.corr.size();
  // Entries far below the largest gradient are compared on that scale, where
  // central-difference round-off would otherwise dominate the ratio.
  const double floor = 1e-6 * scale + 1e-12;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    const double err = std::fabs(an[i] - fd[i]);
    out.max_abs_error = std::max(out.max_abs_error, err);
    out.max_rel_error = std::max(out.max_rel_error, err / std::max({std::fabs(an[i]), std::fabs(fd[i]), floor}));
  }
  return out;
}

}  // namespace corrdepth
