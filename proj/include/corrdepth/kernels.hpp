#pragma once

// Batched inner loops with a scalar reference and an AVX2 variant.
//
// Element-wise kernels (residuals, tally_inliers, sgd_step) avoid fused
// multiply-add on every path, so both variants agree bit for bit. Reductions
// (robust_sum, error_sums) accumulate in four lanes on AVX2 and therefore only
// agree with the scalar reference to rounding.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace corrdepth::kernels {

enum class Isa { scalar, avx2 };

/// Row-major 2x4 camera entries.
using Camera8 = std::array<double, 8>;

/// Structure-of-arrays view over lifted source points and their targets.
struct PointBatch {
  std::span<const double> xs;
  std::span<const double> ys;
  std::span<const double> ds;
  std::span<const double> xt;
  std::span<const double> yt;

  std::size_t size() const noexcept { return xs.size(); }
};

struct InlierTally {
  std::size_t count = 0;
  double residual_sum = 0.0;  ///< sum of residuals over inliers
};

struct SgdParams {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double grad_clamp = 5.0;
  double lower = -1.0;
  double upper = 1.0;
};

struct ErrorSums {
  double abs = 0.0;
  double sq = 0.0;
  double rel_abs = 0.0;
  double rel_sq = 0.0;
  std::size_t count = 0;
};

// out[i] = || P [xs, ys, ds, 1] - [xt, yt] ||_2
using ResidualsFn = void (*)(const Camera8&, const PointBatch&, std::span<double>);
// Residual < threshold marks an inlier. mask may be empty.
using TallyFn = InlierTally (*)(const Camera8&, const PointBatch&, double, std::span<std::uint8_t>);
// Sum of the robust kernel over already-formed arguments.
using RobustSumFn = double (*)(std::span<const double>, double);
// Clamp gradient, fold into velocity, step, clip into [lower, upper].
using SgdStepFn = void (*)(std::span<double>, std::span<double>, std::span<const double>, const SgdParams&);
// Masked sums of |e|, e^2, |e|/|g|, e^2/|g| with e = pred - gt.
using ErrorSumsFn = ErrorSums (*)(std::span<const double>, std::span<const double>,
                                  std::span<const std::uint8_t>);

struct KernelTable {
  Isa isa;
  ResidualsFn residuals;
  TallyFn tally_inliers;
  RobustSumFn robust_sum;
  SgdStepFn sgd_step;
  ErrorSumsFn error_sums;
};

const KernelTable& scalar_table();
/// Only meaningful when isa_available(Isa::avx2).
const KernelTable& avx2_table();

bool isa_available(Isa isa);
const char* isa_name(Isa isa);

/// Table picked at first use: AVX2 when the CPU supports it, unless the
/// environment variable CORRDEPTH_FORCE_SCALAR is set.
const KernelTable& active();
/// Test hook; throws InputError when the requested ISA is unavailable.
void force_isa(Isa isa);

}  // namespace corrdepth::kernels
