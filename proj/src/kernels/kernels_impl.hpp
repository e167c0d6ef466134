#pragma once

#include "corrdepth/kernels.hpp"

namespace corrdepth::kernels {

namespace scalar {
void residuals(const Camera8& p, const PointBatch& b, std::span<double> out);
InlierTally tally_inliers(const Camera8& p, const PointBatch& b, double threshold,
                          std::span<std::uint8_t> mask);
double robust_sum(std::span<const double> args, double tau);
void sgd_step(std::span<double> depth, std::span<double> velocity, std::span<const double> grad,
              const SgdParams& s);
ErrorSums error_sums(std::span<const double> pred, std::span<const double> gt,
                     std::span<const std::uint8_t> mask);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define CORRDEPTH_HAVE_AVX2_KERNELS 1
namespace avx2 {
void residuals(const Camera8& p, const PointBatch& b, std::span<double> out);
InlierTally tally_inliers(const Camera8& p, const PointBatch& b, double threshold,
                          std::span<std::uint8_t> mask);
double robust_sum(std::span<const double> args, double tau);
void sgd_step(std::span<double> depth, std::span<double> velocity, std::span<const double> grad,
              const SgdParams& s);
ErrorSums error_sums(std::span<const double> pred, std::span<const double> gt,
                     std::span<const std::uint8_t> mask);
}  // namespace avx2
#else
#define CORRDEPTH_HAVE_AVX2_KERNELS 0
#endif

}  // namespace corrdepth::kernels
