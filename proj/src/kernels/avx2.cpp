#include "kernels_impl.hpp"

#if CORRDEPTH_HAVE_AVX2_KERNELS

#include <immintrin.h>

#include <cmath>
#include <cstring>

// Compiled for AVX2 only (no FMA) so element-wise results match the scalar
// reference exactly. Callers reach this code only after a CPUID check.
#define CORRDEPTH_AVX2 __attribute__((target("avx2")))

namespace corrdepth::kernels::avx2 {

namespace {

struct CameraLanes {
  __m256d p[8];
};

CORRDEPTH_AVX2 inline CameraLanes broadcast(const Camera8& p) {
  CameraLanes c;
  for (int k = 0; k < 8; ++k) c.p[k] = _mm256_set1_pd(p[k]);
  return c;
}

// Same operation order as the scalar loop: ((p0*x + p1*y) + p2*d) + p3 - t.
CORRDEPTH_AVX2 inline __m256d residual4(const CameraLanes& c, const PointBatch& b, std::size_t i) {
  const __m256d x = _mm256_loadu_pd(b.xs.data() + i);
  const __m256d y = _mm256_loadu_pd(b.ys.data() + i);
  const __m256d d = _mm256_loadu_pd(b.ds.data() + i);
  __m256d ex = _mm256_add_pd(_mm256_mul_pd(c.p[0], x), _mm256_mul_pd(c.p[1], y));
  ex = _mm256_add_pd(ex, _mm256_mul_pd(c.p[2], d));
  ex = _mm256_add_pd(ex, c.p[3]);
  ex = _mm256_sub_pd(ex, _mm256_loadu_pd(b.xt.data() + i));
  __m256d ey = _mm256_add_pd(_mm256_mul_pd(c.p[4], x), _mm256_mul_pd(c.p[5], y));
  ey = _mm256_add_pd(ey, _mm256_mul_pd(c.p[6], d));
  ey = _mm256_add_pd(ey, c.p[7]);
  ey = _mm256_sub_pd(ey, _mm256_loadu_pd(b.yt.data() + i));
  return _mm256_sqrt_pd(_mm256_add_pd(_mm256_mul_pd(ex, ex), _mm256_mul_pd(ey, ey)));
}

CORRDEPTH_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

CORRDEPTH_AVX2 void residuals(const Camera8& p, const PointBatch& b, std::span<double> out) {
  const std::size_t n = b.size();
  const CameraLanes c = broadcast(p);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out.data() + i, residual4(c, b, i));
  if (i < n) {
    const PointBatch tail{b.xs.subspan(i), b.ys.subspan(i), b.ds.subspan(i), b.xt.subspan(i),
                          b.yt.subspan(i)};
    scalar::residuals(p, tail, out.subspan(i));
  }
}

CORRDEPTH_AVX2 InlierTally tally_inliers(const Camera8& p, const PointBatch& b, double threshold,
                                         std::span<std::uint8_t> mask) {
  const std::size_t n = b.size();
  const CameraLanes c = broadcast(p);
  const __m256d thr = _mm256_set1_pd(threshold);
  __m256d rsum = _mm256_setzero_pd();
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = residual4(c, b, i);
    const __m256d in = _mm256_cmp_pd(r, thr, _CMP_LT_OQ);
    const int bits = _mm256_movemask_pd(in);
    count += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(bits)));
    rsum = _mm256_add_pd(rsum, _mm256_and_pd(in, r));
    if (!mask.empty()) {
      for (int k = 0; k < 4; ++k) mask[i + k] = static_cast<std::uint8_t>((bits >> k) & 1);
    }
  }
  InlierTally t{count, hsum(rsum)};
  if (i < n) {
    const PointBatch tail{b.xs.subspan(i), b.ys.subspan(i), b.ds.subspan(i), b.xt.subspan(i),
                          b.yt.subspan(i)};
    const InlierTally rest =
        scalar::tally_inliers(p, tail, threshold, mask.empty() ? mask : mask.subspan(i));
    t.count += rest.count;
    t.residual_sum += rest.residual_sum;
  }
  return t;
}

CORRDEPTH_AVX2 double robust_sum(std::span<const double> args, double tau) {
  const std::size_t n = args.size();
  const double tau2s = tau * tau;
  const __m256d tau2 = _mm256_set1_pd(tau2s);
  const __m256d cap = _mm256_set1_pd(0.25 * tau2s);
  const __m256d two_tau2 = _mm256_set1_pd(2.0 * tau2s);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d x = _mm256_loadu_pd(args.data() + i);
    const __m256d x2 = _mm256_mul_pd(x, x);
    const __m256d quartic =
        _mm256_mul_pd(_mm256_mul_pd(half, x2), _mm256_sub_pd(one, _mm256_div_pd(x2, two_tau2)));
    const __m256d inside = _mm256_cmp_pd(x2, tau2, _CMP_LE_OQ);
    acc = _mm256_add_pd(acc, _mm256_blendv_pd(cap, quartic, inside));
  }
  double sum = hsum(acc);
  if (i < n) sum += scalar::robust_sum(args.subspan(i), tau);
  return sum;
}

CORRDEPTH_AVX2 void sgd_step(std::span<double> depth, std::span<double> velocity,
                             std::span<const double> grad, const SgdParams& s) {
  const std::size_t n = depth.size();
  const __m256d hi_g = _mm256_set1_pd(s.grad_clamp);
  const __m256d lo_g = _mm256_set1_pd(-s.grad_clamp);
  const __m256d mu = _mm256_set1_pd(s.momentum);
  const __m256d lr = _mm256_set1_pd(s.learning_rate);
  const __m256d lo = _mm256_set1_pd(s.lower);
  const __m256d hi = _mm256_set1_pd(s.upper);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_min_pd(_mm256_max_pd(_mm256_loadu_pd(grad.data() + i), lo_g), hi_g);
    const __m256d v = _mm256_add_pd(_mm256_mul_pd(mu, _mm256_loadu_pd(velocity.data() + i)), g);
    _mm256_storeu_pd(velocity.data() + i, v);
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(depth.data() + i), _mm256_mul_pd(lr, v));
    _mm256_storeu_pd(depth.data() + i, _mm256_min_pd(_mm256_max_pd(d, lo), hi));
  }
  if (i < n) scalar::sgd_step(depth.subspan(i), velocity.subspan(i), grad.subspan(i), s);
}

CORRDEPTH_AVX2 ErrorSums error_sums(std::span<const double> pred, std::span<const double> gt,
                                    std::span<const std::uint8_t> mask) {
  const std::size_t n = pred.size();
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d a_abs = _mm256_setzero_pd();
  __m256d a_sq = _mm256_setzero_pd();
  __m256d a_rabs = _mm256_setzero_pd();
  __m256d a_rsq = _mm256_setzero_pd();
  std::size_t count = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    int packed;
    std::memcpy(&packed, mask.data() + i, sizeof(packed));
    const __m256d m = _mm256_castsi256_pd(_mm256_cmpgt_epi64(
        _mm256_cvtepu8_epi64(_mm_cvtsi32_si128(packed)), _mm256_setzero_si256()));
    count += static_cast<std::size_t>(
        __builtin_popcount(static_cast<unsigned>(_mm256_movemask_pd(m))));
    const __m256d g = _mm256_loadu_pd(gt.data() + i);
    const __m256d e = _mm256_sub_pd(_mm256_loadu_pd(pred.data() + i), g);
    const __m256d ae = _mm256_andnot_pd(sign, e);
    // Unmasked lanes may hold g == 0; divide by 1 there instead.
    const __m256d ag = _mm256_blendv_pd(_mm256_set1_pd(1.0), _mm256_andnot_pd(sign, g), m);
    const __m256d e2 = _mm256_mul_pd(e, e);
    a_abs = _mm256_add_pd(a_abs, _mm256_and_pd(m, ae));
    a_sq = _mm256_add_pd(a_sq, _mm256_and_pd(m, e2));
    a_rabs = _mm256_add_pd(a_rabs, _mm256_and_pd(m, _mm256_div_pd(ae, ag)));
    a_rsq = _mm256_add_pd(a_rsq, _mm256_and_pd(m, _mm256_div_pd(e2, ag)));
  }
  ErrorSums s{hsum(a_abs), hsum(a_sq), hsum(a_rabs), hsum(a_rsq), count};
  if (i < n) {
    const ErrorSums rest = scalar::error_sums(pred.subspan(i), gt.subspan(i), mask.subspan(i));
    s.abs += rest.abs;
    s.sq += rest.sq;
    s.rel_abs += rest.rel_abs;
    s.rel_sq += rest.rel_sq;
    s.count += rest.count;
  }
  return s;
}

}  // namespace corrdepth::kernels::avx2

#endif  // CORRDEPTH_HAVE_AVX2_KERNELS
