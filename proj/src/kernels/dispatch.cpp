#include <atomic>
#include <cstdlib>
#include <string>

#include "corrdepth/error.hpp"
#include "kernels_impl.hpp"

namespace corrdepth::kernels {

namespace {

const KernelTable kScalar{Isa::scalar,        scalar::residuals, scalar::tally_inliers,
                         scalar::robust_sum, scalar::sgd_step,  scalar::error_sums};

#if CORRDEPTH_HAVE_AVX2_KERNELS
const KernelTable kAvx2{Isa::avx2,         avx2::residuals, avx2::tally_inliers,
                       avx2::robust_sum,   avx2::sgd_step,  avx2::error_sums};
#endif

const KernelTable* pick_default() {
  if (std::getenv("CORRDEPTH_FORCE_SCALAR") != nullptr) return &kScalar;
#if CORRDEPTH_HAVE_AVX2_KERNELS
  if (isa_available(Isa::avx2)) return &kAvx2;
#endif
  return &kScalar;
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> table{pick_default()};
  return table;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable& avx2_table() {
#if CORRDEPTH_HAVE_AVX2_KERNELS
  return kAvx2;
#else
  throw InputError("AVX2 kernels are not compiled for this target");
#endif
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if CORRDEPTH_HAVE_AVX2_KERNELS
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void force_isa(Isa isa) {
  if (!isa_available(isa)) throw InputError(std::string("ISA not available: ") + isa_name(isa));
  slot().store(isa == Isa::avx2 ? &avx2_table() : &kScalar, std::memory_order_release);
}

}  // namespace corrdepth::kernels
