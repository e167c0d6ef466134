#include "corrdepth/robust_loss.hpp"

#include <cmath>
#include <vector>

#include "corrdepth/error.hpp"
#include "corrdepth/kernels.hpp"
#include "lifted_batch.hpp"

namespace corrdepth {

void RobustParams::validate() const {
  if (!(tau > 0.0)) throw InputError("robust threshold tau must be positive");
}

double robust_weight(double x, const RobustParams& params) {
  const double tau2 = params.tau * params.tau;
  const double x2 = x * x;
  if (x2 <= tau2) return 0.5 * x2 * (1.0 - x2 / (2.0 * tau2));
  return 0.25 * tau2;
}

double robust_weight_grad(double x, const RobustParams& params) {
  const double tau2 = params.tau * params.tau;
  if (x * x <= tau2) return x - x * x * x / tau2;
  return 0.0;
}

double robust_argument(double residual, const RobustParams& params) {
  const double r = residual < kZeroResidual ? 0.0 : residual;
  return params.argument == RobustArgument::squared_distance ? r * r : r;
}

double corr_loss(const AffineCamera& cam, const CorrespondenceSet& corr,
                 const DepthField& depth_field, const RobustParams& params) {
  params.validate();
  corr.validate();
  const detail::LiftedBatch lifted(corr, depth_field);
  const auto& kt = kernels::active();
  std::vector<double> args(lifted.size());
  kt.residuals(detail::flatten(cam), lifted.batch(), args);
  for (double& a : args) a = robust_argument(a, params);
  return kt.robust_sum(args, params.tau) / static_cast<double>(lifted.size());
}

}  // namespace corrdepth
