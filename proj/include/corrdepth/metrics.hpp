#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "corrdepth/geometry.hpp"

namespace corrdepth {

/// Unconstrained scalar grid. Aligned predictions and offset ground truth
/// leave [-1, 1], so evaluation works on these rather than DepthField.
struct DepthGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;

  static DepthGrid of(const DepthField& field);
  bool operator==(const DepthGrid&) const = default;
};

/// d* = alpha (d_pred - beta1) + beta2
struct DepthAlignment {
  double alpha = 1.0;
  double beta1 = 0.0;  ///< median of the masked prediction
  double beta2 = 0.0;  ///< median of the masked ground truth
};

enum class AlphaMode {
  shifted,  ///< alpha from median-shifted pred and gt (least squares for the two-parameter family)
  literal,  ///< alpha = sum(pred gt) / sum(pred^2) on the raw values
};

struct MetricReport {
  double l1 = 0.0;
  double rmse = 0.0;
  double rel_l1 = 0.0;
  double sq_rel = 0.0;
};

/// Masked ground-truth magnitudes below this are rejected by metrics().
inline constexpr double kDivisionFloor = 1e-6;

double masked_median(const DepthGrid& grid, const Mask& mask);

/// Throws DegenerateAlignment when the shifted prediction is identically zero on the mask.
std::pair<DepthGrid, DepthAlignment> align(const DepthGrid& pred, const DepthGrid& gt, const Mask& mask,
                                           AlphaMode mode = AlphaMode::shifted);
std::pair<DepthGrid, DepthAlignment> align(const DepthField& pred, const DepthField& gt, const Mask& mask,
                                           AlphaMode mode = AlphaMode::shifted);

/// Throws DivisionHazard if any masked |gt| < kDivisionFloor.
MetricReport metrics(const DepthGrid& aligned, const DepthGrid& gt, const Mask& mask);

/// Shift that raises the masked minimum of gt to floor (0 when already above).
double evaluation_offset(const DepthGrid& gt, const Mask& mask, double floor = 0.1);

/// Shifts gt so its masked minimum equals floor (no-op when already above).
DepthGrid offset_for_evaluation(const DepthGrid& gt, const Mask& mask, double floor = 0.1);

/// Pearson correlation over the mask.
double pearson(const DepthGrid& a, const DepthGrid& b, const Mask& mask);

struct Evaluation {
  MetricReport report;
  DepthAlignment alignment;
  double gt_offset = 0.0;
  double correlation = 0.0;  ///< between aligned prediction and offset gt
};

/// Offset gt, align, score. The common path for CLI and acceptance runs.
Evaluation evaluate(const DepthField& pred, const DepthField& gt, const Mask& mask,
                    AlphaMode mode = AlphaMode::shifted, bool offset_gt = true);

std::string metrics_to_json(const Evaluation& eval);
std::string metrics_csv(const MetricReport& report);

}  // namespace corrdepth
