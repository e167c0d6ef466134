#include "corrdepth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "corrdepth/error.hpp"
#include "corrdepth/io.hpp"
#include "corrdepth/kernels.hpp"

namespace corrdepth {

namespace {

void check_shapes(const DepthGrid& a, const DepthGrid& b, const Mask& mask) {
  if (a.width != b.width || a.height != b.height || a.width != mask.width() || a.height != mask.height()) {
    throw InputError("prediction, ground truth and mask must share dimensions");
  }
  if (a.values.size() != a.width * a.height || b.values.size() != b.width * b.height) {
    throw InputError("grid value count does not match its dimensions");
  }
  if (mask.count() == 0) throw InputError("evaluation mask is empty");
}

}  // namespace

DepthGrid DepthGrid::of(const DepthField& field) {
  return {field.width(), field.height(), {field.values().begin(), field.values().end()}};
}

double masked_median(const DepthGrid& grid, const Mask& mask) {
  std::vector<double> v;
  v.reserve(mask.count());
  for (std::size_t k = 0; k < grid.values.size(); ++k)
    if (mask[k]) v.push_back(grid.values[k]);
  if (v.empty()) throw InputError("median over an empty mask");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

std::pair<DepthGrid, DepthAlignment> align(const DepthGrid& pred, const DepthGrid& gt, const Mask& mask,
                                           AlphaMode mode) {
  check_shapes(pred, gt, mask);
  DepthAlignment a;
  a.beta1 = masked_median(pred, mask);
  a.beta2 = masked_median(gt, mask);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < pred.values.size(); ++k) {
    if (!mask[k]) continue;
    const double p = mode == AlphaMode::shifted ? pred.values[k] - a.beta1 : pred.values[k];
    const double g = mode == AlphaMode::shifted ? gt.values[k] - a.beta2 : gt.values[k];
    num += p * g;
    den += p * p;
  }
  if (!(den > 0.0)) throw DegenerateAlignment("prediction is constant on the mask; scale is undefined");
  a.alpha = num / den;

  // The identity alignment returns the input untouched ((x - b) + b need not round-trip).
  if (a.alpha == 1.0 && a.beta1 == a.beta2) return {pred, a};
  DepthGrid out{pred.width, pred.height, std::vector<double>(pred.values.size())};
  for (std::size_t k = 0; k < pred.values.size(); ++k)
    out.values[k] = a.alpha * (pred.values[k] - a.beta1) + a.beta2;
  return {std::move(out), a};
}

std::pair<DepthGrid, DepthAlignment> align(const DepthField& pred, const DepthField& gt, const Mask& mask,
                                           AlphaMode mode) {
  return align(DepthGrid::of(pred), DepthGrid::of(gt), mask, mode);
}

MetricReport metrics(const DepthGrid& aligned, const DepthGrid& gt, const Mask& mask) {
  check_shapes(aligned, gt, mask);
  for (std::size_t k = 0; k < gt.values.size(); ++k) {
    if (mask[k] && !(std::fabs(gt.values[k]) >= kDivisionFloor)) {
      throw DivisionHazard("ground truth magnitude below " + io::format_double(kDivisionFloor) +
                           " inside the mask; offset gt to be strictly positive before evaluation");
    }
  }
  const kernels::ErrorSums s = kernels::active().error_sums(aligned.values, gt.values, mask.bits());
  const double n = static_cast<double>(s.count);
  return {s.abs / n, std::sqrt(s.sq / n), s.rel_abs / n, s.rel_sq / n};
}

double evaluation_offset(const DepthGrid& gt, const Mask& mask, double floor) {
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < gt.values.size(); ++k)
    if (mask[k]) lo = std::min(lo, gt.values[k]);
  return lo < floor ? floor - lo : 0.0;
}

DepthGrid offset_for_evaluation(const DepthGrid& gt, const Mask& mask, double floor) {
  const double shift = evaluation_offset(gt, mask, floor);
  DepthGrid out = gt;
  for (double& v : out.values) v += shift;
  return out;
}

double pearson(const DepthGrid& a, const DepthGrid& b, const Mask& mask) {
  check_shapes(a, b, mask);
  double ma = 0.0, mb = 0.0;
  const double n = static_cast<double>(mask.count());
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    if (!mask[k]) continue;
    ma += a.values[k];
    mb += b.values[k];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    if (!mask[k]) continue;
    const double da = a.values[k] - ma;
    const double db = b.values[k] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0 && sbb > 0.0)) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

Evaluation evaluate(const DepthField& pred, const DepthField& gt, const Mask& mask, AlphaMode mode,
                    bool offset_gt) {
  Evaluation ev;
  DepthGrid g = DepthGrid::of(gt);
  if (offset_gt) ev.gt_offset = evaluation_offset(g, mask);
  // The literal alpha reads raw gt values, so the offset must precede it. The
  // shifted fit commutes with a gt shift (beta2 is a median), so there the
  // offset is applied afterwards, which keeps the identity case exact.
  const bool offset_first = mode == AlphaMode::literal;
  if (offset_first)
    for (double& v : g.values) v += ev.gt_offset;
  auto [aligned, alignment] = align(DepthGrid::of(pred), g, mask, mode);
  if (!offset_first) {
    for (double& v : g.values) v += ev.gt_offset;
    for (double& v : aligned.values) v += ev.gt_offset;
    alignment.beta2 += ev.gt_offset;
  }
  ev.alignment = alignment;
  ev.report = metrics(aligned, g, mask);
  ev.correlation = pearson(aligned, g, mask);
  return ev;
}

std::string metrics_to_json(const Evaluation& eval) {
  nlohmann::ordered_json j;
  j["l1"] = eval.report.l1;
  j["rmse"] = eval.report.rmse;
  j["rel_l1"] = eval.report.rel_l1;
  j["sq_rel"] = eval.report.sq_rel;
  j["alignment"] = {{"alpha", eval.alignment.alpha}, {"beta1", eval.alignment.beta1}, {"beta2", eval.alignment.beta2}};
  j["gt_offset"] = eval.gt_offset;
  j["pearson"] = eval.correlation;
  return j.dump(2) + "\n";
}

std::string metrics_csv(const MetricReport& r) {
  return "l1,rmse,rel_l1,sq_rel\n" + io::format_double(r.l1) + "," + io::format_double(r.rmse) + "," +
         io::format_double(r.rel_l1) + "," + io::format_double(r.sq_rel) + "\n";
}

}  // namespace corrdepth
