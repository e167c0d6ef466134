#include "corrdepth/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <json.hpp>

#include "corrdepth/error.hpp"
#include "corrdepth/io.hpp"
#include "corrdepth/kernels.hpp"
#include "seeding.hpp"

namespace corrdepth {

std::string_view to_string(InitMode mode) {
  return mode == InitMode::zeros ? "zeros" : "uniform-random";
}

InitMode parse_init_mode(std::string_view name) {
  if (name == "zeros") return InitMode::zeros;
  if (name == "uniform-random" || name == "uniform_random") return InitMode::uniform_random;
  throw InputError("unknown init mode '" + std::string(name) + "' (expected zeros or uniform-random)");
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::plateau: return "plateau";
    case StopReason::max_iters: return "max-iters";
    case StopReason::error: return "error";
  }
  return "error";
}

void OptimConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InputError("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InputError("momentum must lie in [0, 1)");
  if (!(grad_clamp > 0.0)) throw InputError("grad_clamp must be > 0");
  if (max_iters == 0) throw InputError("max_iters must be positive");
  if (patience == 0) throw InputError("patience must be positive");
  if (!(smoothness >= 0.0) || !std::isfinite(smoothness)) throw InputError("smoothness must be >= 0");
  if (!(zeros_jitter >= 0.0 && zeros_jitter <= 1.0)) throw InputError("zeros_jitter must lie in [0, 1]");
  if (!(init_scale >= 0.0 && init_scale <= 1.0)) throw InputError("init_scale must lie in [0, 1]");
  if (!(min_delta >= 0.0)) throw InputError("min_delta must be >= 0");
}

DepthField initial_depth(std::size_t width, std::size_t height, const OptimConfig& cfg) {
  DepthField field(width, height);
  const double half = cfg.init_mode == InitMode::zeros ? cfg.zeros_jitter : cfg.init_scale;
  if (half == 0.0) return field;
  std::mt19937_64 rng(detail::mix_seed(cfg.seed, {0x1417}));
  std::uniform_real_distribution<double> u(-half, half);
  for (double& v : field.mutable_values()) v = u(rng);
  return field;
}

namespace {

CorrespondenceSet draw_batch(const CorrespondenceSet& corr, std::size_t batch, std::uint64_t seed) {
  if (batch == 0 || batch >= corr.size()) return corr;
  std::vector<std::size_t> idx(corr.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < batch; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(batch);
  std::sort(idx.begin(), idx.end());
  CorrespondenceSet out;
  out.source.reserve(batch);
  out.target.reserve(batch);
  for (std::size_t i : idx) {
    out.source.push_back(corr.source[i]);
    out.target.push_back(corr.target[i]);
  }
  return out;
}

// lambda * sum over 4-neighbour edges of (d_a - d_b)^2, gradient added into grad.
double smoothness_term(const DepthField& d, double lambda, std::vector<double>& grad) {
  if (lambda == 0.0) return 0.0;
  const auto v = d.values();
  double sum = 0.0;
  auto edge = [&](std::size_t a, std::size_t b) {
    const double diff = v[a] - v[b];
    sum += diff * diff;
    grad[a] += 2.0 * lambda * diff;
    grad[b] -= 2.0 * lambda * diff;
  };
  for (std::size_t y = 0; y < d.height(); ++y) {
    for (std::size_t x = 0; x < d.width(); ++x) {
      if (x + 1 < d.width()) edge(d.index(x, y), d.index(x + 1, y));
      if (y + 1 < d.height()) edge(d.index(x, y), d.index(x, y + 1));
    }
  }
  return lambda * sum;
}

}  // namespace

FitResult fit_depth(std::span<const WeightedPair> pairs, std::size_t width, std::size_t height,
                    const OptimConfig& cfg, const RansacConfig& ransac_cfg, const RobustParams& robust,
                    const CorrespondenceSet* holdout, const std::optional<DepthField>& initial) {
  cfg.validate();
  ransac_cfg.validate();
  robust.validate();
  if (pairs.empty()) throw InputError("fit_depth needs at least one correspondence pair");
  if (width == 0 || height == 0) throw InputError("depth grid must be nonempty");

  DepthField probe(width, height);
  for (const WeightedPair& wp : pairs) {
    wp.corr.validate();
    if (!(wp.weight >= 0.0) || !std::isfinite(wp.weight)) throw InputError("pair weights must be finite and >= 0");
    for (const Pixel2& s : wp.corr.source) (void)pixel_index(s, probe);
  }
  if (holdout) {
    holdout->validate();
    for (const Pixel2& s : holdout->source) (void)pixel_index(s, probe);
  }
  if (initial && (initial->width() != width || initial->height() != height)) {
    throw InputError("initial depth field does not match the requested grid size");
  }

  FitResult res{initial ? *initial : initial_depth(width, height, cfg), {}};
  FitReport& rep = res.report;
  std::vector<double> velocity(width * height, 0.0);
  std::vector<double> grad(width * height);
  const kernels::SgdParams step{cfg.learning_rate, cfg.momentum, cfg.grad_clamp, -1.0, 1.0};
  const auto& kt = kernels::active();

  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  rep.stop_reason = StopReason::max_iters;

  for (std::size_t t = 0; t < cfg.max_iters; ++t) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;
    double monitor = 0.0;
    try {
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        const WeightedPair& wp = pairs[k];
        RansacConfig rc = ransac_cfg;
        rc.seed = detail::mix_seed(ransac_cfg.seed, {t, k});
        const CorrespondenceSet batch = draw_batch(wp.corr, cfg.batch_size, detail::mix_seed(cfg.seed, {t, k, 1}));
        const LossGradient lg = loss_and_grad(batch, res.depth, rc, robust, cfg.grad);
        loss += wp.weight * lg.loss_value;
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += wp.weight * lg.per_depth[i];
      }
      loss += smoothness_term(res.depth, cfg.smoothness, grad);
      if (holdout) {
        RansacConfig rc = ransac_cfg;
        rc.seed = detail::mix_seed(ransac_cfg.seed, {t, pairs.size()});
        monitor = loss_and_grad(*holdout, res.depth, rc, robust, cfg.grad).loss_value;
      } else {
        monitor = loss;
      }
    } catch (const Error& e) {
      rep.stop_reason = StopReason::error;
      rep.error_message = e.what();
      break;
    }

    rep.loss_trace.push_back(loss);
    if (holdout) rep.monitor_trace.push_back(monitor);
    rep.iterations_run = t + 1;
    rep.final_loss = loss;

    if (std::all_of(grad.begin(), grad.end(), [](double g) { return g == 0.0; })) {
      rep.stop_reason = StopReason::plateau;
      break;
    }
    if (monitor < best - cfg.min_delta) {
      best = monitor;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      rep.stop_reason = StopReason::plateau;
      break;
    }

    kt.sgd_step(res.depth.mutable_values(), velocity, grad, step);
  }
  return res;
}

std::string fit_report_to_json(const FitReport& report) {
  nlohmann::ordered_json j;
  j["final_loss"] = report.final_loss;
  j["iterations_run"] = report.iterations_run;
  j["stop_reason"] = to_string(report.stop_reason);
  if (!report.error_message.empty()) j["error"] = report.error_message;
  j["loss_trace"] = report.loss_trace;
  if (!report.monitor_trace.empty()) j["holdout_trace"] = report.monitor_trace;
  return j.dump(2) + "\n";
}

std::string loss_trace_csv(const FitReport& report) {
  std::string out = "iter,loss\n";
  for (std::size_t i = 0; i < report.loss_trace.size(); ++i) {
    out += std::to_string(i) + "," + io::format_double(report.loss_trace[i]) + "\n";
  }
  return out;
}

}  // namespace corrdepth
