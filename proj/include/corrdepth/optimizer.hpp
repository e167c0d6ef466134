#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corrdepth/camera_solver.hpp"
#include "corrdepth/geometry.hpp"
#include "corrdepth/grad_engine.hpp"
#include "corrdepth/robust_loss.hpp"

namespace corrdepth {

enum class InitMode { zeros, uniform_random };
enum class StopReason { plateau, max_iters, error };

std::string_view to_string(InitMode mode);
InitMode parse_init_mode(std::string_view name);
std::string_view to_string(StopReason reason);

struct OptimConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double grad_clamp = 5.0;
  std::size_t max_iters = 5000;
  std::size_t patience = 50;
  InitMode init_mode = InitMode::zeros;
  std::uint64_t seed = 0;

  /// Weight of the 4-neighbour Laplacian smoothness term; 0 disables it.
  double smoothness = 0.0;
  /// Correspondences drawn per pair at each iteration; 0 uses the whole set.
  std::size_t batch_size = 0;
  /// A constant depth makes the lifted stack rank deficient, so the zeros
  /// start carries a seeded perturbation of this half-width.
  double zeros_jitter = 1e-3;
  /// Half-width of the uniform-random start.
  double init_scale = 0.1;
  /// Improvement below this does not reset the plateau counter.
  double min_delta = 0.0;
  GradOptions grad;

  void validate() const;
};

struct WeightedPair {
  CorrespondenceSet corr;
  double weight = 1.0;
};

struct FitReport {
  double final_loss = 0.0;
  std::vector<double> loss_trace;     ///< training objective per iteration
  std::vector<double> monitor_trace;  ///< holdout loss per iteration (empty without holdout)
  std::size_t iterations_run = 0;
  StopReason stop_reason = StopReason::max_iters;
  std::string error_message;
};

struct FitResult {
  DepthField depth;
  FitReport report;
};

/// Starting field for the configured init mode.
DepthField initial_depth(std::size_t width, std::size_t height, const OptimConfig& cfg);

/// SGD with momentum on the depth grid. Each iteration sums the weighted pair
/// gradients, clamps every entry to +-grad_clamp, applies the momentum update
/// and clips the field back into [-1, 1]. Stops when the monitored loss (the
/// holdout if given, the training loss otherwise) has not improved for
/// `patience` iterations, when the gradient vanishes exactly, or at max_iters.
/// Solver errors end the run with StopReason::error and a partial trace.
FitResult fit_depth(std::span<const WeightedPair> pairs, std::size_t width, std::size_t height,
                    const OptimConfig& cfg, const RansacConfig& ransac_cfg, const RobustParams& robust,
                    const CorrespondenceSet* holdout = nullptr,
                    const std::optional<DepthField>& initial = std::nullopt);

std::string fit_report_to_json(const FitReport& report);
std::string loss_trace_csv(const FitReport& report);

}  // namespace corrdepth
