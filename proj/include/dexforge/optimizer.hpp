#pragma once

#include "dexforge/energy.hpp"
#include "dexforge/part_init.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace dexforge {

struct OptimizerConfig {
  int steps = 300;
  double step_translation = 1e-3;  // m
  double step_rotation = 5e-3;     // rad
  double step_joints = 5e-3;       // rad
  double grad_clip = 1.0;          // per parameter group, Euclidean
  int anneal_every = 100;
  double anneal_factor = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
  /// Step-size multiplier in effect at step k.
  double schedule(int k) const;
};

struct PoseReport {
  EnergyBreakdown initial;
  EnergyBreakdown final;
  int steps = 0;
  std::optional<int> branch_switch_step;  // first step on the stable LP-DFC branch
  bool failed = false;
};

struct OptimizationReport {
  std::vector<PoseReport> per_pose;  // one per input, including failed ones
  int failed_count() const;
};

struct OptimizationResult {
  std::vector<GraspPose> poses;   // surviving elements, in input order
  std::vector<int> source_index;  // input index of each surviving pose
  OptimizationReport report;
};

/// Clipped, annealed gradient descent with a rotation retraction and joint-limit projection.
/// Elements whose energy or gradient becomes non-finite are dropped.
OptimizationResult optimize_batch(const std::vector<InitPose>& inits, const GraspScene& scene,
                                  const EnergyWeights& weights, const OptimizerConfig& config);

/// Per-step totals for a single element: steps + 1 entries, the first being the initial energy.
std::vector<double> energy_trace(const InitPose& init, const GraspScene& scene,
                                 const EnergyWeights& weights, const OptimizerConfig& config);

}  // namespace dexforge
