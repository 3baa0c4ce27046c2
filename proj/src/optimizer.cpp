#include "dexforge/optimizer.hpp"

#include "dexforge/parallel.hpp"

#include <cmath>
#include <iostream>

namespace dexforge {

void OptimizerConfig::validate() const {
  if (steps < 1) throw InputError("optimizer steps must be >= 1");
  if (!(step_translation > 0.0 && step_rotation > 0.0 && step_joints > 0.0)) {
    throw InputError("optimizer step sizes must be positive");
  }
  if (!(grad_clip > 0.0)) throw InputError("grad_clip must be positive");
  if (anneal_every < 1 || !(anneal_factor > 0.0)) throw InputError("invalid anneal schedule");
}

double OptimizerConfig::schedule(int k) const {
  return std::pow(anneal_factor, k / anneal_every);
}

int OptimizationReport::failed_count() const {
  int n = 0;
  for (const auto& r : per_pose) n += r.failed ? 1 : 0;
  return n;
}

namespace {

Eigen::Vector3d clipped(const Eigen::Vector3d& g, double clip) {
  const double n = g.norm();
  return n > clip ? Eigen::Vector3d(g * (clip / n)) : g;
}

struct Run {
  GraspPose pose;
  PoseReport report;
  std::vector<double> trace;
};

Run run_one(const InitPose& init, const GraspScene& scene, const EnergyWeights& weights,
            const OptimizerConfig& cfg, bool keep_trace) {
  const HandModel& hand = *scene.hand;
  Run run;
  run.pose = init.pose;
  run.pose.rotation.normalize();
  for (int k = 0; k < cfg.steps; ++k) {
    const EnergyEvaluation e = total_energy(scene, run.pose, weights, init.split);
    if (k == 0) run.report.initial = e.breakdown;
    if (keep_trace) run.trace.push_back(e.breakdown.total);
    if (!std::isfinite(e.breakdown.total) || !e.gradient.allFinite()) {
      run.report.failed = true;
      run.report.steps = k;
      return run;
    }
    if (e.breakdown.lp_stable && !run.report.branch_switch_step) run.report.branch_switch_step = k;

    const double scale = cfg.schedule(k);
    const Vec3 g_t = clipped(e.gradient.segment<3>(0), cfg.grad_clip);
    const Vec3 g_r = clipped(e.gradient.segment<3>(3), cfg.grad_clip);
    VecX g_j = e.gradient.tail(hand.dof());
    const double nj = g_j.norm();
    if (nj > cfg.grad_clip) g_j *= cfg.grad_clip / nj;

    run.pose.translation -= scale * cfg.step_translation * g_t;
    run.pose.rotation = (run.pose.rotation * exp_so3(-scale * cfg.step_rotation * g_r)).normalized();
    run.pose.theta = hand.clamp(run.pose.theta - scale * cfg.step_joints * g_j);
  }
  const EnergyEvaluation last = total_energy(scene, run.pose, weights, init.split);
  run.report.final = last.breakdown;
  run.report.steps = cfg.steps;
  if (keep_trace) run.trace.push_back(last.breakdown.total);
  if (!std::isfinite(last.breakdown.total)) run.report.failed = true;
  return run;
}

}  // namespace

OptimizationResult optimize_batch(const std::vector<InitPose>& inits, const GraspScene& scene,
                                  const EnergyWeights& weights, const OptimizerConfig& config) {
  if (inits.empty()) throw InputError("optimize_batch: empty batch");
  config.validate();
  std::vector<Run> runs(inits.size());
  parallel_for(inits.size(), [&](std::size_t i) { runs[i] = run_one(inits[i], scene, weights, config, false); });

  OptimizationResult out;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    out.report.per_pose.push_back(runs[i].report);
    if (runs[i].report.failed) {
      std::cerr << "warning: batch element " << i << " produced a non-finite energy and was dropped\n";
      continue;
    }
    out.poses.push_back(runs[i].pose);
    out.source_index.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<double> energy_trace(const InitPose& init, const GraspScene& scene,
                                 const EnergyWeights& weights, const OptimizerConfig& config) {
  config.validate();
  Run run = run_one(init, scene, weights, config, true);
  if (run.report.failed) throw Error("energy_trace: non-finite energy");
  return run.trace;
}

}  // namespace dexforge
