#pragma once

#include "dexforge/hand_model.hpp"
#include "dexforge/mesh_geometry.hpp"

#include <optional>
#include <span>
#include <vector>

namespace dexforge {

/// Contact positions and inward (into the object) unit normals.
struct ContactSet {
  std::vector<Vec3> positions;
  std::vector<Vec3> inward_normals;

  std::size_t size() const { return positions.size(); }
};

struct EnergyWeights {
  double w_fc = 1.0;
  double w_bar = 10.0;
  double w_dis = 100.0;
  double w_palm = 1.0;
  double w_limit = 100.0;
  double w_pen = 1000.0;
  double w_spen = 1000.0;
  double w_dir = 0.1;
  double d_thr = 0.01;   // m, barrier activation distance
  double d_0 = 0.01;     // m, palm stand-off
  double tau_fc = 0.1;   // wrench-norm threshold of the stable branch
  double tau_f = 0.1;    // minimum contact force of the stable branch
  int off_part_samples = 512;
  bool use_lp_dfc = true;

  void validate() const;
};

struct EnergyBreakdown {
  double total = 0.0;
  double fc = 0.0;
  double bar = 0.0;
  double dis = 0.0;
  double dir = 0.0;
  double pen = 0.0;
  double spen = 0.0;
  double limit = 0.0;
  bool lp_stable = false;
  std::optional<VecX> contact_forces;
  std::optional<double> wrench_norm;
};

/// 6 x 3n map from stacked contact forces to (force, torque).
MatX grasp_matrix(const ContactSet& contacts);

/// ||G c||_2 with unit normals as forces.
double dfc_energy(const ContactSet& contacts);

struct ContactForces {
  VecX f;
  double wrench_norm = 0.0;  // P
};

/// min ||G (f o c)|| s.t. max f = 1, f >= 0: the best of n box-constrained subproblems
/// (f_k = 1, others in [0, 1]) each solved by projected gradient descent.
ContactForces optimal_contact_forces(const ContactSet& contacts, int iterations = 500);

struct LpDfcResult {
  double value = 0.0;
  bool stable = false;
  VecX f;
  double wrench_norm = 0.0;
};

/// ||G (f o c)|| when the optimal forces certify a stable grasp, ||G c|| otherwise.
LpDfcResult lp_dfc_energy(const ContactSet& contacts, const EnergyWeights& weights);

/// Truncated log barrier b(d) = -(d - d_thr)^2 ln(d / d_thr) on (0, d_thr), 0 beyond.
double barrier(double d, double d_thr);
double barrier_derivative(double d, double d_thr);

double part_barrier_energy(std::span<const Vec3> fingertips, std::span<const Vec3> off_part_points,
                           double d_thr);

double distance_energy(std::span<const Vec3> fingertips, std::span<const Vec3> palm_points,
                       const MeshIndex& mesh, const EnergyWeights& weights);

double direction_energy(std::span<const Vec3> contact_normals, std::span<const Vec3> front_normals);

double penetration_energy(std::span<const WorldSphere> spheres, const MeshIndex& mesh);
double self_penetration_energy(std::span<const WorldSphere> spheres, const HandModel& hand);

/// Fixed data for optimising grasps of one part.
struct GraspScene {
  const HandModel* hand = nullptr;
  const MeshIndex* mesh = nullptr;
  int target_part = -1;
  std::vector<Vec3> off_part_points;
  // Grasp-matrix positions are expressed as (x - frame_center) / frame_scale.
  Vec3 frame_center = Vec3::Zero();
  double frame_scale = 1.0;
};

GraspScene make_scene(const HandModel& hand, const MeshIndex& mesh, int target_part,
                      const Vec3& frame_center, double frame_scale, int off_part_samples,
                      std::uint64_t seed);

/// Nearest-point correspondences and LP forces, held fixed while differentiating.
struct Correspondences {
  std::vector<Vec3> fc_normals;     // inward normals on the target part, per fingertip contact
  std::vector<Vec3> surface_points; // closest object point, per split candidate
  std::vector<Vec3> dir_normals;    // inward normal there, per split candidate
  std::vector<Vec3> pen_points;     // closest object point, per collision sphere
  std::vector<Vec3> pen_face_normals;
  std::vector<int> pen_inside;      // 1 when the sphere center is inside the object
  bool lp_stable = false;
  VecX forces;
  double wrench_norm = 0.0;
};

Correspondences find_correspondences(const GraspScene& scene, const GraspPose& pose,
                                     const EnergyWeights& weights, Split split);

struct EnergyEvaluation {
  EnergyBreakdown breakdown;
  VecX gradient;  // [T(3), rotation tangent(3), theta(d)]
};

EnergyEvaluation evaluate_energy(const GraspScene& scene, const GraspPose& pose,
                                 const EnergyWeights& weights, Split split,
                                 const Correspondences& corr);

EnergyEvaluation total_energy(const GraspScene& scene, const GraspPose& pose,
                              const EnergyWeights& weights, Split split);

}  // namespace dexforge
