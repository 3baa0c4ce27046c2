#include "dexforge/energy.hpp"

#include "dexforge/random.hpp"

#include <cmath>

namespace dexforge {

void EnergyWeights::validate() const {
  for (double w : {w_fc, w_bar, w_dis, w_palm, w_limit, w_pen, w_spen, w_dir, tau_fc, tau_f}) {
    if (!(w >= 0.0)) throw InputError("energy weights and thresholds must be nonnegative");
  }
  if (!(d_thr > 0.0)) throw InputError("d_thr must be positive");
  if (!(d_0 >= 0.0)) throw InputError("d_0 must be nonnegative");
  if (off_part_samples < 0) throw InputError("off_part_samples must be nonnegative");
}

namespace {
constexpr double kMinDistance = 1e-9;
}

double barrier(double d, double d_thr) {
  if (d >= d_thr) return 0.0;
  d = std::max(d, kMinDistance);
  const double gap = d - d_thr;
  return -gap * gap * std::log(d / d_thr);
}

double barrier_derivative(double d, double d_thr) {
  if (d >= d_thr) return 0.0;
  d = std::max(d, kMinDistance);
  const double gap = d - d_thr;
  return -2.0 * gap * std::log(d / d_thr) - gap * gap / d;
}

double part_barrier_energy(std::span<const Vec3> fingertips, std::span<const Vec3> off_part_points,
                           double d_thr) {
  double e = 0.0;
  for (const Vec3& x : fingertips) {
    for (const Vec3& p : off_part_points) e += barrier((x - p).norm(), d_thr);
  }
  return e;
}

double distance_energy(std::span<const Vec3> fingertips, std::span<const Vec3> palm_points,
                       const MeshIndex& mesh, const EnergyWeights& weights) {
  double e = 0.0;
  for (const Vec3& x : fingertips) e += mesh.closest_point(x).distance;
  for (const Vec3& x : palm_points) e += weights.w_palm * std::abs(mesh.closest_point(x).distance - weights.d_0);
  return e;
}

double direction_energy(std::span<const Vec3> contact_normals, std::span<const Vec3> front_normals) {
  if (contact_normals.size() != front_normals.size()) {
    throw InputError("direction_energy: normal lists differ in length");
  }
  double e = 0.0;
  for (std::size_t i = 0; i < contact_normals.size(); ++i) e += 1.0 - contact_normals[i].dot(front_normals[i]);
  return e;
}

double penetration_energy(std::span<const WorldSphere> spheres, const MeshIndex& mesh) {
  double e = 0.0;
  for (const auto& s : spheres) {
    const double depth = s.radius - mesh.signed_distance(s.center);
    if (depth > 0.0) e += depth * depth;
  }
  return e;
}

double self_penetration_energy(std::span<const WorldSphere> spheres, const HandModel& hand) {
  double e = 0.0;
  for (std::size_t i = 0; i < spheres.size(); ++i) {
    for (std::size_t j = i + 1; j < spheres.size(); ++j) {
      if (hand.links_adjacent(spheres[i].link, spheres[j].link)) continue;
      const double overlap = spheres[i].radius + spheres[j].radius - (spheres[i].center - spheres[j].center).norm();
      if (overlap > 0.0) e += overlap * overlap;
    }
  }
  return e;
}

GraspScene make_scene(const HandModel& hand, const MeshIndex& mesh, int target_part,
                      const Vec3& frame_center, double frame_scale, int off_part_samples,
                      std::uint64_t seed) {
  if (!mesh.mesh().has_part(target_part)) throw InputError("unknown part id " + std::to_string(target_part));
  GraspScene scene;
  scene.hand = &hand;
  scene.mesh = &mesh;
  scene.target_part = target_part;
  scene.frame_center = frame_center;
  scene.frame_scale = frame_scale > 0.0 ? frame_scale : 1.0;

  // Off-part samples, split across the other parts in proportion to area.
  const auto& m = mesh.mesh();
  double other_area = 0.0;
  for (std::size_t f = 0; f < m.faces.size(); ++f) {
    if (m.face_part[f] != target_part) other_area += m.face_area(static_cast<int>(f));
  }
  if (off_part_samples > 0 && other_area > 0.0) {
    for (int part : m.part_ids()) {
      if (part == target_part) continue;
      double area = 0.0;
      for (std::size_t f = 0; f < m.faces.size(); ++f) {
        if (m.face_part[f] == part) area += m.face_area(static_cast<int>(f));
      }
      const int n = static_cast<int>(std::lround(off_part_samples * area / other_area));
      if (n < 1) continue;
      for (const auto& s : sample_surface(m, part, n, stream_seed(seed, 0xBA4, part))) {
        scene.off_part_points.push_back(s.point);
      }
    }
  }
  return scene;
}

namespace {

struct HandState {
  HandFrames frames;
  std::vector<WorldCandidate> candidates;   // split candidates
  std::vector<WorldCandidate> fingertips;   // every non-palm candidate on the hand
  std::vector<WorldSphere> spheres;
};

HandState hand_state(const HandModel& hand, const GraspPose& pose, Split split) {
  HandState s;
  s.frames = forward_kinematics(hand, pose);
  s.candidates = contact_candidates_world(hand, s.frames, split);
  for (const auto& c : all_contact_candidates_world(hand, s.frames)) {
    if (c.finger != FingerTag::Palm) s.fingertips.push_back(c);
  }
  s.spheres = collision_spheres_world(hand, s.frames);
  return s;
}

ContactSet fc_contacts(const GraspScene& scene, const HandState& state, const std::vector<Vec3>& normals) {
  ContactSet cs;
  std::size_t k = 0;
  for (const auto& c : state.candidates) {
    if (c.finger == FingerTag::Palm) continue;
    cs.positions.push_back((c.point - scene.frame_center) / scene.frame_scale);
    cs.inward_normals.push_back(normals[k++]);
  }
  return cs;
}

}  // namespace

Correspondences find_correspondences(const GraspScene& scene, const GraspPose& pose,
                                     const EnergyWeights& weights, Split split) {
  const HandState state = hand_state(*scene.hand, pose, split);
  const MeshIndex& mesh = *scene.mesh;
  Correspondences corr;
  for (const auto& c : state.candidates) {
    const ClosestPoint cp = mesh.closest_point(c.point);
    corr.surface_points.push_back(cp.point);
    corr.dir_normals.push_back(-cp.normal);
    if (c.finger != FingerTag::Palm) {
      corr.fc_normals.push_back(-mesh.closest_point(c.point, scene.target_part).normal);
    }
  }
  if (weights.w_pen > 0.0) {
    for (const auto& s : state.spheres) {
      const SignedQuery q = mesh.signed_query(s.center);
      corr.pen_points.push_back(q.closest.point);
      corr.pen_face_normals.push_back(q.closest.normal);
      corr.pen_inside.push_back(q.signed_distance < 0.0 ? 1 : 0);
    }
  }
  if (!corr.fc_normals.empty()) {
    const ContactSet cs = fc_contacts(scene, state, corr.fc_normals);
    if (weights.use_lp_dfc) {
      const LpDfcResult lp = lp_dfc_energy(cs, weights);
      corr.lp_stable = lp.stable;
      corr.forces = lp.f;
      corr.wrench_norm = lp.wrench_norm;
    } else {
      corr.forces = VecX::Ones(static_cast<Eigen::Index>(cs.size()));
      corr.wrench_norm = dfc_energy(cs);
    }
  }
  return corr;
}

EnergyEvaluation evaluate_energy(const GraspScene& scene, const GraspPose& pose,
                                 const EnergyWeights& weights, Split split,
                                 const Correspondences& corr) {
  const HandModel& hand = *scene.hand;
  const HandState state = hand_state(hand, pose, split);
  EnergyEvaluation out;
  out.gradient = VecX::Zero(6 + hand.dof());
  EnergyBreakdown& b = out.breakdown;

  auto add_point = [&](const WorldCandidate& c, const Vec3& g) {
    accumulate_point_gradient(hand, state.frames, pose, c.link, c.point, g, out.gradient);
  };

  // Force closure on fingertip contacts; forces and branch are frozen.
  if (!corr.fc_normals.empty()) {
    const ContactSet cs = fc_contacts(scene, state, corr.fc_normals);
    const VecX f = corr.lp_stable ? corr.forces : VecX::Ones(static_cast<Eigen::Index>(cs.size()));
    Vec3 force = Vec3::Zero();
    Vec3 torque = Vec3::Zero();
    for (std::size_t i = 0; i < cs.size(); ++i) {
      force += f[static_cast<Eigen::Index>(i)] * cs.inward_normals[i];
      torque += f[static_cast<Eigen::Index>(i)] * cs.positions[i].cross(cs.inward_normals[i]);
    }
    const double norm = std::sqrt(force.squaredNorm() + torque.squaredNorm());
    b.fc = norm;
    b.lp_stable = corr.lp_stable;
    if (corr.forces.size() > 0) b.contact_forces = corr.forces;
    b.wrench_norm = corr.wrench_norm;
    if (weights.w_fc > 0.0 && norm > 0.0) {
      std::size_t i = 0;
      for (const auto& c : state.candidates) {
        if (c.finger == FingerTag::Palm) continue;
        const Vec3 g = weights.w_fc * f[static_cast<Eigen::Index>(i)] *
                       cs.inward_normals[i].cross(torque) / (norm * scene.frame_scale);
        add_point(c, g);
        ++i;
      }
    }
  }

  // Barrier against samples outside the target part.
  for (const auto& tip : state.fingertips) {
    Vec3 g = Vec3::Zero();
    for (const Vec3& p : scene.off_part_points) {
      const Vec3 diff = tip.point - p;
      const double d = diff.norm();
      if (d >= weights.d_thr) continue;
      b.bar += barrier(d, weights.d_thr);
      g += barrier_derivative(d, weights.d_thr) * diff / std::max(d, kMinDistance);
    }
    if (weights.w_bar > 0.0) add_point(tip, weights.w_bar * g);
  }

  // Distance and direction terms on split candidates.
  for (std::size_t i = 0; i < state.candidates.size(); ++i) {
    const auto& c = state.candidates[i];
    const Vec3 diff = c.point - corr.surface_points[i];
    const double d = diff.norm();
    const Vec3 unit = d > 0.0 ? Vec3(diff / d) : Vec3::Zero();
    if (c.finger == FingerTag::Palm) {
      b.dis += weights.w_palm * std::abs(d - weights.d_0);
      if (weights.w_dis > 0.0) {
        const double sign = d > weights.d_0 ? 1.0 : (d < weights.d_0 ? -1.0 : 0.0);
        add_point(c, weights.w_dis * weights.w_palm * sign * unit);
      }
    } else {
      b.dis += d;
      if (weights.w_dis > 0.0) add_point(c, weights.w_dis * unit);
    }
    b.dir += 1.0 - corr.dir_normals[i].dot(c.front_normal);
    if (weights.w_dir > 0.0) {
      accumulate_direction_gradient(hand, state.frames, pose, c.link, c.front_normal,
                                    -weights.w_dir * corr.dir_normals[i], out.gradient);
    }
  }

  // Hand-object penetration with frozen closest points and inside flags.
  if (!corr.pen_points.empty()) {
    for (std::size_t i = 0; i < state.spheres.size(); ++i) {
      const auto& s = state.spheres[i];
      const Vec3 diff = s.center - corr.pen_points[i];
      const double dist = diff.norm();
      const double sign = corr.pen_inside[i] ? -1.0 : 1.0;
      const double sd = sign * dist;
      const double depth = s.radius - sd;
      if (depth <= 0.0) continue;
      b.pen += depth * depth;
      const Vec3 dsd = dist > 0.0 ? Vec3(sign * diff / dist) : corr.pen_face_normals[i];
      accumulate_point_gradient(hand, state.frames, pose, s.link, s.center,
                                -2.0 * weights.w_pen * depth * dsd, out.gradient);
    }
  }

  // Self penetration between non-adjacent links.
  for (std::size_t i = 0; i < state.spheres.size(); ++i) {
    for (std::size_t j = i + 1; j < state.spheres.size(); ++j) {
      const auto& si = state.spheres[i];
      const auto& sj = state.spheres[j];
      if (hand.links_adjacent(si.link, sj.link)) continue;
      const Vec3 diff = si.center - sj.center;
      const double dist = diff.norm();
      const double overlap = si.radius + sj.radius - dist;
      if (overlap <= 0.0 || dist <= 0.0) continue;
      b.spen += overlap * overlap;
      const Vec3 g = -2.0 * weights.w_spen * overlap * diff / dist;
      accumulate_point_gradient(hand, state.frames, pose, si.link, si.center, g, out.gradient);
      accumulate_point_gradient(hand, state.frames, pose, sj.link, sj.center, -g, out.gradient);
    }
  }

  const JointLimitEnergy lim = joint_limit_energy(pose.theta, hand.lower_limits(), hand.upper_limits());
  b.limit = lim.value;
  out.gradient.tail(hand.dof()) += weights.w_limit * lim.gradient;

  b.total = weights.w_fc * b.fc + weights.w_bar * b.bar + weights.w_dis * b.dis +
            weights.w_dir * b.dir + weights.w_pen * b.pen + weights.w_spen * b.spen +
            weights.w_limit * b.limit;
  return out;
}

EnergyEvaluation total_energy(const GraspScene& scene, const GraspPose& pose,
                              const EnergyWeights& weights, Split split) {
  return evaluate_energy(scene, pose, weights, split, find_correspondences(scene, pose, weights, split));
}

}  // namespace dexforge
