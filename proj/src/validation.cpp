#include "dexforge/validation.hpp"

#include <algorithm>
#include <array>
#include <limits>

namespace dexforge {

CheckResult penetration_check(const GraspPose& pose, const HandModel& hand, const MeshIndex& mesh,
                              double threshold) {
  if (!mesh.mesh().watertight) throw InputError("penetration check requires a watertight mesh");
  const auto spheres = collision_spheres_world(hand, forward_kinematics(hand, pose));
  CheckResult r;
  for (const auto& s : spheres) r.max_depth = std::max(r.max_depth, s.radius - mesh.signed_distance(s.center));
  r.ok = r.max_depth < threshold;
  return r;
}

CheckResult self_penetration_check(const GraspPose& pose, const HandModel& hand, double threshold) {
  const auto spheres = collision_spheres_world(hand, forward_kinematics(hand, pose));
  CheckResult r;
  for (std::size_t i = 0; i < spheres.size(); ++i) {
    for (std::size_t j = i + 1; j < spheres.size(); ++j) {
      if (hand.links_adjacent(spheres[i].link, spheres[j].link)) continue;
      const double overlap = spheres[i].radius + spheres[j].radius - (spheres[i].center - spheres[j].center).norm();
      r.max_depth = std::max(r.max_depth, overlap);
    }
  }
  r.ok = r.max_depth < threshold;
  return r;
}

namespace {

struct LinkGeometry {
  std::vector<Vec3> points;
  std::vector<double> radii;
};

std::vector<LinkGeometry> link_geometry(const HandModel& hand, const HandFrames& frames) {
  std::vector<LinkGeometry> out(hand.links().size());
  for (const auto& s : collision_spheres_world(hand, frames)) {
    out[s.link].points.push_back(s.center);
    out[s.link].radii.push_back(s.radius);
  }
  for (const auto& c : all_contact_candidates_world(hand, frames)) {
    out[c.link].points.push_back(c.point);
    out[c.link].radii.push_back(0.0);
  }
  return out;
}

FingerTag link_finger(const HandModel& hand, int link) {
  return hand.links()[link].finger.value_or(FingerTag::Palm);
}

// Unsigned distance from a link's geometry to one part.
double link_part_distance(const LinkGeometry& g, const MeshIndex& mesh, int part) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.points.size(); ++i) {
    best = std::min(best, mesh.closest_point(g.points[i], part).distance - g.radii[i]);
  }
  return best;
}

bool nearest_to_target(double d_target, const std::vector<double>& others) {
  return std::all_of(others.begin(), others.end(), [&](double d) { return d_target < d; });
}

}  // namespace

std::vector<LinkContact> link_distances(const GraspPose& pose, const HandModel& hand, const MeshIndex& mesh,
                                        double contact_eps) {
  const HandFrames frames = forward_kinematics(hand, pose);
  const auto geometry = link_geometry(hand, frames);
  std::vector<LinkContact> out;
  for (int l = 0; l < static_cast<int>(geometry.size()); ++l) {
    const auto& g = geometry[l];
    if (g.points.empty()) continue;
    LinkContact lc;
    lc.link = l;
    lc.finger = link_finger(hand, l);
    lc.distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.points.size(); ++i) {
      const SignedQuery q = mesh.signed_query(g.points[i]);
      const double d = q.signed_distance - g.radii[i];
      if (d < contact_eps) lc.patch.push_back({q.closest.point, -q.closest.normal});
      if (d < lc.distance) {
        lc.distance = d;
        lc.nearest_part = q.closest.part;
        lc.object_point = q.closest.point;
        lc.inward_normal = -q.closest.normal;
      }
    }
    out.push_back(lc);
  }
  return out;
}

ContactReport contact_report(const GraspPose& pose, const HandModel& hand, const MeshIndex& mesh,
                             double contact_eps) {
  ContactReport r;
  std::array<bool, kAllFingerTags.size()> seen{};
  for (const auto& lc : link_distances(pose, hand, mesh, contact_eps)) {
    if (lc.distance >= contact_eps) continue;
    r.contacting_links.push_back(lc);
    seen[static_cast<std::size_t>(lc.finger)] = true;
  }
  for (FingerTag t : kAllFingerTags) {
    if (seen[static_cast<std::size_t>(t)]) r.contacting_fingers.push_back(t);
  }
  return r;
}

bool part_alignment_check(const GraspPose& pose, const HandModel& hand, const MeshIndex& mesh,
                          int target_part, double contact_eps) {
  const ContactReport report = contact_report(pose, hand, mesh, contact_eps);
  if (report.contacting_links.empty()) return false;
  const HandFrames frames = forward_kinematics(hand, pose);
  const auto geometry = link_geometry(hand, frames);
  const auto parts = mesh.mesh().part_ids();
  for (const auto& lc : report.contacting_links) {
    const double d_target = link_part_distance(geometry[lc.link], mesh, target_part);
    std::vector<double> others;
    for (int p : parts) {
      if (p != target_part) others.push_back(link_part_distance(geometry[lc.link], mesh, p));
    }
    if (!nearest_to_target(d_target, others)) return false;
  }
  return true;
}

int fingers_near_part(const GraspPose& pose, const HandModel& hand, const MeshIndex& mesh, int target_part,
                      double distance) {
  const HandFrames frames = forward_kinematics(hand, pose);
  const auto parts = mesh.mesh().part_ids();
  std::array<bool, kAllFingerTags.size()> hit{};
  for (const auto& c : all_contact_candidates_world(hand, frames)) {
    if (c.finger == FingerTag::Palm) continue;
    const double d_target = mesh.closest_point(c.point, target_part).distance;
    if (d_target >= distance) continue;
    std::vector<double> others;
    for (int p : parts) {
      if (p != target_part) others.push_back(mesh.closest_point(c.point, p).distance);
    }
    if (nearest_to_target(d_target, others)) hit[static_cast<std::size_t>(c.finger)] = true;
  }
  return static_cast<int>(std::count(hit.begin(), hit.end(), true));
}

bool pta(const GraspPose& pose, const HandModel& hand, const MeshIndex& mesh, int target_part, double distance) {
  return fingers_near_part(pose, hand, mesh, target_part, distance) >= 1;
}

bool pga(const GraspPose& pose, const HandModel& hand, const MeshIndex& mesh, int target_part, double distance) {
  return fingers_near_part(pose, hand, mesh, target_part, distance) >= 3;
}

std::string caption(const std::string& part_name, const std::string& object_name,
                    const std::vector<FingerTag>& contacting_fingers) {
  if (contacting_fingers.empty()) throw InputError("caption needs at least one contacting finger");
  std::string fingers;
  for (std::size_t i = 0; i < contacting_fingers.size(); ++i) {
    if (i > 0) fingers += ", ";
    fingers += to_string(contacting_fingers[i]);
  }
  return "Grasp the " + part_name + " of the " + object_name + " object, with contacts on " + fingers;
}

ValidationResult validate(const GraspPose& pose, const HandModel& hand, const MeshIndex& mesh, int target_part,
                          const ValidationParams& params, const Vec3& wrench_center) {
  ValidationResult out;
  const CheckResult pen = penetration_check(pose, hand, mesh, params.pen_threshold);
  const CheckResult spen = self_penetration_check(pose, hand, params.spen_threshold);
  out.flags.pen_ok = pen.ok;
  out.flags.max_pen = pen.max_depth;
  out.flags.spen_ok = spen.ok;
  out.flags.max_spen = spen.max_depth;

  out.contacts = contact_report(pose, hand, mesh, params.contact_eps);
  std::vector<GravityContact> contacts;
  for (const auto& lc : out.contacts.contacting_links) contacts.insert(contacts.end(), lc.patch.begin(), lc.patch.end());
  const GravityResult gravity = gravity_resist_check(contacts, wrench_center, params.gravity);
  out.flags.gravity_ok = gravity.ok;
  out.flags.gravity_fail_axes = gravity.fail_axes;
  out.flags.part_ok = part_alignment_check(pose, hand, mesh, target_part, params.contact_eps);

  const int near = fingers_near_part(pose, hand, mesh, target_part, params.finger_distance);
  out.pta = near >= 1;
  out.pga = near >= 3;
  if (out.flags.valid()) {
    out.caption = caption(mesh.mesh().part_name(target_part), mesh.mesh().object_name, out.contacts.contacting_fingers);
  }
  return out;
}

}  // namespace dexforge
