#pragma once

#include "dexforge/hand_model.hpp"
#include "dexforge/mesh_geometry.hpp"
#include "dexforge/wrench_feasibility.hpp"

#include <string>
#include <vector>

namespace dexforge {

struct ValidationParams {
  double contact_eps = 0.002;      // m, link-object contact distance
  double pen_threshold = 0.003;    // m
  double spen_threshold = 0.003;   // m
  double finger_distance = 0.01;   // m, PTA/PGA fingertip range
  GravityParams gravity;
};

struct ValidationFlags {
  bool pen_ok = false;
  bool spen_ok = false;
  bool gravity_ok = false;
  bool part_ok = false;
  double max_pen = 0.0;
  double max_spen = 0.0;
  std::vector<std::string> gravity_fail_axes;
  bool valid() const { return pen_ok && spen_ok && gravity_ok && part_ok; }
};

struct LinkContact {
  int link = -1;
  FingerTag finger = FingerTag::Palm;
  double distance = 0.0;  // signed, negative when penetrating
  int nearest_part = -1;
  Vec3 object_point;      // closest object surface point
  Vec3 inward_normal;
  // One contact per geometry element of the link lying within contact_eps of the object.
  std::vector<GravityContact> patch;
};

struct ContactReport {
  std::vector<LinkContact> contacting_links;
  std::vector<FingerTag> contacting_fingers;  // canonical order
};

struct CheckResult {
  bool ok = false;
  double max_depth = 0.0;
};

CheckResult penetration_check(const GraspPose& pose, const HandModel& hand, const MeshIndex& mesh,
                              double threshold = 0.003);
CheckResult self_penetration_check(const GraspPose& pose, const HandModel& hand, double threshold = 0.003);

/// Per-link distance to the object; a link's geometry is its collision spheres plus its contact
/// candidate points. Elements closer than `contact_eps` are collected into the link's patch.
std::vector<LinkContact> link_distances(const GraspPose& pose, const HandModel& hand, const MeshIndex& mesh,
                                        double contact_eps = 0.002);
ContactReport contact_report(const GraspPose& pose, const HandModel& hand, const MeshIndex& mesh,
                             double contact_eps = 0.002);

/// Every contacting link must be strictly nearer the target part than any other part; at least one
/// contacting link is required.
bool part_alignment_check(const GraspPose& pose, const HandModel& hand, const MeshIndex& mesh,
                          int target_part, double contact_eps = 0.002);

/// Fingers (thumb..littlefinger) with a fingertip candidate within `distance` of the target part
/// and nearer to it than to every other part.
int fingers_near_part(const GraspPose& pose, const HandModel& hand, const MeshIndex& mesh, int target_part,
                      double distance = 0.01);
bool pta(const GraspPose& pose, const HandModel& hand, const MeshIndex& mesh, int target_part,
         double distance = 0.01);
bool pga(const GraspPose& pose, const HandModel& hand, const MeshIndex& mesh, int target_part,
         double distance = 0.01);

std::string caption(const std::string& part_name, const std::string& object_name,
                    const std::vector<FingerTag>& contacting_fingers);

struct ValidationResult {
  ValidationFlags flags;
  ContactReport contacts;
  std::string caption;  // empty unless valid
  bool pta = false;
  bool pga = false;
};

/// `wrench_center` is the point gravity acts through (the object box center).
ValidationResult validate(const GraspPose& pose, const HandModel& hand, const MeshIndex& mesh, int target_part,
                          const ValidationParams& params, const Vec3& wrench_center);

}  // namespace dexforge
