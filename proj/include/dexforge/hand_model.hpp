#pragma once

#include "dexforge/common.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dexforge {

enum class FingerTag { Thumb, Forefinger, Middlefinger, Ringfinger, Littlefinger, Palm };

/// Canonical caption order is the enum order: thumb first, palm last.
constexpr std::array<FingerTag, 6> kAllFingerTags = {
    FingerTag::Thumb,       FingerTag::Forefinger,   FingerTag::Middlefinger,
    FingerTag::Ringfinger,  FingerTag::Littlefinger, FingerTag::Palm};

std::string_view to_string(FingerTag tag);
FingerTag finger_tag_from_string(std::string_view name);

enum class Split { Wrap, Pinch };

std::string_view to_string(Split split);
Split split_from_string(std::string_view name);

/// Finger tags whose contact candidates participate in a split.
std::vector<FingerTag> split_tags(Split split);
bool split_contains(Split split, FingerTag tag);

struct CollisionSphere {
  Vec3 center;  // link frame
  double radius = 0.0;
};

struct ContactCandidate {
  Vec3 point;         // link frame
  Vec3 front_normal;  // link frame, unit
  FingerTag finger = FingerTag::Palm;
};

struct LinkSpec {
  std::string name;
  std::vector<CollisionSphere> collision_spheres;
  std::vector<ContactCandidate> contact_candidates;
  // Finger this link belongs to, used when reporting contacting fingers.
  std::optional<FingerTag> finger;
};

enum class JointType { Revolute, Fixed };

struct JointSpec {
  std::string name;
  std::string parent_link;
  std::string child_link;
  JointType type = JointType::Revolute;
  Vec3 axis = Vec3::UnitX();  // child frame
  Transform origin = Transform::Identity();  // parent link -> joint frame
  double lower = 0.0;
  double upper = 0.0;
};

/// Palm reference frame, expressed in the wrist (root link) frame.
struct PalmFrame {
  Vec3 origin = Vec3::Zero();
  Vec3 front = Vec3::UnitZ();  // palm normal, facing the object
  Vec3 up = Vec3::UnitY();     // toward the fingers
  Vec3 purlicue() const { return up.cross(front); }
};

/// Immutable articulated hand: a tree of links connected by revolute joints.
class HandModel {
 public:
  HandModel(std::string name, std::vector<LinkSpec> links, std::vector<JointSpec> joints,
            VecX wrap_template, VecX pinch_template, PalmFrame palm = {});

  const std::string& name() const { return name_; }
  const PalmFrame& palm() const { return palm_; }
  const std::vector<LinkSpec>& links() const { return links_; }
  const std::vector<JointSpec>& joints() const { return joints_; }
  int dof() const { return dof_; }

  int root_link() const { return root_; }
  int link_index(std::string_view name) const;
  /// Links in parent-before-child order.
  const std::vector<int>& link_order() const { return order_; }
  /// Joint connecting a link to its parent, or -1 for the root.
  int parent_joint(int link) const { return parent_joint_[link]; }
  int joint_parent_link(int joint) const { return joint_parent_[joint]; }
  int joint_child_link(int joint) const { return joint_child_[joint]; }
  /// Index into theta for a joint, or -1 for fixed joints.
  int joint_dof_index(int joint) const { return joint_dof_[joint]; }
  /// Actuated joints between the root and `link`.
  const std::vector<int>& chain_joints(int link) const { return chain_[link]; }
  /// Parent and child, or joined only through links that carry no collision spheres.
  bool links_adjacent(int a, int b) const;

  const VecX& lower_limits() const { return lower_; }
  const VecX& upper_limits() const { return upper_; }
  const VecX& wrap_template() const { return wrap_; }
  const VecX& pinch_template() const { return pinch_; }
  const VecX& template_for(Split split) const { return split == Split::Wrap ? wrap_ : pinch_; }

  /// Clamp joint angles into the limits.
  VecX clamp(const VecX& theta) const;

 private:
  std::string name_;
  std::vector<LinkSpec> links_;
  std::vector<JointSpec> joints_;
  int dof_ = 0;
  int root_ = -1;
  std::vector<int> order_;
  std::vector<int> parent_joint_;
  std::vector<int> joint_parent_;
  std::vector<int> joint_child_;
  std::vector<int> joint_dof_;
  std::vector<std::vector<int>> chain_;
  std::vector<char> adjacent_;
  VecX lower_, upper_, wrap_, pinch_;
  PalmFrame palm_;
};

HandModel load_hand(const std::filesystem::path& description_file);
HandModel parse_hand(const nlohmann::json& description);

/// Wrist pose plus joint angles.
struct GraspPose {
  Vec3 translation = Vec3::Zero();
  Quat rotation = Quat::Identity();  // (w, x, y, z)
  VecX theta;
};

struct HandFrames {
  std::vector<Transform> link_to_world;
  // Per joint, world-frame axis and pivot point (valid for every joint type).
  std::vector<Vec3> joint_axis_world;
  std::vector<Vec3> joint_origin_world;
};

HandFrames forward_kinematics(const HandModel& hand, const GraspPose& pose);

struct WorldCandidate {
  Vec3 point;
  Vec3 front_normal;
  FingerTag finger = FingerTag::Palm;
  int link = -1;
};

std::vector<WorldCandidate> contact_candidates_world(const HandModel& hand, const HandFrames& frames,
                                                     Split split);
/// Every candidate on the hand, regardless of split.
std::vector<WorldCandidate> all_contact_candidates_world(const HandModel& hand,
                                                         const HandFrames& frames);

struct WorldSphere {
  Vec3 center;
  double radius = 0.0;
  int link = -1;
};

std::vector<WorldSphere> collision_spheres_world(const HandModel& hand, const HandFrames& frames);

struct JointLimitEnergy {
  double value = 0.0;
  VecX gradient;
};

/// Sum of squared one-sided limit violations.
JointLimitEnergy joint_limit_energy(const VecX& theta, const VecX& lower, const VecX& upper);

/// Chain rule helpers: add dE/dpose for a point or direction attached to `link`, given dE/dx in
/// world frame. The pose gradient is laid out as [T(3), rotation tangent(3), theta(d)], with the
/// rotation tangent a right-multiplied axis-angle perturbation R * exp(w).
void accumulate_point_gradient(const HandModel& hand, const HandFrames& frames, const GraspPose& pose,
                               int link, const Vec3& world_point, const Vec3& dE_dpoint,
                               Eigen::Ref<VecX> gradient);
void accumulate_direction_gradient(const HandModel& hand, const HandFrames& frames,
                                   const GraspPose& pose, int link, const Vec3& world_direction,
                                   const Vec3& dE_ddirection, Eigen::Ref<VecX> gradient);

/// Apply a step in the pose tangent space: T + dT, R * exp(dw), theta + dtheta.
GraspPose retract(const GraspPose& pose, const VecX& step);

}  // namespace dexforge
