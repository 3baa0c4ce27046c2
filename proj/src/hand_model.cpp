#include "dexforge/hand_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <queue>

namespace dexforge {

namespace {

constexpr double kUnitTolerance = 1e-9;

Vec3 read_vec3(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw InputError(std::string("expected 3-vector for ") + what);
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

VecX read_vecx(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw InputError(std::string("expected array for ") + what);
  VecX v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

void require_unit(const Vec3& v, const std::string& what) {
  if (std::abs(v.norm() - 1.0) > kUnitTolerance) {
    throw InputError("non-unit " + what);
  }
}

Transform read_origin(const nlohmann::json& j) {
  Transform t = Transform::Identity();
  if (j.is_null()) return t;
  if (j.contains("xyz")) t.translation() = read_vec3(j.at("xyz"), "origin.xyz");
  if (j.contains("rpy")) {
    const Vec3 rpy = read_vec3(j.at("rpy"), "origin.rpy");
    // URDF convention: R = Rz(yaw) * Ry(pitch) * Rx(roll)
    t.linear() = (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) *
                  Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
                  Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
                     .toRotationMatrix();
  }
  return t;
}

}  // namespace

std::string_view to_string(FingerTag tag) {
  switch (tag) {
    case FingerTag::Thumb: return "thumb";
    case FingerTag::Forefinger: return "forefinger";
    case FingerTag::Middlefinger: return "middlefinger";
    case FingerTag::Ringfinger: return "ringfinger";
    case FingerTag::Littlefinger: return "littlefinger";
    case FingerTag::Palm: return "palm";
  }
  return "palm";
}

FingerTag finger_tag_from_string(std::string_view name) {
  for (FingerTag tag : kAllFingerTags) {
    if (to_string(tag) == name) return tag;
  }
  throw InputError("unknown finger tag '" + std::string(name) + "'");
}

std::string_view to_string(Split split) { return split == Split::Wrap ? "wrap" : "pinch"; }

Split split_from_string(std::string_view name) {
  if (name == "wrap") return Split::Wrap;
  if (name == "pinch") return Split::Pinch;
  throw InputError("unknown split '" + std::string(name) + "' (expected wrap or pinch)");
}

std::vector<FingerTag> split_tags(Split split) {
  if (split == Split::Wrap) return {kAllFingerTags.begin(), kAllFingerTags.end()};
  return {FingerTag::Thumb, FingerTag::Forefinger, FingerTag::Middlefinger, FingerTag::Palm};
}

bool split_contains(Split split, FingerTag tag) {
  const auto tags = split_tags(split);
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

HandModel::HandModel(std::string name, std::vector<LinkSpec> links, std::vector<JointSpec> joints,
                     VecX wrap_template, VecX pinch_template, PalmFrame palm)
    : name_(std::move(name)),
      links_(std::move(links)),
      joints_(std::move(joints)),
      wrap_(std::move(wrap_template)),
      pinch_(std::move(pinch_template)),
      palm_(std::move(palm)) {
  if (links_.empty()) throw InputError("hand has no links");

  std::map<std::string, int, std::less<>> by_name;
  for (std::size_t i = 0; i < links_.size(); ++i) {
    if (!by_name.emplace(links_[i].name, static_cast<int>(i)).second) {
      throw InputError("duplicate link name '" + links_[i].name + "'");
    }
    for (const auto& s : links_[i].collision_spheres) {
      if (!(s.radius > 0.0)) throw InputError("non-positive sphere radius on link " + links_[i].name);
    }
    for (const auto& c : links_[i].contact_candidates) {
      require_unit(c.front_normal, "front normal on link " + links_[i].name);
    }
  }

  const int n_links = static_cast<int>(links_.size());
  parent_joint_.assign(n_links, -1);
  joint_parent_.resize(joints_.size());
  joint_child_.resize(joints_.size());
  joint_dof_.resize(joints_.size());

  for (std::size_t j = 0; j < joints_.size(); ++j) {
    const auto& js = joints_[j];
    const auto p = by_name.find(js.parent_link);
    const auto c = by_name.find(js.child_link);
    if (p == by_name.end() || c == by_name.end()) {
      throw InputError("joint '" + js.name + "' references an unknown link");
    }
    if (js.type == JointType::Revolute) {
      require_unit(js.axis, "joint axis");
      if (js.lower > js.upper) throw InputError("joint '" + js.name + "' has lower > upper");
      joint_dof_[j] = dof_++;
    } else {
      joint_dof_[j] = -1;
    }
    joint_parent_[j] = p->second;
    joint_child_[j] = c->second;
    if (parent_joint_[c->second] != -1) throw InputError("kinematic graph not a tree");
    parent_joint_[c->second] = static_cast<int>(j);
  }

  // Exactly one root; every link reachable from it.
  for (int l = 0; l < n_links; ++l) {
    if (parent_joint_[l] == -1) {
      if (root_ != -1) throw InputError("kinematic graph not a tree");
      root_ = l;
    }
  }
  if (root_ == -1) throw InputError("kinematic graph not a tree");
  require_unit(palm_.front, "palm front direction");
  if (std::abs(palm_.front.dot(palm_.up)) > 1e-6) throw InputError("palm up must be orthogonal to front");
  palm_.up.normalize();

  std::vector<std::vector<int>> children(n_links);
  for (std::size_t j = 0; j < joints_.size(); ++j) children[joint_parent_[j]].push_back(static_cast<int>(j));
  chain_.assign(n_links, {});
  std::queue<int> frontier;
  frontier.push(root_);
  while (!frontier.empty()) {
    const int l = frontier.front();
    frontier.pop();
    order_.push_back(l);
    for (int j : children[l]) {
      const int child = joint_child_[j];
      chain_[child] = chain_[l];
      if (joint_dof_[j] >= 0) chain_[child].push_back(j);
      frontier.push(child);
    }
  }
  if (static_cast<int>(order_.size()) != n_links) throw InputError("kinematic graph not a tree");

  // Parent/child pairs are adjacent. Links without collision spheres (knuckles, hubs) are
  // transparent: links joined only through them count as adjacent too.
  adjacent_.assign(static_cast<std::size_t>(n_links) * n_links, 0);
  for (int l = 0; l < n_links; ++l) {
    adjacent_[static_cast<std::size_t>(l) * n_links + l] = 1;
    int cur = l;
    while (parent_joint_[cur] >= 0) {
      const int up = joint_parent_[parent_joint_[cur]];
      adjacent_[static_cast<std::size_t>(l) * n_links + up] = 1;
      adjacent_[static_cast<std::size_t>(up) * n_links + l] = 1;
      if (!links_[up].collision_spheres.empty()) break;
      cur = up;
    }
  }

  lower_.resize(dof_);
  upper_.resize(dof_);
  for (std::size_t j = 0; j < joints_.size(); ++j) {
    if (joint_dof_[j] < 0) continue;
    lower_[joint_dof_[j]] = joints_[j].lower;
    upper_[joint_dof_[j]] = joints_[j].upper;
  }

  for (const VecX* t : {&wrap_, &pinch_}) {
    if (t->size() != dof_) throw InputError("template length does not match dof");
    for (int i = 0; i < dof_; ++i) {
      if ((*t)[i] < lower_[i] || (*t)[i] > upper_[i]) {
        throw InputError("template violates joint limits");
      }
    }
  }
}

int HandModel::link_index(std::string_view name) const {
  for (std::size_t i = 0; i < links_.size(); ++i) {
    if (links_[i].name == name) return static_cast<int>(i);
  }
  throw InputError("unknown link '" + std::string(name) + "'");
}

bool HandModel::links_adjacent(int a, int b) const {
  return adjacent_[static_cast<std::size_t>(a) * links_.size() + static_cast<std::size_t>(b)] != 0;
}

VecX HandModel::clamp(const VecX& theta) const {
  return theta.cwiseMax(lower_).cwiseMin(upper_);
}

HandModel parse_hand(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("links") || !j.contains("joints")) {
    throw InputError("hand description must contain links[] and joints[]");
  }
  std::vector<LinkSpec> links;
  for (const auto& jl : j.at("links")) {
    LinkSpec link;
    link.name = jl.at("name").get<std::string>();
    if (jl.contains("finger")) link.finger = finger_tag_from_string(jl.at("finger").get<std::string>());
    for (const auto& js : jl.value("collision_spheres", nlohmann::json::array())) {
      link.collision_spheres.push_back({read_vec3(js.at("center"), "sphere center"),
                                        js.at("radius").get<double>()});
    }
    for (const auto& jc : jl.value("contact_candidates", nlohmann::json::array())) {
      link.contact_candidates.push_back(
          {read_vec3(jc.at("point"), "candidate point"),
           read_vec3(jc.at("front_normal"), "candidate normal"),
           finger_tag_from_string(jc.at("finger_tag").get<std::string>())});
    }
    if (!link.finger && !link.contact_candidates.empty()) {
      link.finger = link.contact_candidates.front().finger;
    }
    links.push_back(std::move(link));
  }

  std::vector<JointSpec> joints;
  for (const auto& jj : j.at("joints")) {
    JointSpec joint;
    joint.name = jj.at("name").get<std::string>();
    joint.parent_link = jj.at("parent_link").get<std::string>();
    joint.child_link = jj.at("child_link").get<std::string>();
    const std::string type = jj.value("type", "revolute");
    if (type == "revolute") {
      joint.type = JointType::Revolute;
    } else if (type == "fixed") {
      joint.type = JointType::Fixed;
    } else {
      throw InputError("unsupported joint type '" + type + "'");
    }
    joint.origin = read_origin(jj.value("origin", nlohmann::json()));
    if (joint.type == JointType::Revolute) {
      joint.axis = read_vec3(jj.at("axis"), "joint axis");
      joint.lower = jj.at("lower").get<double>();
      joint.upper = jj.at("upper").get<double>();
    }
    joints.push_back(std::move(joint));
  }

  HandModel draft(j.value("name", "hand"), links, joints, read_vecx(j.at("wrap_template"), "wrap_template"),
                  read_vecx(j.at("pinch_template"), "pinch_template"));
  // Untagged non-root links take the finger of their descendants (a proximal phalanx reports the
  // finger of its fingertip).
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t jn = 0; jn < joints.size(); ++jn) {
      const int p = draft.joint_parent_link(static_cast<int>(jn));
      const int c = draft.joint_child_link(static_cast<int>(jn));
      if (!links[p].finger && links[c].finger && p != draft.root_link()) {
        links[p].finger = links[c].finger;
        changed = true;
      }
    }
  }
  PalmFrame palm;
  if (j.contains("palm_frame")) {
    const auto& jp = j.at("palm_frame");
    palm.origin = read_vec3(jp.at("origin"), "palm_frame.origin");
    palm.front = read_vec3(jp.at("front"), "palm_frame.front");
    palm.up = read_vec3(jp.at("up"), "palm_frame.up");
  } else {
    for (const auto& c : links[draft.root_link()].contact_candidates) {
      if (c.finger != FingerTag::Palm) continue;
      palm.origin = c.point;
      palm.front = c.front_normal;
      const Vec3 up = Vec3::UnitY() - Vec3::UnitY().dot(c.front_normal) * c.front_normal;
      palm.up = up.norm() > 1e-6 ? Vec3(up.normalized()) : any_perpendicular(c.front_normal);
      break;
    }
  }
  return HandModel(j.value("name", "hand"), std::move(links), std::move(joints),
                   draft.wrap_template(), draft.pinch_template(), palm);
}

HandModel load_hand(const std::filesystem::path& description_file) {
  std::ifstream in(description_file);
  if (!in) throw InputError("cannot open hand description " + description_file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed hand description " + description_file.string() + ": " + e.what());
  }
  try {
    return parse_hand(j);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed hand description " + description_file.string() + ": " + e.what());
  }
}

HandFrames forward_kinematics(const HandModel& hand, const GraspPose& pose) {
  if (pose.theta.size() != hand.dof()) {
    throw InputError("theta length " + std::to_string(pose.theta.size()) + " does not match dof " +
                     std::to_string(hand.dof()));
  }
  HandFrames frames;
  const auto n_links = hand.links().size();
  frames.link_to_world.assign(n_links, Transform::Identity());
  frames.joint_axis_world.assign(hand.joints().size(), Vec3::Zero());
  frames.joint_origin_world.assign(hand.joints().size(), Vec3::Zero());

  Transform wrist = Transform::Identity();
  wrist.linear() = pose.rotation.normalized().toRotationMatrix();
  wrist.translation() = pose.translation;
  frames.link_to_world[hand.root_link()] = wrist;

  for (int link : hand.link_order()) {
    const int j = hand.parent_joint(link);
    if (j < 0) continue;
    const JointSpec& js = hand.joints()[j];
    const Transform joint_frame = frames.link_to_world[hand.joint_parent_link(j)] * js.origin;
    Transform motion = Transform::Identity();
    if (js.type == JointType::Revolute) {
      motion.linear() = Eigen::AngleAxisd(pose.theta[hand.joint_dof_index(j)], js.axis).toRotationMatrix();
    }
    frames.link_to_world[link] = joint_frame * motion;
    frames.joint_axis_world[j] = joint_frame.linear() * js.axis;
    frames.joint_origin_world[j] = joint_frame.translation();
  }
  return frames;
}

namespace {

std::vector<WorldCandidate> collect_candidates(const HandModel& hand, const HandFrames& frames,
                                               const Split* split) {
  std::vector<WorldCandidate> out;
  for (std::size_t l = 0; l < hand.links().size(); ++l) {
    const Transform& tf = frames.link_to_world[l];
    for (const auto& c : hand.links()[l].contact_candidates) {
      if (split && !split_contains(*split, c.finger)) continue;
      out.push_back({tf * c.point, (tf.linear() * c.front_normal).normalized(), c.finger,
                     static_cast<int>(l)});
    }
  }
  return out;
}

}  // namespace

std::vector<WorldCandidate> contact_candidates_world(const HandModel& hand, const HandFrames& frames,
                                                     Split split) {
  return collect_candidates(hand, frames, &split);
}

std::vector<WorldCandidate> all_contact_candidates_world(const HandModel& hand,
                                                         const HandFrames& frames) {
  return collect_candidates(hand, frames, nullptr);
}

std::vector<WorldSphere> collision_spheres_world(const HandModel& hand, const HandFrames& frames) {
  std::vector<WorldSphere> out;
  for (std::size_t l = 0; l < hand.links().size(); ++l) {
    for (const auto& s : hand.links()[l].collision_spheres) {
      out.push_back({frames.link_to_world[l] * s.center, s.radius, static_cast<int>(l)});
    }
  }
  return out;
}

JointLimitEnergy joint_limit_energy(const VecX& theta, const VecX& lower, const VecX& upper) {
  JointLimitEnergy e;
  e.gradient = VecX::Zero(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double over = theta[i] - upper[i];
    const double under = lower[i] - theta[i];
    if (over > 0.0) {
      e.value += over * over;
      e.gradient[i] += 2.0 * over;
    }
    if (under > 0.0) {
      e.value += under * under;
      e.gradient[i] -= 2.0 * under;
    }
  }
  return e;
}

void accumulate_point_gradient(const HandModel& hand, const HandFrames& frames, const GraspPose& pose,
                               int link, const Vec3& world_point, const Vec3& g,
                               Eigen::Ref<VecX> gradient) {
  const Mat3 rt = pose.rotation.normalized().toRotationMatrix().transpose();
  gradient.segment<3>(0) += g;
  gradient.segment<3>(3) += rt * (world_point - pose.translation).cross(g);
  for (int j : hand.chain_joints(link)) {
    const Vec3 lever = world_point - frames.joint_origin_world[j];
    gradient[6 + hand.joint_dof_index(j)] += g.dot(frames.joint_axis_world[j].cross(lever));
  }
}

void accumulate_direction_gradient(const HandModel& hand, const HandFrames& frames,
                                   const GraspPose& pose, int link, const Vec3& world_direction,
                                   const Vec3& g, Eigen::Ref<VecX> gradient) {
  const Mat3 rt = pose.rotation.normalized().toRotationMatrix().transpose();
  gradient.segment<3>(3) += rt * world_direction.cross(g);
  for (int j : hand.chain_joints(link)) {
    gradient[6 + hand.joint_dof_index(j)] += g.dot(frames.joint_axis_world[j].cross(world_direction));
  }
}

GraspPose retract(const GraspPose& pose, const VecX& step) {
  GraspPose out = pose;
  out.translation += step.segment<3>(0);
  out.rotation = (pose.rotation * exp_so3(step.segment<3>(3))).normalized();
  out.theta += step.tail(step.size() - 6);
  return out;
}

}  // namespace dexforge
