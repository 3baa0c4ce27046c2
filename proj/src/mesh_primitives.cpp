#include "dexforge/mesh_primitives.hpp"

#include <cmath>
#include <numbers>

namespace dexforge {

Transform translation(const Vec3& t) {
  Transform tf = Transform::Identity();
  tf.translation() = t;
  return tf;
}

MeshBuilder& MeshBuilder::add_box(const Vec3& h, const Transform& pose, int part) {
  const int base = static_cast<int>(vertices_.size());
  for (int k = 0; k < 8; ++k) {
    const Vec3 local((k & 1) ? h.x() : -h.x(), (k & 2) ? h.y() : -h.y(), (k & 4) ? h.z() : -h.z());
    vertices_.push_back(pose * local);
  }
  // Outward-facing quads, counter-clockwise seen from outside.
  const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                           {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  for (const auto& q : quads) {
    faces_.push_back({base + q[0], base + q[1], base + q[2]});
    faces_.push_back({base + q[0], base + q[2], base + q[3]});
    face_part_.push_back(part);
    face_part_.push_back(part);
  }
  return *this;
}

MeshBuilder& MeshBuilder::add_cylinder(double radius, double height, int segments,
                                       const Transform& pose, int part) {
  // Axis along local +z, base at z = 0.
  const int base = static_cast<int>(vertices_.size());
  for (int ring = 0; ring < 2; ++ring) {
    for (int s = 0; s < segments; ++s) {
      const double a = 2.0 * std::numbers::pi * s / segments;
      vertices_.push_back(pose * Vec3(radius * std::cos(a), radius * std::sin(a), ring * height));
    }
  }
  const int bottom_center = static_cast<int>(vertices_.size());
  vertices_.push_back(pose * Vec3(0.0, 0.0, 0.0));
  const int top_center = static_cast<int>(vertices_.size());
  vertices_.push_back(pose * Vec3(0.0, 0.0, height));
  for (int s = 0; s < segments; ++s) {
    const int s1 = (s + 1) % segments;
    const int b0 = base + s, b1 = base + s1, t0 = base + segments + s, t1 = base + segments + s1;
    faces_.push_back({b0, b1, t1});
    faces_.push_back({b0, t1, t0});
    faces_.push_back({bottom_center, b1, b0});
    faces_.push_back({top_center, t0, t1});
    for (int k = 0; k < 4; ++k) face_part_.push_back(part);
  }
  return *this;
}

MeshBuilder& MeshBuilder::name_part(int part, std::string name) {
  names_[part] = std::move(name);
  return *this;
}

PartLabeledMesh MeshBuilder::build(std::string object_name) const {
  return make_mesh(vertices_, faces_, face_part_, names_, std::move(object_name));
}

PartLabeledMesh transformed(const PartLabeledMesh& mesh, const Transform& tf) {
  PartLabeledMesh out = mesh;
  for (auto& v : out.vertices) v = tf * v;
  return out;
}

namespace fixtures {

namespace {
constexpr int kSegments = 24;
}

PartLabeledMesh bottle() {
  MeshBuilder b;
  b.add_cylinder(0.042, 0.13, kSegments, Transform::Identity(), 0);
  b.add_cylinder(0.034, 0.06, kSegments, translation({0.0, 0.0, 0.13}), 1);
  return b.name_part(0, "body").name_part(1, "cap").build("bottle");
}

PartLabeledMesh hammer() {
  MeshBuilder b;
  // Handle stands on the origin; the head sits on top of it, offset toward +x.
  b.add_box({0.06, 0.015, 0.015}, translation({0.035, 0.0, 0.215}), 0);
  b.add_box({0.0125, 0.0125, 0.1}, translation({0.0, 0.0, 0.1}), 1);
  return b.name_part(0, "head").name_part(1, "handle").build("hammer");
}

PartLabeledMesh lid_object() {
  MeshBuilder b;
  b.add_cylinder(0.03, 0.02, kSegments, translation({0.0, 0.0, 0.09}), 0);
  b.add_cylinder(0.05, 0.1, kSegments, Transform::Identity(), 1);
  return b.name_part(0, "lid").name_part(1, "body").build("jar");
}

PartLabeledMesh disk_object() {
  MeshBuilder b;
  b.add_box({0.5, 0.5, 0.025}, translation({0.0, 0.0, 0.525}), 0);
  b.add_box({0.05, 0.05, 0.25}, translation({0.0, 0.0, 0.25}), 1);
  return b.name_part(0, "plate").name_part(1, "post").build("table");
}

PartLabeledMesh l_bracket() {
  MeshBuilder b;
  // Legs along +x and +z meeting at the origin corner; the (+x, +z) quadrant is empty.
  b.add_box({0.15, 0.06, 0.015}, translation({0.15, 0.0, 0.015}), 0);
  b.add_box({0.015, 0.06, 0.15}, translation({0.015, 0.0, 0.15}), 0);
  return b.name_part(0, "bracket").build("bracket");
}

PartLabeledMesh solid_bar() {
  MeshBuilder b;
  b.add_box({0.02, 0.02, 0.15}, Transform::Identity(), 0);
  return b.name_part(0, "bar").build("bar");
}

PartLabeledMesh unit_cube() {
  MeshBuilder b;
  b.add_box({0.5, 0.5, 0.5}, translation({0.5, 0.5, 0.5}), 0);
  return b.name_part(0, "cube").build("cube");
}

}  // namespace fixtures

}  // namespace dexforge
