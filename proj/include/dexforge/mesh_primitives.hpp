#pragma once

#include "dexforge/mesh_geometry.hpp"

#include <map>
#include <string>

namespace dexforge {

/// Accumulates closed primitives into one part-labeled triangle soup. Each primitive is a closed
/// 2-manifold on its own, so the result stays watertight.
class MeshBuilder {
 public:
  MeshBuilder& add_box(const Vec3& half_extents, const Transform& pose, int part);
  MeshBuilder& add_cylinder(double radius, double height, int segments, const Transform& pose, int part);
  MeshBuilder& name_part(int part, std::string name);

  PartLabeledMesh build(std::string object_name) const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<std::array<int, 3>> faces_;
  std::vector<int> face_part_;
  std::map<int, std::string> names_;
};

Transform translation(const Vec3& t);

/// Applies a rigid transform to every vertex.
PartLabeledMesh transformed(const PartLabeledMesh& mesh, const Transform& tf);

namespace fixtures {

// Two-part objects shipped under data/.
PartLabeledMesh bottle();  // body (0) + cap (1)
PartLabeledMesh hammer();  // head (0) + handle (1)

// Category fixtures; the part to classify is part 0 in each.
PartLabeledMesh lid_object();    // cap embedded in a larger cylinder
PartLabeledMesh disk_object();   // flat plate on a post
PartLabeledMesh l_bracket();     // single L-shaped part
PartLabeledMesh solid_bar();     // single straight bar
PartLabeledMesh unit_cube();

}  // namespace fixtures

}  // namespace dexforge
