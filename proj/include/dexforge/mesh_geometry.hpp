#pragma once

#include "dexforge/common.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dexforge {

struct PartLabeledMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<int> face_part;
  std::map<int, std::string> part_names;
  std::string object_name;
  // Every undirected edge is shared by exactly two faces.
  bool watertight = false;

  std::vector<int> part_ids() const;
  bool has_part(int part) const { return part_names.count(part) > 0; }
  const std::string& part_name(int part) const;
  Vec3 face_normal(int face) const;
  double face_area(int face) const;
};

/// Validates indices/labels and computes the watertight flag.
PartLabeledMesh make_mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> faces,
                          std::vector<int> face_part, std::map<int, std::string> part_names,
                          std::string object_name = "object");

PartLabeledMesh load_mesh(const std::filesystem::path& obj_path,
                          const std::filesystem::path& labels_path);
void write_obj(const PartLabeledMesh& mesh, const std::filesystem::path& path);
void write_labels(const PartLabeledMesh& mesh, const std::filesystem::path& path);

/// Closest point on triangle (a, b, c) to p.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

struct ClosestPoint {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // outward face normal
  double distance = 0.0;
  int part = -1;
  int face = -1;
};

struct SignedQuery {
  double signed_distance = 0.0;  // negative inside
  ClosestPoint closest;
};

/// Median-split AABB tree over a subset of faces.
class Bvh {
 public:
  Bvh() = default;
  Bvh(const PartLabeledMesh& mesh, std::vector<int> faces);

  bool empty() const { return faces_.empty(); }
  /// Exact nearest face; ties resolve to the lowest face index.
  void closest(const PartLabeledMesh& mesh, const Vec3& q, ClosestPoint& best, double& best_sq) const;

 private:
  struct Node {
    Eigen::AlignedBox3d box;
    int left = -1;
    int right = -1;
    int begin = 0;
    int end = 0;
  };
  int build(const PartLabeledMesh& mesh, const std::vector<Vec3>& centroids, int begin, int end);

  std::vector<Node> nodes_;
  std::vector<int> faces_;
};

/// Immutable spatial index over a part-labeled mesh.
class MeshIndex {
 public:
  explicit MeshIndex(PartLabeledMesh mesh);

  const PartLabeledMesh& mesh() const { return mesh_; }

  ClosestPoint closest_point(const Vec3& q) const;
  ClosestPoint closest_point(const Vec3& q, int part) const;
  ClosestPoint closest_point(const Vec3& q, std::span<const int> parts) const;

  /// Requires a watertight mesh; sign from the generalized winding number.
  double signed_distance(const Vec3& q) const;
  SignedQuery signed_query(const Vec3& q) const;
  double winding_number(const Vec3& q) const;

 private:
  PartLabeledMesh mesh_;
  Bvh all_;
  std::map<int, Bvh> by_part_;
};

struct SurfaceSample {
  Vec3 point;
  Vec3 normal;  // outward
  int part = -1;
  int face = -1;
};

/// Area-weighted uniform samples on one part (part < 0 samples the whole mesh).
std::vector<SurfaceSample> sample_surface(const PartLabeledMesh& mesh, int part, int n,
                                          std::uint64_t seed);

/// Fibonacci lattice on the unit sphere: z_k = 1 - (2k+1)/n, azimuth k * golden angle.
std::vector<Vec3> fibonacci_directions(int n);

}  // namespace dexforge
