#pragma once

#include "dexforge/hand_model.hpp"
#include "dexforge/mesh_geometry.hpp"
#include "dexforge/obb.hpp"

#include <cstdint>
#include <map>
#include <string_view>
#include <vector>

namespace dexforge {

enum class PartCategory { LidLike, DiskLike, LShaped, ShaftLike };

std::string_view to_string(PartCategory category);
PartCategory part_category_from_string(std::string_view name);

struct ClassifyOptions {
  // Corner containment margin as a fraction of the object box diagonal.
  double corner_margin_fraction = 0.01;
  // A disk's shortest-axis face ray must enter a neighbour box within this distance.
  double adjacency_distance = 0.02;
  int obb_samples = 2048;
};

struct PartAnalysis {
  int part = -1;
  Obb obb;
  PartCategory category = PartCategory::ShaftLike;
  Vec3 principal_direction = Vec3::UnitZ();
};

/// Boxes fitted to area-uniform surface samples of each part.
std::map<int, Obb> fit_part_obbs(const PartLabeledMesh& mesh, int samples_per_part, std::uint64_t seed);
Obb fit_object_obb(const PartLabeledMesh& mesh, int samples, std::uint64_t seed);

/// Octants of the box that no triangle of `part` touches. Octant k is the sub-box spanning from
/// corner k to the center.
std::vector<int> empty_corner_octants(const Obb& box, const PartLabeledMesh& mesh, int part);

/// First matching rule in the order Lid, Disk, LShaped, Shaft.
PartCategory classify_part(int target, const std::map<int, Obb>& obbs, const PartLabeledMesh& mesh,
                           double corner_margin);

Vec3 principal_direction(int target, PartCategory category, const std::map<int, Obb>& obbs,
                         const Obb& object_obb, const PartLabeledMesh& mesh, double corner_margin,
                         double adjacency_distance);

/// OBBs, categories and principal directions for every part.
std::vector<PartAnalysis> analyze_parts(const PartLabeledMesh& mesh, const ClassifyOptions& options,
                                        std::uint64_t seed);

/// Lid parts want normals along the principal direction; every other category perpendicular.
std::vector<SurfaceSample> sample_grasp_points(const PartLabeledMesh& mesh, int part,
                                               PartCategory category, const Vec3& principal_dir,
                                               int n, std::uint64_t seed, double cone_half_angle_deg = 20.0);

struct JitterConfig {
  double retreat = 0.08;               // m
  int lid_rolls = 24;
  int sideways_samples = 4;            // poses per grasp point for non-lid parts
  double sideways_angle_deg = 15.0;    // uniform in +/- this
  double retreat_noise = 0.01;         // m, uniform in +/- this along the approach axis
  double cone_half_angle_deg = 20.0;
};

struct InitPose {
  GraspPose pose;
  Vec3 grasp_point;
  Split split = Split::Wrap;
};

/// Grasp pose placing the palm at `palm_pos` with world front/up axes.
GraspPose place_palm(const HandModel& hand, const Vec3& palm_pos, const Vec3& front, const Vec3& up,
                     Split split);

std::vector<InitPose> init_palm_poses(const PartAnalysis& analysis,
                                      const std::vector<SurfaceSample>& grasp_points,
                                      const HandModel& hand, Split split, const JitterConfig& jitter,
                                      std::uint64_t seed);

/// Full initialisation for one part: grasp point sampling + palm alignment, truncated to `batch`.
std::vector<InitPose> make_init_batch(const PartAnalysis& analysis, const PartLabeledMesh& mesh,
                                      const HandModel& hand, Split split, const JitterConfig& jitter,
                                      int batch, std::uint64_t seed);

}  // namespace dexforge
