#include "dexforge/part_init.hpp"

#include "dexforge/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace dexforge {

std::string_view to_string(PartCategory category) {
  switch (category) {
    case PartCategory::LidLike: return "LidLike";
    case PartCategory::DiskLike: return "DiskLike";
    case PartCategory::LShaped: return "LShaped";
    case PartCategory::ShaftLike: return "ShaftLike";
  }
  return "ShaftLike";
}

PartCategory part_category_from_string(std::string_view name) {
  for (auto c : {PartCategory::LidLike, PartCategory::DiskLike, PartCategory::LShaped,
                 PartCategory::ShaftLike}) {
    if (to_string(c) == name) return c;
  }
  throw InputError("unknown part category '" + std::string(name) + "'");
}

namespace {

std::vector<Vec3> points_of(const std::vector<SurfaceSample>& samples) {
  std::vector<Vec3> pts;
  pts.reserve(samples.size());
  for (const auto& s : samples) pts.push_back(s.point);
  return pts;
}

// Separating-axis triangle/box overlap (Akenine-Moller), box centered at the origin with
// half extents h, triangle already in box coordinates. Touching counts as overlap.
bool triangle_box_overlap(const Vec3& h, const Vec3& v0, const Vec3& v1, const Vec3& v2) {
  const Vec3 e[3] = {v1 - v0, v2 - v1, v0 - v2};
  const Vec3 v[3] = {v0, v1, v2};
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) {
      const Vec3 axis = Vec3::Unit(k).cross(e[i]);
      if (axis.squaredNorm() < 1e-30) continue;
      const double p0 = axis.dot(v[0]);
      const double p1 = axis.dot(v[1]);
      const double p2 = axis.dot(v[2]);
      const double r = h.x() * std::abs(axis.x()) + h.y() * std::abs(axis.y()) + h.z() * std::abs(axis.z());
      if (std::min({p0, p1, p2}) > r || std::max({p0, p1, p2}) < -r) return false;
    }
  }
  for (int k = 0; k < 3; ++k) {
    if (std::min({v0[k], v1[k], v2[k]}) > h[k] || std::max({v0[k], v1[k], v2[k]}) < -h[k]) return false;
  }
  const Vec3 n = e[0].cross(e[1]);
  const double d = n.dot(v0);
  const double r = h.x() * std::abs(n.x()) + h.y() * std::abs(n.y()) + h.z() * std::abs(n.z());
  return std::abs(d) <= r;
}

Vec3 corner_signs(int k) {
  return Vec3((k & 1) ? 1.0 : -1.0, (k & 2) ? 1.0 : -1.0, (k & 4) ? 1.0 : -1.0);
}

int corners_inside(const Obb& box, const std::array<Vec3, 8>& corners, double margin,
                   std::initializer_list<int> which = {0, 1, 2, 3, 4, 5, 6, 7}) {
  int n = 0;
  for (int k : which) n += point_in_obb(box, corners[k], margin) ? 1 : 0;
  return n;
}

// Corners of the face at sign `s` of axis `a`.
std::array<int, 4> face_corners(int a, int s) {
  std::array<int, 4> out{};
  int n = 0;
  for (int k = 0; k < 8; ++k) {
    const bool positive = (k >> a) & 1;
    if (positive == (s > 0)) out[n++] = k;
  }
  return out;
}

int count_face_inside(const Obb& box, const std::array<Vec3, 8>& corners, int a, int s, double margin) {
  int n = 0;
  for (int k : face_corners(a, s)) n += point_in_obb(box, corners[k], margin) ? 1 : 0;
  return n;
}

// Other part whose box holds the most target corners (ties: lowest id).
int embedding_part(int target, const std::map<int, Obb>& obbs, double margin, int* count = nullptr) {
  const auto corners = obbs.at(target).corners();
  int best = -1;
  int best_count = 0;
  for (const auto& [id, box] : obbs) {
    if (id == target) continue;
    const int c = corners_inside(box, corners, margin);
    if (c > best_count) {
      best = id;
      best_count = c;
    }
  }
  if (count) *count = best_count;
  return best;
}

// Ray/box entry distance (0 when the origin is already inside), or infinity.
double ray_enter(const Obb& box, const Vec3& origin, const Vec3& dir, double margin) {
  const Vec3 o = box.to_local(origin);
  const Vec3 d = box.axes.transpose() * dir;
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    const double h = box.half_extents[i] + margin;
    if (std::abs(d[i]) < 1e-15) {
      if (std::abs(o[i]) > h) return std::numeric_limits<double>::infinity();
      continue;
    }
    double ta = (-h - o[i]) / d[i];
    double tb = (h - o[i]) / d[i];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::numeric_limits<double>::infinity();
  }
  return t0;
}

Vec3 canonical_sign(const Vec3& v) {
  Eigen::Index i = 0;
  v.cwiseAbs().maxCoeff(&i);
  return v[i] < 0.0 ? Vec3(-v) : v;
}

}  // namespace

std::map<int, Obb> fit_part_obbs(const PartLabeledMesh& mesh, int samples_per_part, std::uint64_t seed) {
  std::map<int, Obb> out;
  for (int part : mesh.part_ids()) {
    const auto samples = sample_surface(mesh, part, samples_per_part, stream_seed(seed, 0x0BB, part));
    const auto pts = points_of(samples);
    out.emplace(part, fit_obb(pts));
  }
  return out;
}

Obb fit_object_obb(const PartLabeledMesh& mesh, int samples, std::uint64_t seed) {
  const auto pts = points_of(sample_surface(mesh, -1, samples, stream_seed(seed, 0x0BB, 0xFFFF)));
  return fit_obb(pts);
}

std::vector<int> empty_corner_octants(const Obb& box, const PartLabeledMesh& mesh, int part) {
  const Vec3 half = 0.5 * box.half_extents;
  std::vector<bool> touched(8, false);
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    if (mesh.face_part[f] != part) continue;
    const auto& t = mesh.faces[f];
    const Vec3 a = box.to_local(mesh.vertices[t[0]]);
    const Vec3 b = box.to_local(mesh.vertices[t[1]]);
    const Vec3 c = box.to_local(mesh.vertices[t[2]]);
    for (int k = 0; k < 8; ++k) {
      if (touched[k]) continue;
      const Vec3 center = corner_signs(k).cwiseProduct(half);
      if (triangle_box_overlap(half, a - center, b - center, c - center)) touched[k] = true;
    }
  }
  std::vector<int> empty;
  for (int k = 0; k < 8; ++k) {
    if (!touched[k]) empty.push_back(k);
  }
  return empty;
}

PartCategory classify_part(int target, const std::map<int, Obb>& obbs, const PartLabeledMesh& mesh,
                           double margin) {
  const Obb& box = obbs.at(target);
  const auto corners = box.corners();

  // Lid: >= 4 corners inside another part's box, and neither end of the longest axis sits
  // wholly inside a single box (that would be a shaft plugged into something).
  int embedded_count = 0;
  embedding_part(target, obbs, margin, &embedded_count);
  if (embedded_count >= 4) {
    bool shaft_end = false;
    for (const auto& [id, other] : obbs) {
      if (id == target) continue;
      if (count_face_inside(other, corners, 0, +1, margin) == 4 ||
          count_face_inside(other, corners, 0, -1, margin) == 4) {
        shaft_end = true;
        break;
      }
    }
    if (!shaft_end) return PartCategory::LidLike;
  }

  // Disk: flat, and protruding (no corner inside any other part).
  if (box.half_extents[1] >= 3.0 * box.half_extents[2]) {
    bool any_inside = false;
    for (const auto& [id, other] : obbs) {
      if (id != target && corners_inside(other, corners, margin) > 0) {
        any_inside = true;
        break;
      }
    }
    if (!any_inside) return PartCategory::DiskLike;
  }

  if (!empty_corner_octants(box, mesh, target).empty()) return PartCategory::LShaped;
  return PartCategory::ShaftLike;
}

Vec3 principal_direction(int target, PartCategory category, const std::map<int, Obb>& obbs,
                         const Obb& object_obb, const PartLabeledMesh& mesh, double margin,
                         double adjacency_distance) {
  const Obb& box = obbs.at(target);
  switch (category) {
    case PartCategory::LidLike: {
      const int host = embedding_part(target, obbs, margin);
      if (host < 0) throw InputError("lid part is not embedded in another part");
      const Obb& other = obbs.at(host);
      const auto corners = box.corners();
      // The face pointing out of the host: its corners are outside while the opposite face's
      // corners are inside.
      Vec3 best = box.axis(0);
      double best_score = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < 3; ++a) {
        for (int s : {+1, -1}) {
          const double score = count_face_inside(other, corners, a, -s, margin) -
                               count_face_inside(other, corners, a, s, margin);
          const Vec3 dir = s * box.axis(a);
          const double tie = dir.dot(box.center - other.center) * 1e-6 / std::max(1e-12, box.diagonal());
          if (score + tie > best_score) {
            best_score = score + tie;
            best = dir;
          }
        }
      }
      return best;
    }
    case PartCategory::DiskLike: {
      double best_t = std::numeric_limits<double>::infinity();
      Vec3 best = Vec3::Zero();
      for (int s : {+1, -1}) {
        const Vec3 dir = s * box.axis(2);
        const Vec3 face_center = box.center + box.half_extents[2] * dir;
        for (const auto& [id, other] : obbs) {
          if (id == target) continue;
          const double t = ray_enter(other, face_center, dir, margin);
          if (t <= adjacency_distance && t < best_t) {
            best_t = t;
            best = dir;
          }
        }
      }
      if (!std::isfinite(best_t)) throw InputError("no adjacent part for disk");
      return best;
    }
    case PartCategory::LShaped: {
      const auto empty = empty_corner_octants(box, mesh, target);
      if (empty.empty()) throw InputError("L-shaped part has no empty corner section");
      // Midpoint of the box edge (or corner) shared by the empty octants.
      Vec3 signs = Vec3::Zero();
      for (int k : empty) signs += corner_signs(k);
      signs /= static_cast<double>(empty.size());
      Vec3 local = signs.cwiseProduct(box.half_extents);
      if (local.norm() < 1e-12) local = corner_signs(empty.front()).cwiseProduct(box.half_extents);
      return (box.axes * local).normalized();
    }
    case PartCategory::ShaftLike: {
      const Vec3 axis = box.axis(0);
      const double d = axis.dot(object_obb.center - box.center);
      if (std::abs(d) > 1e-6 * object_obb.diagonal()) return d > 0.0 ? axis : Vec3(-axis);
      return canonical_sign(axis);
    }
  }
  return box.axis(0);
}

std::vector<PartAnalysis> analyze_parts(const PartLabeledMesh& mesh, const ClassifyOptions& options,
                                        std::uint64_t seed) {
  const auto obbs = fit_part_obbs(mesh, options.obb_samples, seed);
  const Obb object_obb = fit_object_obb(mesh, options.obb_samples, seed);
  const double margin = options.corner_margin_fraction * object_obb.diagonal();
  std::vector<PartAnalysis> out;
  for (const auto& [part, box] : obbs) {
    PartAnalysis a;
    a.part = part;
    a.obb = box;
    a.category = classify_part(part, obbs, mesh, margin);
    a.principal_direction = principal_direction(part, a.category, obbs, object_obb, mesh, margin,
                                                options.adjacency_distance);
    out.push_back(a);
  }
  return out;
}

std::vector<SurfaceSample> sample_grasp_points(const PartLabeledMesh& mesh, int part,
                                               PartCategory category, const Vec3& principal_dir,
                                               int n, std::uint64_t seed, double cone_half_angle_deg) {
  if (n < 1) throw InputError("sample_grasp_points: n must be >= 1");
  const double angle = cone_half_angle_deg * std::numbers::pi / 180.0;
  const bool aligned = category == PartCategory::LidLike;
  const auto candidates = sample_surface(mesh, part, 100 * n, seed);
  std::vector<SurfaceSample> out;
  for (const auto& s : candidates) {
    const double c = s.normal.dot(principal_dir);
    const bool ok = aligned ? c > std::cos(angle) : std::abs(c) < std::sin(angle);
    if (!ok) continue;
    out.push_back(s);
    if (static_cast<int>(out.size()) == n) return out;
  }
  throw InputError("insufficient aligned surface");
}

GraspPose place_palm(const HandModel& hand, const Vec3& palm_pos, const Vec3& front, const Vec3& up,
                     Split split) {
  const PalmFrame& palm = hand.palm();
  Mat3 local;
  local.col(0) = palm.purlicue();
  local.col(1) = palm.up;
  local.col(2) = palm.front;
  Mat3 world;
  world.col(0) = up.cross(front);
  world.col(1) = up;
  world.col(2) = front;
  const Mat3 r = world * local.transpose();
  GraspPose pose;
  pose.rotation = Quat(r).normalized();
  pose.translation = palm_pos - pose.rotation.toRotationMatrix() * palm.origin;
  pose.theta = hand.template_for(split);
  return pose;
}

std::vector<InitPose> init_palm_poses(const PartAnalysis& analysis,
                                      const std::vector<SurfaceSample>& grasp_points,
                                      const HandModel& hand, Split split, const JitterConfig& jitter,
                                      std::uint64_t seed) {
  const Vec3& dir = analysis.principal_direction;
  const double kDeg = std::numbers::pi / 180.0;
  Rng rng(seed);
  std::vector<InitPose> out;

  auto orthogonal_or_any = [](const Vec3& v, const Vec3& front) {
    const Vec3 u = v - v.dot(front) * front;
    return u.norm() > 1e-9 ? Vec3(u.normalized()) : any_perpendicular(front);
  };

  for (const auto& gp : grasp_points) {
    if (analysis.category == PartCategory::LidLike) {
      const Vec3 front = -dir;
      const Vec3 up0 = any_perpendicular(front);
      const Vec3 palm_pos = gp.point + jitter.retreat * dir;
      for (int k = 0; k < jitter.lid_rolls; ++k) {
        const Eigen::AngleAxisd roll(2.0 * std::numbers::pi * k / jitter.lid_rolls, dir);
        out.push_back({place_palm(hand, palm_pos, front, roll * up0, split), gp.point, split});
      }
      continue;
    }

    const Vec3 front = -gp.normal;
    Vec3 up;
    switch (analysis.category) {
      case PartCategory::DiskLike:
        up = orthogonal_or_any(dir, front);
        break;
      case PartCategory::LShaped:
        up = orthogonal_or_any(analysis.obb.center - gp.point, front);
        break;
      default: {
        const Vec3 purlicue = orthogonal_or_any(dir, front);
        up = front.cross(purlicue);
        break;
      }
    }
    for (int k = 0; k < jitter.sideways_samples; ++k) {
      const double angle = rng.uniform(-jitter.sideways_angle_deg, jitter.sideways_angle_deg) * kDeg;
      const double retreat = jitter.retreat + rng.uniform(-jitter.retreat_noise, jitter.retreat_noise);
      // Swing about the up axis through the grasp point, so the palm keeps facing it.
      const Eigen::AngleAxisd swing(angle, up);
      const Vec3 f = swing * front;
      const Vec3 palm_pos = gp.point - retreat * f;
      out.push_back({place_palm(hand, palm_pos, f, up, split), gp.point, split});
    }
  }
  return out;
}

std::vector<InitPose> make_init_batch(const PartAnalysis& analysis, const PartLabeledMesh& mesh,
                                      const HandModel& hand, Split split, const JitterConfig& jitter,
                                      int batch, std::uint64_t seed) {
  if (batch < 1) throw InputError("batch must be >= 1");
  const int multiplicity =
      analysis.category == PartCategory::LidLike ? jitter.lid_rolls : jitter.sideways_samples;
  const int n_points = (batch + multiplicity - 1) / multiplicity;
  const auto points = sample_grasp_points(mesh, analysis.part, analysis.category,
                                          analysis.principal_direction, n_points,
                                          stream_seed(seed, analysis.part, 1), jitter.cone_half_angle_deg);
  auto poses = init_palm_poses(analysis, points, hand, split, jitter, stream_seed(seed, analysis.part, 2));
  poses.resize(std::min<std::size_t>(poses.size(), static_cast<std::size_t>(batch)));
  return poses;
}

}  // namespace dexforge
