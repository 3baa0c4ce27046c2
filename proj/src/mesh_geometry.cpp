#include "dexforge/mesh_geometry.hpp"

#include "dexforge/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace dexforge {

std::vector<int> PartLabeledMesh::part_ids() const {
  std::vector<int> ids;
  for (const auto& [id, name] : part_names) ids.push_back(id);
  return ids;
}

const std::string& PartLabeledMesh::part_name(int part) const {
  const auto it = part_names.find(part);
  if (it == part_names.end()) throw InputError("unknown part id " + std::to_string(part));
  return it->second;
}

Vec3 PartLabeledMesh::face_normal(int face) const {
  const auto& f = faces[face];
  const Vec3 n = (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]);
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3(Vec3::UnitZ());
}

double PartLabeledMesh::face_area(int face) const {
  const auto& f = faces[face];
  return 0.5 * (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]).norm();
}

PartLabeledMesh make_mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> faces,
                          std::vector<int> face_part, std::map<int, std::string> part_names,
                          std::string object_name) {
  if (faces.empty()) throw InputError("mesh has no faces");
  if (face_part.size() != faces.size()) {
    throw InputError("label count " + std::to_string(face_part.size()) + " does not match face count " +
                     std::to_string(faces.size()));
  }
  const int nv = static_cast<int>(vertices.size());
  for (const auto& f : faces) {
    for (int idx : f) {
      if (idx < 0 || idx >= nv) throw InputError("face index out of range");
    }
  }
  for (int p : face_part) {
    if (!part_names.count(p)) throw InputError("part id " + std::to_string(p) + " has no name");
  }

  std::map<std::pair<int, int>, int> edge_use;
  for (const auto& f : faces) {
    for (int k = 0; k < 3; ++k) {
      const int a = f[k];
      const int b = f[(k + 1) % 3];
      ++edge_use[{std::min(a, b), std::max(a, b)}];
    }
  }
  bool watertight = true;
  for (const auto& [edge, count] : edge_use) {
    if (count != 2) {
      watertight = false;
      break;
    }
  }

  PartLabeledMesh mesh;
  mesh.vertices = std::move(vertices);
  mesh.faces = std::move(faces);
  mesh.face_part = std::move(face_part);
  mesh.part_names = std::move(part_names);
  mesh.object_name = std::move(object_name);
  mesh.watertight = watertight;
  return mesh;
}

PartLabeledMesh load_mesh(const std::filesystem::path& obj_path,
                          const std::filesystem::path& labels_path) {
  std::ifstream obj(obj_path);
  if (!obj) throw InputError("cannot open mesh " + obj_path.string());
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::string line;
  int line_no = 0;
  while (std::getline(obj, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ss >> v.x() >> v.y() >> v.z())) {
        throw InputError(obj_path.string() + ":" + std::to_string(line_no) + ": bad vertex");
      }
      vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) {
        const int raw = std::stoi(tok.substr(0, tok.find('/')));
        idx.push_back(raw < 0 ? static_cast<int>(vertices.size()) + raw : raw - 1);
      }
      if (idx.size() != 3) {
        throw InputError(obj_path.string() + ":" + std::to_string(line_no) + ": face is not a triangle");
      }
      faces.push_back({idx[0], idx[1], idx[2]});
    }
  }

  std::ifstream lab(labels_path);
  if (!lab) throw InputError("cannot open labels " + labels_path.string());
  nlohmann::json j;
  try {
    lab >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed labels file " + labels_path.string() + ": " + e.what());
  }
  std::vector<int> face_part;
  std::map<int, std::string> names;
  try {
    face_part = j.at("face_part").get<std::vector<int>>();
    for (const auto& [key, value] : j.at("part_names").items()) names[std::stoi(key)] = value.get<std::string>();
  } catch (const std::exception& e) {
    throw InputError("malformed labels file " + labels_path.string() + ": " + e.what());
  }
  std::string object_name = j.value("object_name", obj_path.stem().string());
  return make_mesh(std::move(vertices), std::move(faces), std::move(face_part), std::move(names),
                   std::move(object_name));
}

void write_obj(const PartLabeledMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << std::setprecision(10);
  out << "# " << mesh.object_name << "\n";
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

void write_labels(const PartLabeledMesh& mesh, const std::filesystem::path& path) {
  nlohmann::json j;
  j["object_name"] = mesh.object_name;
  j["face_part"] = mesh.face_part;
  nlohmann::json names = nlohmann::json::object();
  for (const auto& [id, name] : mesh.part_names) names[std::to_string(id)] = name;
  j["part_names"] = names;
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump() << '\n';
}

// Ericson, Real-Time Collision Detection, 5.1.5.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

Bvh::Bvh(const PartLabeledMesh& mesh, std::vector<int> faces) : faces_(std::move(faces)) {
  if (faces_.empty()) return;
  std::vector<Vec3> centroids(mesh.faces.size(), Vec3::Zero());
  for (int f : faces_) {
    const auto& t = mesh.faces[f];
    centroids[f] = (mesh.vertices[t[0]] + mesh.vertices[t[1]] + mesh.vertices[t[2]]) / 3.0;
  }
  nodes_.reserve(2 * faces_.size());
  build(mesh, centroids, 0, static_cast<int>(faces_.size()));
}

int Bvh::build(const PartLabeledMesh& mesh, const std::vector<Vec3>& centroids, int begin, int end) {
  constexpr int kLeafSize = 4;
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  Eigen::AlignedBox3d box;
  Eigen::AlignedBox3d centroid_box;
  for (int i = begin; i < end; ++i) {
    const auto& t = mesh.faces[faces_[i]];
    for (int k = 0; k < 3; ++k) box.extend(mesh.vertices[t[k]]);
    centroid_box.extend(centroids[faces_[i]]);
  }
  nodes_[id].box = box;
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= kLeafSize) return id;

  Eigen::Index axis = 0;
  centroid_box.sizes().maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(faces_.begin() + begin, faces_.begin() + mid, faces_.begin() + end,
                   [&](int a, int b) {
                     const double ca = centroids[a][axis];
                     const double cb = centroids[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  const int left = build(mesh, centroids, begin, mid);
  const int right = build(mesh, centroids, mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void Bvh::closest(const PartLabeledMesh& mesh, const Vec3& q, ClosestPoint& best, double& best_sq) const {
  if (nodes_.empty()) return;
  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (node.box.squaredExteriorDistance(q) > best_sq) continue;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int f = faces_[i];
        const auto& t = mesh.faces[f];
        const Vec3 p = closest_point_on_triangle(q, mesh.vertices[t[0]], mesh.vertices[t[1]],
                                                 mesh.vertices[t[2]]);
        const double d2 = (p - q).squaredNorm();
        if (d2 < best_sq || (d2 == best_sq && f < best.face)) {
          best_sq = d2;
          best.point = p;
          best.face = f;
        }
      }
      continue;
    }
    // Visit the nearer child first.
    const double dl = nodes_[node.left].box.squaredExteriorDistance(q);
    const double dr = nodes_[node.right].box.squaredExteriorDistance(q);
    if (dl < dr) {
      stack[top++] = node.right;
      stack[top++] = node.left;
    } else {
      stack[top++] = node.left;
      stack[top++] = node.right;
    }
  }
}

MeshIndex::MeshIndex(PartLabeledMesh mesh) : mesh_(std::move(mesh)) {
  std::vector<int> all(mesh_.faces.size());
  std::map<int, std::vector<int>> per_part;
  for (std::size_t f = 0; f < mesh_.faces.size(); ++f) {
    all[f] = static_cast<int>(f);
    per_part[mesh_.face_part[f]].push_back(static_cast<int>(f));
  }
  all_ = Bvh(mesh_, std::move(all));
  for (auto& [part, faces] : per_part) by_part_.emplace(part, Bvh(mesh_, std::move(faces)));
}

namespace {

ClosestPoint finish(const PartLabeledMesh& mesh, ClosestPoint best, double best_sq) {
  best.distance = std::sqrt(best_sq);
  best.normal = mesh.face_normal(best.face);
  best.part = mesh.face_part[best.face];
  return best;
}

}  // namespace

ClosestPoint MeshIndex::closest_point(const Vec3& q) const {
  ClosestPoint best;
  double best_sq = std::numeric_limits<double>::infinity();
  all_.closest(mesh_, q, best, best_sq);
  return finish(mesh_, best, best_sq);
}

ClosestPoint MeshIndex::closest_point(const Vec3& q, int part) const {
  const int parts[] = {part};
  return closest_point(q, parts);
}

ClosestPoint MeshIndex::closest_point(const Vec3& q, std::span<const int> parts) const {
  if (parts.empty()) throw InputError("closest_point: empty part subset");
  ClosestPoint best;
  double best_sq = std::numeric_limits<double>::infinity();
  for (int part : parts) {
    const auto it = by_part_.find(part);
    if (it == by_part_.end()) throw InputError("closest_point: unknown part id " + std::to_string(part));
    it->second.closest(mesh_, q, best, best_sq);
  }
  return finish(mesh_, best, best_sq);
}

double MeshIndex::winding_number(const Vec3& q) const {
  // Van Oosterom & Strackee solid angle per triangle.
  double total = 0.0;
  for (const auto& f : mesh_.faces) {
    const Vec3 a = mesh_.vertices[f[0]] - q;
    const Vec3 b = mesh_.vertices[f[1]] - q;
    const Vec3 c = mesh_.vertices[f[2]] - q;
    const double la = a.norm();
    const double lb = b.norm();
    const double lc = c.norm();
    const double det = a.dot(b.cross(c));
    const double denom = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
    total += 2.0 * std::atan2(det, denom);
  }
  return total / (4.0 * std::numbers::pi);
}

SignedQuery MeshIndex::signed_query(const Vec3& q) const {
  if (!mesh_.watertight) throw InputError("signed distance requires a watertight mesh");
  SignedQuery out;
  out.closest = closest_point(q);
  const bool inside = winding_number(q) > 0.5;
  out.signed_distance = inside ? -out.closest.distance : out.closest.distance;
  return out;
}

double MeshIndex::signed_distance(const Vec3& q) const { return signed_query(q).signed_distance; }

std::vector<SurfaceSample> sample_surface(const PartLabeledMesh& mesh, int part, int n,
                                          std::uint64_t seed) {
  if (n < 1) throw InputError("sample_surface: n must be >= 1");
  if (part >= 0 && !mesh.has_part(part)) throw InputError("unknown part id " + std::to_string(part));
  std::vector<int> faces;
  std::vector<double> cumulative;
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    if (part >= 0 && mesh.face_part[f] != part) continue;
    const double a = mesh.face_area(static_cast<int>(f));
    if (a <= 0.0) continue;
    total += a;
    faces.push_back(static_cast<int>(f));
    cumulative.push_back(total);
  }
  if (faces.empty() || !(total > 0.0)) throw InputError("part has zero area");

  Rng rng(seed);
  std::vector<SurfaceSample> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double r = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    if (it == cumulative.end()) --it;
    const int f = faces[static_cast<std::size_t>(it - cumulative.begin())];
    const double s = std::sqrt(rng.uniform());
    const double t = rng.uniform();
    const auto& tri = mesh.faces[f];
    const Vec3 p = (1.0 - s) * mesh.vertices[tri[0]] + s * (1.0 - t) * mesh.vertices[tri[1]] +
                   s * t * mesh.vertices[tri[2]];
    out.push_back({p, mesh.face_normal(f), mesh.face_part[f], f});
  }
  return out;
}

std::vector<Vec3> fibonacci_directions(int n) {
  if (n < 1) throw InputError("fibonacci_directions: n must be >= 1");
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Vec3> dirs;
  dirs.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double z = 1.0 - (2.0 * k + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = k * golden_angle;
    dirs.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return dirs;
}

}  // namespace dexforge
