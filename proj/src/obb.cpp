#include "dexforge/obb.hpp"

#include "dexforge/mesh_geometry.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace dexforge {

Vec3 Obb::corner(int k) const {
  Vec3 local;
  for (int i = 0; i < 3; ++i) local[i] = (k >> i) & 1 ? half_extents[i] : -half_extents[i];
  return center + axes * local;
}

std::array<Vec3, 8> Obb::corners() const {
  std::array<Vec3, 8> out;
  for (int k = 0; k < 8; ++k) out[k] = corner(k);
  return out;
}

bool point_in_obb(const Obb& box, const Vec3& p, double margin) {
  const Vec3 local = box.to_local(p);
  for (int i = 0; i < 3; ++i) {
    if (std::abs(local[i]) > box.half_extents[i] + margin) return false;
  }
  return true;
}

namespace detail {

std::vector<Eigen::Vector2d> convex_hull_2d(std::vector<Eigen::Vector2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0.0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

Rect2 min_area_rectangle(const std::vector<Eigen::Vector2d>& hull) {
  Rect2 best;
  const std::size_t h = hull.size();
  if (h == 0) return best;
  if (h < 3) {
    const Eigen::Vector2d d = h == 2 ? Eigen::Vector2d(hull[1] - hull[0]) : Eigen::Vector2d::UnitX();
    best.u = d.norm() > 0.0 ? Eigen::Vector2d(d.normalized()) : Eigen::Vector2d::UnitX();
    const Eigen::Vector2d v(-best.u.y(), best.u.x());
    best.u_min = best.u_max = best.u.dot(hull[0]);
    best.v_min = best.v_max = v.dot(hull[0]);
    for (const auto& p : hull) {
      best.u_min = std::min(best.u_min, best.u.dot(p));
      best.u_max = std::max(best.u_max, best.u.dot(p));
    }
    best.area = 0.0;
    return best;
  }

  best.area = std::numeric_limits<double>::infinity();
  double scale = 0.0;
  for (const auto& p : hull) scale = std::max(scale, (p - hull[0]).norm());
  const double tie = 1e-12 * scale;
  // Calipers: for edge i, `hi` is extreme along the edge, `far` along the inward normal, `lo`
  // extreme against the edge. All three advance monotonically with i; ties advance too, since
  // box-aligned inputs put several hull vertices at the same height.
  std::size_t hi = 0, far = 0, lo = 0;
  std::size_t best_edge = 0;
  for (std::size_t i = 0; i < h; ++i) {
    const Eigen::Vector2d& p0 = hull[i];
    const Eigen::Vector2d e = (hull[(i + 1) % h] - p0).normalized();
    const Eigen::Vector2d n(-e.y(), e.x());
    if (i == 0) {
      for (std::size_t k = 0; k < h; ++k) {
        if (e.dot(hull[k]) > e.dot(hull[hi])) hi = k;
        if (n.dot(hull[k]) > n.dot(hull[far])) far = k;
        if (e.dot(hull[k]) < e.dot(hull[lo])) lo = k;
      }
    } else {
      for (std::size_t guard = 0; guard < h && e.dot(hull[(hi + 1) % h]) >= e.dot(hull[hi]) - tie; ++guard) hi = (hi + 1) % h;
      for (std::size_t guard = 0; guard < h && n.dot(hull[(far + 1) % h]) >= n.dot(hull[far]) - tie; ++guard) far = (far + 1) % h;
      for (std::size_t guard = 0; guard < h && e.dot(hull[(lo + 1) % h]) <= e.dot(hull[lo]) + tie; ++guard) lo = (lo + 1) % h;
    }
    const double area = (e.dot(hull[hi]) - e.dot(hull[lo])) * (n.dot(hull[far]) - n.dot(p0));
    if (area < best.area) {
      best.area = area;
      best_edge = i;
    }
  }

  // Exact bounds for the chosen orientation.
  const Eigen::Vector2d e = (hull[(best_edge + 1) % h] - hull[best_edge]).normalized();
  const Eigen::Vector2d n(-e.y(), e.x());
  best.u = e;
  best.u_min = best.v_min = std::numeric_limits<double>::infinity();
  best.u_max = best.v_max = -std::numeric_limits<double>::infinity();
  for (const auto& p : hull) {
    best.u_min = std::min(best.u_min, e.dot(p));
    best.u_max = std::max(best.u_max, e.dot(p));
    best.v_min = std::min(best.v_min, n.dot(p));
    best.v_max = std::max(best.v_max, n.dot(p));
  }
  best.area = (best.u_max - best.u_min) * (best.v_max - best.v_min);
  return best;
}

}  // namespace detail

namespace {

struct Candidate {
  double volume = std::numeric_limits<double>::infinity();
  Mat3 axes = Mat3::Identity();
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
};

Candidate box_for_direction(std::span<const Vec3> points, const Vec3& direction) {
  const Vec3 d = direction.normalized();
  const Vec3 b1 = any_perpendicular(d);
  const Vec3 b2 = d.cross(b1);
  std::vector<Eigen::Vector2d> projected;
  projected.reserve(points.size());
  double d_min = std::numeric_limits<double>::infinity();
  double d_max = -d_min;
  for (const Vec3& p : points) {
    projected.emplace_back(b1.dot(p), b2.dot(p));
    const double s = d.dot(p);
    d_min = std::min(d_min, s);
    d_max = std::max(d_max, s);
  }
  const auto rect = detail::min_area_rectangle(detail::convex_hull_2d(std::move(projected)));
  Candidate c;
  const Vec3 u = rect.u.x() * b1 + rect.u.y() * b2;
  const Vec3 v = d.cross(u);  // matches the 2-D left normal of u
  c.axes.col(0) = d;
  c.axes.col(1) = u;
  c.axes.col(2) = v;
  c.lo = Vec3(d_min, rect.u_min, rect.v_min);
  c.hi = Vec3(d_max, rect.u_max, rect.v_max);
  c.volume = (d_max - d_min) * rect.area;
  return c;
}

Obb to_obb(const Candidate& c) {
  const Vec3 mid = 0.5 * (c.lo + c.hi);
  const Vec3 half = 0.5 * (c.hi - c.lo);
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return half[a] > half[b]; });
  Obb box;
  box.center = c.axes * mid;
  for (int i = 0; i < 3; ++i) {
    box.axes.col(i) = c.axes.col(order[i]);
    box.half_extents[i] = std::max(half[order[i]], 1e-12);
  }
  if (box.axes.determinant() < 0.0) box.axes.col(2) = -box.axes.col(2);
  return box;
}

}  // namespace

Obb fit_obb(std::span<const Vec3> points, const ObbFitOptions& options) {
  if (points.size() < 3) throw InputError("degenerate point set");
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Eigen::Matrix<double, Eigen::Dynamic, 3> centered(points.size(), 3);
  for (std::size_t i = 0; i < points.size(); ++i) centered.row(static_cast<Eigen::Index>(i)) = (points[i] - mean).transpose();
  const Eigen::JacobiSVD<Eigen::Matrix<double, Eigen::Dynamic, 3>> svd(centered);
  const Vec3 sv = svd.singularValues();
  if (!(sv[0] > 0.0) || sv[1] <= 1e-9 * sv[0]) throw InputError("degenerate point set");

  std::vector<Vec3> seeds = fibonacci_directions(options.directions);
  seeds.push_back(Vec3::UnitX());
  seeds.push_back(Vec3::UnitY());
  seeds.push_back(Vec3::UnitZ());

  Candidate best;
  for (const Vec3& d : seeds) {
    Candidate c = box_for_direction(points, d);
    if (c.volume < best.volume) best = c;
  }

  if (options.refine) {
    const double kDeg = std::numbers::pi / 180.0;
    double step = 4.0 * kDeg;
    for (int iter = 0; iter < 2000 && step > 1e-5 * kDeg; ++iter) {
      bool improved = false;
      const Mat3 axes = best.axes;
      for (int a = 0; a < 3 && !improved; ++a) {
        const Vec3 axis = axes.col(a);
        const Vec3 t1 = any_perpendicular(axis);
        const Vec3 t2 = axis.cross(t1);
        for (int k = 0; k < 9; ++k) {
          Vec3 dir = axis;
          if (k > 0) {
            const double phi = (k - 1) * std::numbers::pi / 4.0;
            dir = std::cos(step) * axis + std::sin(step) * (std::cos(phi) * t1 + std::sin(phi) * t2);
          }
          Candidate c = box_for_direction(points, dir);
          if (c.volume < best.volume * (1.0 - 1e-12)) {
            best = c;
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
  }
  return to_obb(best);
}

}  // namespace dexforge
