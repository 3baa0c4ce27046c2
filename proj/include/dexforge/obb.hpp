#pragma once

#include "dexforge/common.hpp"

#include <array>
#include <span>
#include <vector>

namespace dexforge {

/// Oriented box. Columns of `axes` form a right-handed rotation; half extents sorted descending.
struct Obb {
  Vec3 center = Vec3::Zero();
  Mat3 axes = Mat3::Identity();
  Vec3 half_extents = Vec3::Ones();

  Vec3 axis(int i) const { return axes.col(i); }
  double volume() const { return 8.0 * half_extents.prod(); }
  double diagonal() const { return 2.0 * half_extents.norm(); }
  /// Corner k has sign (+/-) on axis i given by bit i of k (set bit = +).
  Vec3 corner(int k) const;
  std::array<Vec3, 8> corners() const;
  Vec3 to_local(const Vec3& p) const { return axes.transpose() * (p - center); }
};

struct ObbFitOptions {
  int directions = 256;
  // Local pattern search around the best lattice candidate.
  bool refine = true;
};

/// Minimum-volume box over Fibonacci-lattice x-axis candidates, each completed by the
/// minimum-area rectangle of the projected points (rotating calipers).
Obb fit_obb(std::span<const Vec3> points, const ObbFitOptions& options = {});

/// Closed-box containment with an optional margin on every side.
bool point_in_obb(const Obb& box, const Vec3& p, double margin = 0.0);

namespace detail {

struct Rect2 {
  double area = 0.0;
  Eigen::Vector2d u = Eigen::Vector2d::UnitX();  // first rectangle axis
  double u_min = 0.0, u_max = 0.0, v_min = 0.0, v_max = 0.0;
};

std::vector<Eigen::Vector2d> convex_hull_2d(std::vector<Eigen::Vector2d> pts);
/// Minimum-area enclosing rectangle of a convex polygon (counter-clockwise).
Rect2 min_area_rectangle(const std::vector<Eigen::Vector2d>& hull);

}  // namespace detail

}  // namespace dexforge
