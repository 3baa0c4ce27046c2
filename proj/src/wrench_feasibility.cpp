#include "dexforge/wrench_feasibility.hpp"

#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <numbers>

namespace dexforge {

NnlsResult nnls(const MatX& A, const VecX& b, int max_iterations) {
  const Eigen::Index n = A.cols();
  if (A.rows() != b.size()) throw InputError("nnls: dimension mismatch");
  if (max_iterations <= 0) max_iterations = static_cast<int>(3 * n + 10);
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() * A.cwiseAbs().colwise().sum().maxCoeff() *
                     static_cast<double>(std::max(A.rows(), n));

  VecX x = VecX::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  NnlsResult out;

  auto solve_passive = [&](VecX& s) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n; ++i) if (passive[i]) idx.push_back(i);
    MatX Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) Ap.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
    const VecX sp = Ap.completeOrthogonalDecomposition().solve(b);
    s = VecX::Zero(n);
    for (std::size_t k = 0; k < idx.size(); ++k) s[idx[k]] = sp[static_cast<Eigen::Index>(k)];
  };

  VecX w = A.transpose() * (b - A * x);
  int iter = 0;
  while (iter < max_iterations) {
    Eigen::Index j = -1;
    double best = tol;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!passive[i] && w[i] > best) {
        best = w[i];
        j = i;
      }
    }
    if (j < 0) break;
    passive[j] = true;

    VecX s;
    for (;;) {
      ++iter;
      solve_passive(s);
      double alpha = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) {
        if (passive[i] && s[i] <= 0.0) alpha = std::min(alpha, x[i] / (x[i] - s[i]));
      }
      if (!std::isfinite(alpha)) break;
      x += alpha * (s - x);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (passive[i] && x[i] <= tol) {
          passive[i] = false;
          x[i] = 0.0;
        }
      }
      if (iter >= max_iterations) break;
    }
    x = s.cwiseMax(0.0);
    w = A.transpose() * (b - A * x);
  }
  out.x = x;
  out.residual = (A * x - b).norm();
  out.iterations = iter;
  return out;
}

MatX friction_cone_edges(const Vec3& inward_normal, double mu, int edges) {
  if (edges < 1) throw InputError("friction cone needs at least one edge");
  if (mu < 0.0) throw InputError("friction coefficient must be nonnegative");
  const Vec3 n = inward_normal.normalized();
  const Vec3 t1 = any_perpendicular(n);
  const Vec3 t2 = n.cross(t1);
  MatX out(3, edges);
  for (int k = 0; k < edges; ++k) {
    const double phi = 2.0 * std::numbers::pi * k / edges;
    out.col(k) = n + mu * (std::cos(phi) * t1 + std::sin(phi) * t2);
  }
  return out;
}

WrenchSystem gravity_wrench_system(std::span<const GravityContact> contacts, const Vec3& center,
                                   const Vec3& gravity_direction, const GravityParams& params) {
  const int m = static_cast<int>(contacts.size());
  const int k = params.cone_edges;
  const double weight = params.mass * params.g;
  WrenchSystem sys;
  sys.A = MatX::Zero(6 + m, m * k + m);
  sys.b = VecX::Zero(6 + m);
  for (int c = 0; c < m; ++c) {
    const MatX cone = friction_cone_edges(contacts[c].inward_normal, params.mu, k);
    const Vec3 r = contacts[c].point - center;
    for (int e = 0; e < k; ++e) {
      const Vec3 f = cone.col(e);
      sys.A.block<3, 1>(0, c * k + e) = f;
      sys.A.block<3, 1>(3, c * k + e) = r.cross(f);
      sys.A(6 + c, c * k + e) = 1.0;  // each edge carries unit normal force
    }
    sys.A(6 + c, m * k + c) = 1.0;
    sys.b[6 + c] = params.force_cap_factor * weight;
  }
  // Contact forces must cancel gravity: sum f = -m g d, zero net torque about the center.
  sys.b.head<3>() = -weight * gravity_direction.normalized();
  return sys;
}

bool gravity_feasible(std::span<const GravityContact> contacts, const Vec3& center,
                      const Vec3& gravity_direction, const GravityParams& params) {
  if (contacts.empty()) return false;
  const WrenchSystem sys = gravity_wrench_system(contacts, center, gravity_direction, params);
  const NnlsResult r = nnls(sys.A, sys.b);
  return r.residual < params.residual_factor * params.mass * params.g;
}

GravityResult gravity_resist_check(std::span<const GravityContact> contacts, const Vec3& center,
                                   const GravityParams& params) {
  static const char* kNames[6] = {"+x", "-x", "+y", "-y", "+z", "-z"};
  GravityResult out;
  for (int a = 0; a < 6; ++a) {
    Vec3 d = Vec3::Zero();
    d[a / 2] = a % 2 == 0 ? 1.0 : -1.0;
    if (!gravity_feasible(contacts, center, d, params)) out.fail_axes.emplace_back(kNames[a]);
  }
  out.ok = out.fail_axes.empty();
  return out;
}

}  // namespace dexforge
