#pragma once

#include "dexforge/common.hpp"

#include <span>
#include <string>
#include <vector>

namespace dexforge {

struct NnlsResult {
  VecX x;
  double residual = 0.0;  // ||A x - b||
  int iterations = 0;
};

/// min ||A x - b|| subject to x >= 0 (Lawson-Hanson active set).
NnlsResult nnls(const MatX& A, const VecX& b, int max_iterations = 0);

struct GravityContact {
  Vec3 point;
  Vec3 inward_normal;  // unit, pointing into the object
};

struct GravityParams {
  double mu = 0.5;
  double mass = 0.1;           // kg
  double g = 9.81;             // m/s^2
  int cone_edges = 8;
  double force_cap_factor = 10.0;   // per-contact normal force cap, in units of m*g
  double residual_factor = 1e-6;    // feasible iff NNLS residual < this * m*g
};

/// 3 x k matrix of cone edge generators n + mu * t_k, each with unit normal component.
MatX friction_cone_edges(const Vec3& inward_normal, double mu, int edges);

/// Equality system [W 0; C I] [lambda; s] = [-w_gravity; cap] whose nonnegative solutions are the
/// admissible contact force combinations. Torques are taken about `center`.
struct WrenchSystem {
  MatX A;
  VecX b;
};
WrenchSystem gravity_wrench_system(std::span<const GravityContact> contacts, const Vec3& center,
                                   const Vec3& gravity_direction, const GravityParams& params);

bool gravity_feasible(std::span<const GravityContact> contacts, const Vec3& center,
                      const Vec3& gravity_direction, const GravityParams& params);

struct GravityResult {
  bool ok = false;
  std::vector<std::string> fail_axes;  // subset of +x, -x, +y, -y, +z, -z
};

/// Feasibility against gravity along each of the six signed coordinate axes.
GravityResult gravity_resist_check(std::span<const GravityContact> contacts, const Vec3& center,
                                   const GravityParams& params);

}  // namespace dexforge
