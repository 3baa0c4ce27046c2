#pragma once

#include "dexforge/common.hpp"

#include <functional>
#include <span>
#include <vector>

namespace dexforge {

struct FlowSamplePair {
  VecX x0;  // noise
  VecX x1;  // data
  double t = 0.0;
};

/// v(x, t)
using VelocityField = std::function<VecX(const VecX& x, double t)>;

struct Interpolation {
  VecX x_t;
  VecX target_velocity;
};

/// Linear path x_t = (1 - t) x0 + t x1 with constant velocity x1 - x0.
Interpolation interpolate(const FlowSamplePair& pair);

/// Mean over the batch of ||v(x_t, t) - (x1 - x0)||^2.
double cfm_loss(const VelocityField& field, std::span<const FlowSamplePair> pairs);

/// Forward Euler from t = 0 to t = 1 with uniform steps.
VecX euler_sample(const VelocityField& field, const VecX& x0, int steps);

/// Affine field v(x, t) = W [x; t; 1] fitted by least squares to the regression targets.
struct LinearField {
  MatX W;  // D x (D + 2)
  VecX operator()(const VecX& x, double t) const;
};
LinearField fit_linear_field(std::span<const FlowSamplePair> pairs, double ridge = 1e-9);

}  // namespace dexforge
