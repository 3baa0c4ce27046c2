#include "dexforge/flow_match.hpp"

#include <Eigen/Cholesky>

namespace dexforge {

Interpolation interpolate(const FlowSamplePair& pair) {
  if (pair.x0.size() != pair.x1.size()) throw InputError("interpolate: x0 and x1 differ in size");
  if (!(pair.t >= 0.0 && pair.t <= 1.0)) throw InputError("interpolate: t outside [0, 1]");
  return {(1.0 - pair.t) * pair.x0 + pair.t * pair.x1, pair.x1 - pair.x0};
}

double cfm_loss(const VelocityField& field, std::span<const FlowSamplePair> pairs) {
  if (pairs.empty()) throw InputError("cfm_loss: empty batch");
  double sum = 0.0;
  for (const auto& p : pairs) {
    const Interpolation it = interpolate(p);
    sum += (field(it.x_t, p.t) - it.target_velocity).squaredNorm();
  }
  return sum / static_cast<double>(pairs.size());
}

VecX euler_sample(const VelocityField& field, const VecX& x0, int steps) {
  if (steps < 1) throw InputError("euler_sample: steps must be >= 1");
  const double h = 1.0 / steps;
  VecX x = x0;
  for (int k = 0; k < steps; ++k) {
    const VecX v = field(x, static_cast<double>(k) / steps);
    if (v.size() != x.size() || !v.allFinite()) throw Error("euler_sample: non-finite velocity");
    x += h * v;
  }
  return x;
}

VecX LinearField::operator()(const VecX& x, double t) const {
  VecX z(x.size() + 2);
  z << x, t, 1.0;
  return W * z;
}

LinearField fit_linear_field(std::span<const FlowSamplePair> pairs, double ridge) {
  if (pairs.empty()) throw InputError("fit_linear_field: empty batch");
  const Eigen::Index d = pairs.front().x0.size();
  MatX Z(d + 2, static_cast<Eigen::Index>(pairs.size()));
  MatX V(d, static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Interpolation it = interpolate(pairs[i]);
    const auto c = static_cast<Eigen::Index>(i);
    Z.col(c) << it.x_t, pairs[i].t, 1.0;
    V.col(c) = it.target_velocity;
  }
  const MatX gram = Z * Z.transpose() + ridge * MatX::Identity(d + 2, d + 2);
  LinearField f;
  f.W = gram.ldlt().solve(Z * V.transpose()).transpose();
  return f;
}

}  // namespace dexforge
