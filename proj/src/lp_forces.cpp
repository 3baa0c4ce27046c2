#include "dexforge/energy.hpp"

#include <Eigen/Eigenvalues>

#include <limits>

namespace dexforge {

MatX grasp_matrix(const ContactSet& contacts) {
  const auto n = static_cast<Eigen::Index>(contacts.size());
  MatX g = MatX::Zero(6, 3 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g.block<3, 3>(0, 3 * i) = Mat3::Identity();
    g.block<3, 3>(3, 3 * i) = skew(contacts.positions[i]);
  }
  return g;
}

namespace {

// Column i is the wrench of unit force c_i at x_i.
Eigen::Matrix<double, 6, Eigen::Dynamic> wrench_columns(const ContactSet& contacts) {
  Eigen::Matrix<double, 6, Eigen::Dynamic> a(6, static_cast<Eigen::Index>(contacts.size()));
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    const Vec3& c = contacts.inward_normals[i];
    a.col(static_cast<Eigen::Index>(i)) << c, contacts.positions[i].cross(c);
  }
  return a;
}

}  // namespace

double dfc_energy(const ContactSet& contacts) {
  return wrench_columns(contacts).rowwise().sum().norm();
}

ContactForces optimal_contact_forces(const ContactSet& contacts, int iterations) {
  const auto a = wrench_columns(contacts);
  const Eigen::Index n = a.cols();
  ContactForces best;
  best.f = VecX::Ones(n);
  best.wrench_norm = (a * best.f).norm();
  if (n <= 1) return best;

  const MatX ata = a.transpose() * a;
  // Lipschitz constant of the gradient of ||A f||^2 is 2 ||A||_2^2.
  const double spectral = Eigen::SelfAdjointEigenSolver<MatX>(ata).eigenvalues().maxCoeff();
  if (!(spectral > 0.0)) {
    best.wrench_norm = 0.0;
    return best;
  }
  const double step = 1.0 / (2.0 * spectral);

  for (Eigen::Index k = 0; k < n; ++k) {
    VecX f = VecX::Ones(n);
    for (int it = 0; it < iterations; ++it) {
      const VecX grad = 2.0 * (ata * f);
      f = (f - step * grad).cwiseMax(0.0).cwiseMin(1.0);
      f[k] = 1.0;
    }
    const double p = (a * f).norm();
    if (p < best.wrench_norm) {
      best.wrench_norm = p;
      best.f = f;
    }
  }
  return best;
}

LpDfcResult lp_dfc_energy(const ContactSet& contacts, const EnergyWeights& weights) {
  const auto forces = optimal_contact_forces(contacts);
  LpDfcResult r;
  r.f = forces.f;
  r.wrench_norm = forces.wrench_norm;
  r.stable = forces.wrench_norm < weights.tau_fc && forces.f.minCoeff() >= weights.tau_f;
  r.value = r.stable ? forces.wrench_norm : dfc_energy(contacts);
  return r;
}

}  // namespace dexforge
