#include "caflow/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "caflow/errors.hpp"

namespace caflow {

EllipsoidSpec EllipsoidSpec::from_shape(const Eigen::MatrixXd& Q) {
  if (Q.rows() != Q.cols() || Q.rows() < 2 || Q.rows() > 3)
    throw ConfigError("shape matrix must be 2x2 or 3x3");
  if ((Q - Q.transpose()).norm() > 1e-12 * std::max(1.0, Q.norm()))
    throw ConfigError("shape matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
  if (!(es.eigenvalues().minCoeff() > 0.0)) throw ConfigError("shape matrix is not positive definite");
  EllipsoidSpec e;
  e.Q = 0.5 * (Q + Q.transpose());
  e.semi_axes = es.eigenvalues().cwiseSqrt();
  const int n = static_cast<int>(Q.rows()) - 1;
  e.rho0 = std::pow(e.semi_axes.prod(), 2.0 / (n + 2));
  return e;
}

double exact_ellipsoid_factor(double rho0, double t, int n) {
  if (!(rho0 > 0.0)) throw ConfigError("rho0 must be positive");
  const double expo = ((n + 2.0) / (2.0 * (n + 1.0))) * std::expm1(((n + 1.0) / n) * t);
  return std::pow(rho0, expo);
}

double exact_sphere_radius(double R0, double t, int n) {
  if (!(R0 > 0.0)) throw ConfigError("R0 must be positive");
  return std::pow(R0, std::exp(((n + 1.0) / n) * t));
}

double self_similar_residual(std::span<const double> s, std::span<const double> K, int n) {
  const double c = std::exp(-2.0 * n / (n + 2.0));
  double r = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (!(K[k] > 0.0)) throw ConvexityLost("Gauss curvature not positive", k, K[k]);
    r = std::max(r, std::abs(c * std::pow(K[k], 1.0 / (n + 2.0)) - s[k]));
  }
  return r;
}

EllipsoidFit best_fit_ellipsoid(const SupportField& s, double eigen_floor) {
  s.require_positive();
  const int d = s.grid->ambient_dim();
  const int unknowns = d * (d + 1) / 2;
  const auto w = s.grid->weights();
  const std::size_t nodes = s.size();

  Eigen::MatrixXd A(nodes, unknowns);
  Eigen::VectorXd b(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    const Vec3& x = s.grid->x(k);
    const double sw = std::sqrt(w[k]);
    int c = 0;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) A(k, c++) = sw * (i == j ? 1.0 : 2.0) * x(i) * x(j);
    b(k) = sw * s.values[k] * s.values[k];
  }
  const Eigen::VectorXd q = A.colPivHouseholderQr().solve(b);
  Eigen::MatrixXd Q(d, d);
  int c = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) Q(i, j) = Q(j, i) = q(c++);

  EllipsoidFit fit;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
  Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() < eigen_floor) {
    fit.degenerate = true;
    fit.note = "FitDegenerate: smallest eigenvalue " + std::to_string(ev.minCoeff()) +
               " projected to the floor";
    ev = ev.cwiseMax(eigen_floor);
    Q = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  }
  fit.spec.Q = Q;
  fit.spec.semi_axes = ev.cwiseSqrt();
  fit.spec.rho0 = std::pow(fit.spec.semi_axes.prod(), 2.0 / (d + 1));

  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    const Eigen::VectorXd x = s.grid->x(k).head(d);
    const double diff = s.values[k] - std::sqrt(x.dot(Q * x));
    num += w[k] * diff * diff;
    den += w[k] * s.values[k] * s.values[k];
  }
  fit.roundness = std::sqrt(num / den);
  return fit;
}

}  // namespace caflow
