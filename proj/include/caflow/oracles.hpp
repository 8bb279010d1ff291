#pragma once
// Closed-form trajectories and ellipsoid fitting.

#include <Eigen/Dense>
#include <string>

#include "caflow/sphere_calculus.hpp"

namespace caflow {

struct EllipsoidSpec {
  Eigen::MatrixXd Q;           // s(x) = sqrt(xᵀQx)
  Eigen::VectorXd semi_axes;   // sqrt of the eigenvalues of Q, ascending
  double rho0 = 1.0;           // (prod a_i)^{2/(n+2)}

  static EllipsoidSpec from_shape(const Eigen::MatrixXd& Q);  // ConfigError unless SPD
  int dim() const { return static_cast<int>(Q.rows()) - 1; }
};

// ρ0^{((n+2)/(2(n+1)))(exp(((n+1)/n)t) - 1)}
double exact_ellipsoid_factor(double rho0, double t, int n);

// R0^{exp(((n+1)/n)t)}
double exact_sphere_radius(double R0, double t, int n);

// max |exp(-2n/(n+2)) K^{1/(n+2)} - s|
double self_similar_residual(std::span<const double> s, std::span<const double> K, int n);

struct EllipsoidFit {
  EllipsoidSpec spec;
  double roundness = 0.0;  // ||s - sqrt(xᵀQx)||₂ / ||s||₂
  bool degenerate = false;
  std::string note;
};

// Weighted least squares s² ≈ xᵀQx, Q projected onto eigenvalues >= floor.
EllipsoidFit best_fit_ellipsoid(const SupportField& s, double eigen_floor = 1e-12);

}  // namespace caflow
