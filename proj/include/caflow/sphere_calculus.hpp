#pragma once
// Support functions sampled on a SphereGrid and the differential kernel
// every other module consumes: derivatives on S^n, principal radii, Gauss
// curvature and the canonical embedding X = s x + ∇̄s.

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "caflow/sphere_grid.hpp"

namespace caflow {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

// Sampled support function s(x), x in S^n. Values must stay positive.
struct SupportField {
  GridPtr grid;
  std::vector<double> values;

  SupportField() = default;
  SupportField(GridPtr g, std::vector<double> v);

  int dim() const { return grid->dim(); }
  std::size_t size() const { return values.size(); }
  // n = 2: restriction of the degree-1 homogeneous extension to each face
  // plane, u_F(y) = sqrt(1+|y|^2) s(x(y)); same node ordering as values.
  std::vector<double> face_values() const;
  // Throws OriginCrossed if some value is not strictly positive.
  void require_positive() const;
};

// First and second derivatives on S^n.
//   grad, hess: ∇̄s and ∇̄²s in an orthonormal tangent frame (n = 1: d/dθ).
//   n = 2 additionally: chart derivatives Du_F, D²u_F of the face graph and,
//   on request, D³u_F with d3u[k][c](i, j) = ∂_i∂_j∂_c u_F.
struct Derivatives {
  std::vector<Vec2> grad;
  std::vector<Mat2> hess;
  std::vector<Vec2> du;
  std::vector<Mat2> d2u;
  std::vector<std::array<Mat2, 2>> d3u;
};

// b = ∇̄²s + sI per node, its extreme eigenvalues (principal radii) and
// K = 1/det b.
struct RadiiField {
  std::vector<Mat2> b;  // n = 1: only b(0,0) is used
  std::vector<double> eig_min;
  std::vector<double> eig_max;
  std::vector<double> gauss_curvature;
};

// Canonical embedding and its chart derivatives (chart θ for n = 1, face
// coordinates y for n = 2). Vectors live in R^3; for n = 1 the z component is 0.
struct Embedding {
  std::vector<Vec3> X;
  std::vector<std::array<Vec3, 2>> Xi;
  std::vector<std::array<std::array<Vec3, 2>, 2>> Xij;
  bool has_chart_derivatives = false;
};

// Differentiates an arbitrary sampled function on S^n (no positivity needed).
// third_order needs a halo width of at least 3 (GridError otherwise).
Derivatives differentiate(const GridPtr& grid, std::span<const double> values,
                          bool third_order = false);
inline Derivatives differentiate(const SupportField& s, bool third_order = false) {
  return differentiate(s.grid, s.values, third_order);
}

// Throws ConvexityLost when det b <= 0 at some node.
RadiiField radii_and_curvature(const SupportField& s);
RadiiField radii_and_curvature(const SupportField& s, const Derivatives& d);

// n = 2 chart derivatives use X_i = u_ik E_k and X_ij = u_ijk E_k - u_ij N,
// E_k = e_k - y_k N, so `d` must carry d3u when they are requested.
Embedding embed(const GridPtr& grid, std::span<const double> values, const Derivatives& d,
                bool chart_derivatives);
Embedding embed(const GridPtr& grid, std::span<const double> values, bool chart_derivatives);
inline Embedding embed(const SupportField& s, bool chart_derivatives = false) {
  return embed(s.grid, s.values, chart_derivatives);
}

// Support function of the ellipsoid {y : yᵀQ⁻¹y <= 1}: s(x) = sqrt(xᵀQx).
SupportField ellipsoid_support(const Eigen::MatrixXd& Q, const GridPtr& grid);

struct Radii {
  double inner;
  double outer;
};
// Origin-centred radii: min s and max s.
Radii inner_outer_radii(const SupportField& s);

// Support function of A·(body of s): s_A(x) = |Aᵀx| s(Aᵀx/|Aᵀx|).
SupportField apply_linear_map(const SupportField& s, const Eigen::MatrixXd& A);

// Evaluates a sampled function at an arbitrary unit direction (trigonometric
// interpolation for n = 1, bicubic in the owning face chart for n = 2).
double interpolate(const GridPtr& grid, std::span<const double> values, const Vec3& direction);

// Maximum of a sampled function; n = 1 refines around the largest node with
// the trigonometric interpolant, n = 2 returns the node maximum.
double refined_max(const GridPtr& grid, std::span<const double> values);

// Derivatives of chart-local fields with respect to chart coordinates
// (spectral for n = 1; per-face 4th-order differences for n = 2, one-sided
// at face edges, no halo exchange). out[i][k] = ∂_i f at node k.
std::array<std::vector<double>, 2> chart_gradient(const SphereGrid& grid,
                                                  std::span<const double> field);

// Chart derivatives of a scalar function on S^n (spectral for n = 1; for
// n = 2 centred 4th-order differences across face edges via the halo).
std::array<std::vector<double>, 2> scalar_chart_gradient(const GridPtr& grid,
                                                         std::span<const double> field);

// Fills the extended (M+2w)^2 array of one face with s values plus halo.
void fill_face_with_halo(const SphereGrid& grid, std::span<const double> values, int face,
                         std::span<double> ext);

// Averages values over nodes shared by several faces (n = 2; no-op for n = 1).
void synchronize_shared(const SphereGrid& grid, std::span<double> values);

}  // namespace caflow
