#pragma once
// Centro-affine tensor stack of the hypersurface X = s x + ∇̄s, computed in
// chart coordinates (θ for n = 1, face coordinates y for n = 2).
//
// Index conventions for 3-index objects stored as std::array<Mat2, 2>:
//   connections and mixed C:  a[k](i, j) = A^k_ij
//   lowered C:                a[k](i, j) = C_ijk
// For n = 1 only index 0 is meaningful.

#include <array>
#include <vector>

#include "caflow/sphere_calculus.hpp"

namespace caflow {

using Tensor3 = std::array<Mat2, 2>;

struct GaussData {
  std::vector<Mat2> g;
  std::vector<Tensor3> gamma_hat;
  std::vector<double> bracket;  // [X_1, ..., X_n, X]
  double g_symmetry_residual = 0.0;
  // max |g - (-[X_1..X_n, X_ij]/[X_1..X_n, X])|
  double crosscheck_residual = 0.0;
};

// Solves X_ij = Γ̂^k_ij X_k - g_ij X per node. Throws TransversalityLost.
GaussData gauss_decompose(const Embedding& emb, int n);

// Γ^k_ij = ½ g^kl (∂_i g_jl + ∂_j g_il - ∂_l g_ij), ∂ by chart_gradient.
std::vector<Tensor3> levi_civita(const SphereGrid& grid, const std::vector<Mat2>& g);
// Same with supplied metric derivatives dg[k][l](i, j) = ∂_l g_ij.
std::vector<Tensor3> levi_civita(const std::vector<Mat2>& g, const std::vector<Tensor3>& dg, int n);

struct CubicForm {
  std::vector<Tensor3> mixed;
  std::vector<Tensor3> low;
  std::vector<double> norm2;
  double symmetry_residual = 0.0;  // max |C_ijk - C_σ(ijk)|
};

CubicForm cubic_form(const std::vector<Tensor3>& gamma_hat, const std::vector<Tensor3>& gamma,
                     const std::vector<Mat2>& g, int n);

struct TchebychevField {
  std::vector<Vec2> T;
  std::vector<double> norm2;
  std::vector<double> H;
};

TchebychevField tchebychev(const SphereGrid& grid, const CubicForm& C, const std::vector<Mat2>& g,
                           const std::vector<Tensor3>& gamma);

struct ScalarWithResidual {
  std::vector<double> values;
  double residual = 0.0;
};

// ψ = det g / bracket²; residual max |T_i + (1/2n) ∂_i log ψ|.
ScalarWithResidual tchebychev_function(const GridPtr& grid, const std::vector<Mat2>& g,
                                       const std::vector<double>& bracket,
                                       const std::vector<Vec2>& T);

// ρ = s K^{-1/(n+2)}; residual max |T_i - ((n+2)/2n) ∂_i log ρ|.
ScalarWithResidual equiaffine_support(const SupportField& s, const std::vector<double>& K,
                                      const std::vector<Vec2>& T);

struct PickChi {
  std::vector<double> J;
  std::vector<double> chi;
};
// n >= 2 only; throws Unsupported for curves.
PickChi pick_and_chi(const CubicForm& C, const TchebychevField& T, int n);

// ∫ sqrt(det g) over chart coordinates.
double centroaffine_area(const SphereGrid& grid, const std::vector<Mat2>& g);

// O_n = |S^n|.
double sphere_measure(int n);

struct InvariantFields {
  int n = 1;
  std::vector<Mat2> g;
  std::vector<Mat2> g_inv;
  std::vector<Tensor3> gamma_hat;
  std::vector<Tensor3> gamma;
  std::vector<Tensor3> C_mixed;
  std::vector<Tensor3> C_low;
  std::vector<Vec2> T_low;
  std::vector<double> norm_T2;
  std::vector<double> norm_C2;
  std::vector<double> psi;
  std::vector<double> rho;
  std::vector<double> H;
  std::vector<double> J;    // empty for n = 1
  std::vector<double> chi;  // empty for n = 1
  std::vector<double> sqrt_det_g;
  std::vector<double> bracket;
  std::vector<double> gauss_curvature;
  std::vector<Vec3> X;
  std::vector<std::array<Vec3, 2>> Xi;
  double area = 0.0;

  double g_symmetry_residual = 0.0;
  double crosscheck_residual = 0.0;
  double C_symmetry_residual = 0.0;
  double psi_gradient_residual = 0.0;
  double relsupport_residual = 0.0;
};

InvariantFields compute_invariants(const SupportField& s);

// Inverse of a symmetric n×n block (n = 1 uses the (0,0) entry).
Mat2 metric_inverse(const Mat2& g, int n);
double metric_det(const Mat2& g, int n);

// Chart components V^k of the tangential velocity relating the support
// parametrisation to the flow ∂_t X = ½ T^k X_k + (-(1/2n) log ψ + λ) X:
// X_t^(flow) - ∂_t X(x, t)|_x = V^k X_k (least squares per node).
std::vector<Vec2> tangential_velocity(const SupportField& s, std::span<const double> s_t,
                                      const InvariantFields& inv, double lambda);

}  // namespace caflow
