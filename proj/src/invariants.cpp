#include "caflow/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "caflow/errors.hpp"

namespace caflow {

namespace {

Eigen::VectorXd head(const Vec3& v, int d) { return v.head(d); }

}  // namespace

Mat2 metric_inverse(const Mat2& g, int n) {
  Mat2 inv = Mat2::Zero();
  if (n == 1) {
    inv(0, 0) = 1.0 / g(0, 0);
    return inv;
  }
  const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
  inv << g(1, 1) / det, -g(0, 1) / det, -g(1, 0) / det, g(0, 0) / det;
  return inv;
}

double metric_det(const Mat2& g, int n) {
  return n == 1 ? g(0, 0) : g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
}

double sphere_measure(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * (n + 1)) / std::tgamma(0.5 * (n + 1));
}

GaussData gauss_decompose(const Embedding& emb, int n) {
  if (!emb.has_chart_derivatives) throw ConfigError("gauss_decompose needs chart derivatives");
  const std::size_t nodes = emb.X.size();
  const int d = n + 1;
  GaussData out;
  out.g.assign(nodes, Mat2::Zero());
  out.gamma_hat.assign(nodes, Tensor3{Mat2::Zero(), Mat2::Zero()});
  out.bracket.resize(nodes);
  Eigen::MatrixXd F(d, d), Fj(d, d);
  for (std::size_t k = 0; k < nodes; ++k) {
    double scale = emb.X[k].head(d).norm();
    for (int i = 0; i < n; ++i) {
      F.col(i) = head(emb.Xi[k][i], d);
      scale *= emb.Xi[k][i].head(d).norm();
    }
    F.col(n) = head(emb.X[k], d);
    const double det = F.determinant();
    if (!(std::abs(det) > 1e-12 * scale)) throw TransversalityLost("frame determinant vanishes", k, det);
    out.bracket[k] = det;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(F);
    Mat2& g = out.g[k];
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const Eigen::VectorXd rhs = head(emb.Xij[k][i][j], d);
        const Eigen::VectorXd c = lu.solve(rhs);
        for (int m = 0; m < n; ++m) out.gamma_hat[k][m](i, j) = c(m);
        g(i, j) = -c(n);
        Fj = F;
        Fj.col(n) = rhs;
        out.crosscheck_residual =
            std::max(out.crosscheck_residual, std::abs(g(i, j) + Fj.determinant() / det));
      }
    }
    if (n == 2) {
      out.g_symmetry_residual = std::max(out.g_symmetry_residual, std::abs(g(0, 1) - g(1, 0)));
      g(0, 1) = g(1, 0) = 0.5 * (g(0, 1) + g(1, 0));
    }
  }
  return out;
}

std::vector<Tensor3> levi_civita(const SphereGrid& grid, const std::vector<Mat2>& g) {
  const int n = grid.dim();
  const std::size_t nodes = g.size();
  std::vector<Tensor3> dg(nodes, {Mat2::Zero(), Mat2::Zero()});
  std::vector<double> comp(nodes);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      for (std::size_t k = 0; k < nodes; ++k) comp[k] = g[k](i, j);
      const auto grad = chart_gradient(grid, comp);
      for (std::size_t k = 0; k < nodes; ++k)
        for (int l = 0; l < n; ++l) dg[k][l](i, j) = dg[k][l](j, i) = grad[l][k];
    }
  }
  return levi_civita(g, dg, n);
}

std::vector<Tensor3> levi_civita(const std::vector<Mat2>& g, const std::vector<Tensor3>& dg, int n) {
  const std::size_t nodes = g.size();
  std::vector<Tensor3> gamma(nodes, Tensor3{Mat2::Zero(), Mat2::Zero()});
  for (std::size_t k = 0; k < nodes; ++k) {
    const Mat2 ginv = metric_inverse(g[k], n);
    for (int m = 0; m < n; ++m)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double acc = 0.0;
          for (int l = 0; l < n; ++l)
            acc += ginv(m, l) * (dg[k][i](j, l) + dg[k][j](i, l) - dg[k][l](i, j));
          gamma[k][m](i, j) = 0.5 * acc;
        }
  }
  return gamma;
}

CubicForm cubic_form(const std::vector<Tensor3>& gamma_hat, const std::vector<Tensor3>& gamma,
                     const std::vector<Mat2>& g, int n) {
  const std::size_t nodes = g.size();
  CubicForm C;
  C.mixed.assign(nodes, Tensor3{Mat2::Zero(), Mat2::Zero()});
  C.low.assign(nodes, Tensor3{Mat2::Zero(), Mat2::Zero()});
  C.norm2.assign(nodes, 0.0);
  for (std::size_t k = 0; k < nodes; ++k) {
    for (int m = 0; m < n; ++m) C.mixed[k][m] = gamma_hat[k][m] - gamma[k][m];
    for (int c = 0; c < n; ++c)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double acc = 0.0;
          for (int l = 0; l < n; ++l) acc += C.mixed[k][l](i, j) * g[k](l, c);
          C.low[k][c](i, j) = acc;
        }
    const Mat2 gi = metric_inverse(g[k], n);
    double norm = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int c = 0; c < n; ++c)
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
              for (int e = 0; e < n; ++e)
                norm += C.low[k][c](i, j) * C.low[k][e](a, b) * gi(i, a) * gi(j, b) * gi(c, e);
    C.norm2[k] = norm;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int c = 0; c < n; ++c) {
          const double v = C.low[k][c](i, j);
          C.symmetry_residual = std::max({C.symmetry_residual, std::abs(v - C.low[k][c](j, i)),
                                          std::abs(v - C.low[k][i](c, j)),
                                          std::abs(v - C.low[k][j](i, c))});
        }
  }
  return C;
}

TchebychevField tchebychev(const SphereGrid& grid, const CubicForm& C, const std::vector<Mat2>& g,
                           const std::vector<Tensor3>& gamma) {
  const int n = grid.dim();
  const std::size_t nodes = g.size();
  TchebychevField out;
  out.T.assign(nodes, Vec2::Zero());
  out.norm2.assign(nodes, 0.0);
  out.H.assign(nodes, 0.0);
  for (std::size_t k = 0; k < nodes; ++k) {
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int m = 0; m < n; ++m) acc += C.mixed[k][m](m, i);
      out.T[k](i) = acc / n;
    }
    const Mat2 gi = metric_inverse(g[k], n);
    double norm = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) norm += gi(i, j) * out.T[k](i) * out.T[k](j);
    out.norm2[k] = norm;
  }
  // dT[j][k] (component i) = ∂_j T_i
  std::array<std::array<std::vector<double>, 2>, 2> dT;
  std::vector<double> comp(nodes);
  for (int i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < nodes; ++k) comp[k] = out.T[k](i);
    dT[i] = chart_gradient(grid, comp);
  }
  for (std::size_t k = 0; k < nodes; ++k) {
    const Mat2 gi = metric_inverse(g[k], n);
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double cov = dT[i][j][k];
        for (int m = 0; m < n; ++m) cov -= gamma[k][m](i, j) * out.T[k](m);
        acc += gi(i, j) * cov;
      }
    out.H[k] = acc / n;
  }
  return out;
}

ScalarWithResidual tchebychev_function(const GridPtr& grid, const std::vector<Mat2>& g,
                                       const std::vector<double>& bracket,
                                       const std::vector<Vec2>& T) {
  const int n = grid->dim();
  const std::size_t nodes = g.size();
  ScalarWithResidual out;
  out.values.resize(nodes);
  std::vector<double> logpsi(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    out.values[k] = metric_det(g[k], n) / (bracket[k] * bracket[k]);
    logpsi[k] = std::log(out.values[k]);
  }
  const auto grad = scalar_chart_gradient(grid, logpsi);
  for (std::size_t k = 0; k < nodes; ++k)
    for (int i = 0; i < n; ++i)
      out.residual = std::max(out.residual, std::abs(T[k](i) + grad[i][k] / (2.0 * n)));
  return out;
}

ScalarWithResidual equiaffine_support(const SupportField& s, const std::vector<double>& K,
                                      const std::vector<Vec2>& T) {
  const int n = s.dim();
  const std::size_t nodes = s.size();
  ScalarWithResidual out;
  out.values.resize(nodes);
  std::vector<double> logrho(nodes);
  for (std::size_t k = 0; k < nodes; ++k) {
    if (!(K[k] > 0.0)) throw ConvexityLost("Gauss curvature not positive", k, K[k]);
    out.values[k] = s.values[k] * std::pow(K[k], -1.0 / (n + 2));
    logrho[k] = std::log(out.values[k]);
  }
  if (T.empty()) return out;
  const auto grad = scalar_chart_gradient(s.grid, logrho);
  const double c = (n + 2.0) / (2.0 * n);
  for (std::size_t k = 0; k < nodes; ++k)
    for (int i = 0; i < n; ++i)
      out.residual = std::max(out.residual, std::abs(T[k](i) - c * grad[i][k]));
  return out;
}

PickChi pick_and_chi(const CubicForm& C, const TchebychevField& T, int n) {
  if (n < 2) throw Unsupported("the Pick invariant and normalised scalar curvature need n >= 2");
  PickChi out;
  out.J.resize(C.norm2.size());
  out.chi.resize(C.norm2.size());
  for (std::size_t k = 0; k < out.J.size(); ++k) {
    out.J[k] = C.norm2[k] / (n * (n - 1.0));
    out.chi[k] = out.J[k] - (n / (n - 1.0)) * T.norm2[k] + 1.0;
  }
  return out;
}

double centroaffine_area(const SphereGrid& grid, const std::vector<Mat2>& g) {
  const auto w = grid.chart_weights();
  double area = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double det = metric_det(g[k], grid.dim());
    if (!(det > 0.0)) throw ConvexityLost("centro-affine metric not positive definite", k, det);
    area += w[k] * std::sqrt(det);
  }
  return area;
}

InvariantFields compute_invariants(const SupportField& s) {
  const int n = s.dim();
  const SphereGrid& grid = *s.grid;
  const Derivatives d = differentiate(s, n == 2);
  const RadiiField radii = radii_and_curvature(s, d);
  const Embedding emb = embed(s.grid, s.values, d, true);
  GaussData gd = gauss_decompose(emb, n);

  InvariantFields inv;
  inv.n = n;
  if (n == 1) {
    inv.gamma = levi_civita(grid, gd.g);
  } else {
    // g = D²u/u in face coordinates, so ∂_l g_ij = u_ijl/u - u_ij u_l/u².
    std::vector<Tensor3> dg(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double u = grid.chart_w(k) * s.values[k];
      for (int l = 0; l < 2; ++l) dg[k][l] = d.d3u[k][l] / u - d.d2u[k] * (d.du[k](l) / (u * u));
    }
    inv.gamma = levi_civita(gd.g, dg, n);
  }
  CubicForm C = cubic_form(gd.gamma_hat, inv.gamma, gd.g, n);
  TchebychevField T = tchebychev(grid, C, gd.g, inv.gamma);
  ScalarWithResidual psi = tchebychev_function(s.grid, gd.g, gd.bracket, T.T);
  ScalarWithResidual rho = equiaffine_support(s, radii.gauss_curvature, T.T);
  if (n >= 2) {
    PickChi pc = pick_and_chi(C, T, n);
    inv.J = std::move(pc.J);
    inv.chi = std::move(pc.chi);
  }
  inv.area = centroaffine_area(grid, gd.g);

  inv.g_inv.resize(gd.g.size());
  inv.sqrt_det_g.resize(gd.g.size());
  for (std::size_t k = 0; k < gd.g.size(); ++k) {
    inv.g_inv[k] = metric_inverse(gd.g[k], n);
    inv.sqrt_det_g[k] = std::sqrt(metric_det(gd.g[k], n));
  }
  inv.g_symmetry_residual = gd.g_symmetry_residual;
  inv.crosscheck_residual = gd.crosscheck_residual;
  inv.C_symmetry_residual = C.symmetry_residual;
  inv.psi_gradient_residual = psi.residual;
  inv.relsupport_residual = rho.residual;
  inv.g = std::move(gd.g);
  inv.gamma_hat = std::move(gd.gamma_hat);
  inv.bracket = std::move(gd.bracket);
  inv.C_mixed = std::move(C.mixed);
  inv.C_low = std::move(C.low);
  inv.norm_C2 = std::move(C.norm2);
  inv.T_low = std::move(T.T);
  inv.norm_T2 = std::move(T.norm2);
  inv.H = std::move(T.H);
  inv.psi = std::move(psi.values);
  inv.rho = std::move(rho.values);
  inv.gauss_curvature = radii.gauss_curvature;
  inv.X = emb.X;
  inv.Xi = emb.Xi;
  return inv;
}

std::vector<Vec2> tangential_velocity(const SupportField& s, std::span<const double> s_t,
                                      const InvariantFields& inv, double lambda) {
  const int n = s.dim();
  const Embedding moving = embed(s.grid, s_t, false);
  std::vector<Vec2> V(s.size(), Vec2::Zero());
  for (std::size_t k = 0; k < s.size(); ++k) {
    const Vec2 Tup = inv.g_inv[k] * inv.T_low[k];
    Vec3 target = (-std::log(inv.psi[k]) / (2.0 * n) + lambda) * inv.X[k] - moving.X[k];
    for (int i = 0; i < n; ++i) target += 0.5 * Tup(i) * inv.Xi[k][i];
    if (n == 1) {
      V[k](0) = target.dot(inv.Xi[k][0]) / inv.Xi[k][0].squaredNorm();
    } else {
      Eigen::Matrix<double, 3, 2> A;
      A.col(0) = inv.Xi[k][0];
      A.col(1) = inv.Xi[k][1];
      V[k] = (A.transpose() * A).ldlt().solve(A.transpose() * target);
    }
  }
  return V;
}

}  // namespace caflow
