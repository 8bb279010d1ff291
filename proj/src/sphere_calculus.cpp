#include "caflow/sphere_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "caflow/errors.hpp"
#include "caflow/kernels.hpp"

namespace caflow {

namespace {

// 4th-order first-derivative stencils (numerators over 12h).
constexpr double kCentered1[5] = {1.0, -8.0, 0.0, 8.0, -1.0};
constexpr double kCentered2[5] = {-1.0, 16.0, -30.0, 16.0, -1.0};
constexpr double kCentered3[7] = {1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0};  // over 8h³
constexpr double kEdge0[5] = {-25.0, 48.0, -36.0, 16.0, -3.0};
constexpr double kEdge1[5] = {-3.0, -10.0, 18.0, -6.0, 1.0};

// ∂f at position i of a strided line of length m.
double line_derivative(const double* f, std::ptrdiff_t stride, int i, int m, double h) {
  auto at = [&](int idx) { return f[idx * stride]; };
  double acc = 0.0;
  if (i >= 2 && i <= m - 3) {
    for (int a = 0; a < 5; ++a) acc += kCentered1[a] * at(i - 2 + a);
  } else if (i == 0) {
    for (int a = 0; a < 5; ++a) acc += kEdge0[a] * at(a);
  } else if (i == 1) {
    for (int a = 0; a < 5; ++a) acc += kEdge1[a] * at(a);
  } else if (i == m - 2) {
    for (int a = 0; a < 5; ++a) acc -= kEdge1[a] * at(m - 1 - a);
  } else {
    for (int a = 0; a < 5; ++a) acc -= kEdge0[a] * at(m - 1 - a);
  }
  return acc / (12.0 * h);
}

// Frame map S = (I - yyᵀ/w²)^{-1/2} = I + c yyᵀ with c = (w-1)/|y|².
Mat2 frame_map(double y1, double y2, double w) {
  const double r2 = y1 * y1 + y2 * y2;
  const double c = r2 < 1e-14 ? 0.5 : (w - 1.0) / r2;
  Mat2 S;
  S << 1.0 + c * y1 * y1, c * y1 * y2, c * y1 * y2, 1.0 + c * y2 * y2;
  return S;
}

void sym_eigen(const Mat2& b, double& lo, double& hi) {
  const double mean = 0.5 * (b(0, 0) + b(1, 1));
  const double half = 0.5 * (b(0, 0) - b(1, 1));
  const double off = 0.5 * (b(0, 1) + b(1, 0));
  const double rad = std::sqrt(half * half + off * off);
  lo = mean - rad;
  hi = mean + rad;
}

double trig_cardinal(int n, double x) {
  const double half = 0.5 * x;
  const double sh = std::sin(half);
  if (std::abs(sh) < 1e-15) return 1.0;
  if (n % 2 == 0) return std::sin(0.5 * n * x) * std::cos(half) / (n * sh);
  return std::sin(0.5 * n * x) / (n * sh);
}

}  // namespace

SupportField::SupportField(GridPtr g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
  if (!grid) throw ConfigError("support field without grid");
  if (values.size() != grid->node_count())
    throw ConfigError("support field has " + std::to_string(values.size()) + " values, grid has " +
                      std::to_string(grid->node_count()) + " nodes");
}

std::vector<double> SupportField::face_values() const {
  std::vector<double> u(values.size());
  if (grid->dim() == 1) return values;
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = grid->chart_w(k) * values[k];
  return u;
}

void SupportField::require_positive() const {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!(values[k] > 0.0)) {
      if (!std::isfinite(values[k])) throw NumericalBlowup("non-finite support value", k, values[k]);
      throw OriginCrossed("support function not positive", k, values[k]);
    }
  }
}

void fill_face_with_halo(const SphereGrid& grid, std::span<const double> values, int face,
                         std::span<double> ext) {
  const int m = grid.face_size();
  const int hw = grid.halo_width();
  const int e = grid.extended_size();
  // Phase 1: interior copy. Phase 2: halo from neighbours (reads only `values`).
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      ext[static_cast<std::size_t>(j + hw) * e + (i + hw)] = values[grid.node_index(face, i, j)];
  const HaloPlan& plan = grid.halo(face);
  for (std::size_t t = 0; t < plan.target.size(); ++t) {
    double acc = 0.0;
    for (std::size_t q = plan.offset[t]; q < plan.offset[t + 1]; ++q)
      acc += plan.weight[q] * values[plan.source[q]];
    ext[plan.target[t]] = acc;
  }
}

void synchronize_shared(const SphereGrid& grid, std::span<double> values) {
  for (const auto& group : grid.shared_nodes()) {
    double acc = 0.0;
    for (std::size_t k : group) acc += values[k];
    acc /= static_cast<double>(group.size());
    for (std::size_t k : group) values[k] = acc;
  }
}

Derivatives differentiate(const GridPtr& grid_ptr, std::span<const double> values,
                          bool third_order) {
  const SphereGrid& grid = *grid_ptr;
  const std::size_t nodes = grid.node_count();
  Derivatives d;
  d.grad.assign(nodes, Vec2::Zero());
  d.hess.assign(nodes, Mat2::Zero());

  if (grid.dim() == 1) {
    // deviation from the mean
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(nodes);
    std::vector<double> dev(values.begin(), values.end()), s1(nodes), s2(nodes);
    for (double& v : dev) v -= mean;
    kernels::matvec(grid.d1_matrix(), dev, s1);
    kernels::matvec(grid.d2_matrix(), dev, s2);
    for (std::size_t k = 0; k < nodes; ++k) {
      d.grad[k](0) = s1[k];
      d.hess[k](0, 0) = s2[k];
    }
    return d;
  }

  d.du.assign(nodes, Vec2::Zero());
  d.d2u.assign(nodes, Mat2::Zero());
  const int m = grid.face_size();
  const int hw = grid.halo_width();
  if (third_order) {
    if (hw < 3) throw GridError("third derivatives need a halo width of at least 3");
    d.d3u.assign(nodes, {Mat2::Zero(), Mat2::Zero()});
  }
  const int e = grid.extended_size();
  const double h = grid.spacing();
  std::vector<double> ext(static_cast<std::size_t>(e) * e);

  for (int f = 0; f < SphereGrid::kFaces; ++f) {
    fill_face_with_halo(grid, values, f, ext);
    auto at = [&](int i, int j) { return ext[static_cast<std::size_t>(j + hw) * e + (i + hw)]; };
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < m; ++i) {
        const std::size_t k = grid.node_index(f, i, j);
        double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0;
        for (int a = 0; a < 5; ++a) {
          s1 += kCentered1[a] * at(i - 2 + a, j);
          s2 += kCentered1[a] * at(i, j - 2 + a);
          s11 += kCentered2[a] * at(i - 2 + a, j);
          s22 += kCentered2[a] * at(i, j - 2 + a);
          for (int b = 0; b < 5; ++b) s12 += kCentered1[a] * kCentered1[b] * at(i - 2 + a, j - 2 + b);
        }
        s1 /= 12.0 * h;
        s2 /= 12.0 * h;
        s11 /= 12.0 * h * h;
        s22 /= 12.0 * h * h;
        s12 /= 144.0 * h * h;

        // u = w s with w = sqrt(1+|y|²) differentiated exactly.
        const double s = values[k];
        const double y1 = grid.chart_y1(k), y2 = grid.chart_y2(k), w = grid.chart_w(k);
        const double w1 = y1 / w, w2 = y2 / w;
        const double w3 = w * w * w;
        const double w11 = 1.0 / w - y1 * y1 / w3;
        const double w22 = 1.0 / w - y2 * y2 / w3;
        const double w12 = -y1 * y2 / w3;
        Vec2 du(w1 * s + w * s1, w2 * s + w * s2);
        Mat2 d2u;
        d2u(0, 0) = w11 * s + 2.0 * w1 * s1 + w * s11;
        d2u(1, 1) = w22 * s + 2.0 * w2 * s2 + w * s22;
        d2u(0, 1) = d2u(1, 0) = w12 * s + w1 * s2 + w2 * s1 + w * s12;
        d.du[k] = du;
        d.d2u[k] = d2u;

        const Mat2 S = frame_map(y1, y2, w);
        const Vec2 y(y1, y2);
        d.grad[k] = S * (du - (s / w) * y);
        Mat2 b = w * (S * d2u * S);
        b(0, 1) = b(1, 0) = 0.5 * (b(0, 1) + b(1, 0));
        d.hess[k] = b - s * Mat2::Identity();

        if (third_order) {
          double s111 = 0, s222 = 0, s112 = 0, s122 = 0;
          for (int a = 0; a < 7; ++a) {
            s111 += kCentered3[a] * at(i - 3 + a, j);
            s222 += kCentered3[a] * at(i, j - 3 + a);
          }
          for (int a = 0; a < 5; ++a)
            for (int b2 = 0; b2 < 5; ++b2) {
              s112 += kCentered2[a] * kCentered1[b2] * at(i - 2 + a, j - 2 + b2);
              s122 += kCentered1[a] * kCentered2[b2] * at(i - 2 + a, j - 2 + b2);
            }
          const double h3 = h * h * h;
          s111 /= 8.0 * h3;
          s222 /= 8.0 * h3;
          s112 /= 144.0 * h3;
          s122 /= 144.0 * h3;
          const double y[2] = {y1, y2};
          const double wd[2] = {w1, w2};
          const Mat2 w2m = (Mat2() << w11, w12, w12, w22).finished();
          const double sd[2] = {s1, s2};
          const Mat2 s2m = (Mat2() << s11, s12, s12, s22).finished();
          auto s3 = [&](int p, int q, int r) {
            const int ones = (p == 0) + (q == 0) + (r == 0);
            return ones == 3 ? s111 : ones == 2 ? s112 : ones == 1 ? s122 : s222;
          };
          const double w5 = w3 * w * w;
          for (int c = 0; c < 2; ++c)
            for (int p = 0; p < 2; ++p)
              for (int q = 0; q < 2; ++q) {
                const double w3d = -((p == q) * y[c] + (p == c) * y[q] + (q == c) * y[p]) / w3 +
                                   3.0 * y[p] * y[q] * y[c] / w5;
                d.d3u[k][c](p, q) = w3d * s + w2m(p, q) * sd[c] + w2m(p, c) * sd[q] +
                                    w2m(q, c) * sd[p] + wd[p] * s2m(q, c) + wd[q] * s2m(p, c) +
                                    wd[c] * s2m(p, q) + w * s3(p, q, c);
              }
        }
      }
    }
  }
  return d;
}

RadiiField radii_and_curvature(const SupportField& s) {
  return radii_and_curvature(s, differentiate(s));
}

RadiiField radii_and_curvature(const SupportField& s, const Derivatives& d) {
  const std::size_t nodes = s.size();
  RadiiField r;
  r.b.resize(nodes);
  r.eig_min.resize(nodes);
  r.eig_max.resize(nodes);
  r.gauss_curvature.resize(nodes);
  const bool curve = s.dim() == 1;
  for (std::size_t k = 0; k < nodes; ++k) {
    Mat2 b = d.hess[k];
    double det;
    if (curve) {
      b(0, 0) += s.values[k];
      b(0, 1) = b(1, 0) = b(1, 1) = 0.0;
      r.eig_min[k] = r.eig_max[k] = b(0, 0);
      det = b(0, 0);
    } else {
      b += s.values[k] * Mat2::Identity();
      sym_eigen(b, r.eig_min[k], r.eig_max[k]);
      det = b(0, 0) * b(1, 1) - b(0, 1) * b(1, 0);
    }
    if (!(det > 0.0) || !(r.eig_min[k] > 0.0)) throw ConvexityLost("principal radii not positive", k, det);
    r.b[k] = b;
    r.gauss_curvature[k] = 1.0 / det;
  }
  return r;
}

std::array<std::vector<double>, 2> chart_gradient(const SphereGrid& grid,
                                                  std::span<const double> field) {
  const std::size_t nodes = grid.node_count();
  std::array<std::vector<double>, 2> out;
  out[0].assign(nodes, 0.0);
  if (grid.dim() == 1) {
    kernels::matvec(grid.d1_matrix(), field, out[0]);
    out[1].assign(nodes, 0.0);
    return out;
  }
  out[1].assign(nodes, 0.0);
  const int m = grid.face_size();
  const double h = grid.spacing();
  for (int f = 0; f < SphereGrid::kFaces; ++f) {
    const double* base = field.data() + grid.node_index(f, 0, 0);
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < m; ++i) {
        const std::size_t k = grid.node_index(f, i, j);
        out[0][k] = line_derivative(base + static_cast<std::ptrdiff_t>(j) * m, 1, i, m, h);
        out[1][k] = line_derivative(base + i, m, j, m, h);
      }
    }
  }
  return out;
}

Embedding embed(const GridPtr& grid_ptr, std::span<const double> values, bool chart_derivatives) {
  const bool third = chart_derivatives && grid_ptr->dim() == 2;
  return embed(grid_ptr, values, differentiate(grid_ptr, values, third), chart_derivatives);
}

Embedding embed(const GridPtr& grid_ptr, std::span<const double> values, const Derivatives& d,
                bool chart_derivatives) {
  const SphereGrid& grid = *grid_ptr;
  const std::size_t nodes = grid.node_count();
  Embedding emb;
  emb.X.resize(nodes);

  if (grid.dim() == 1) {
    for (std::size_t k = 0; k < nodes; ++k) {
      const double c = std::cos(grid.theta(k)), sn = std::sin(grid.theta(k));
      emb.X[k] = Vec3(values[k] * c - d.grad[k](0) * sn, values[k] * sn + d.grad[k](0) * c, 0.0);
    }
    if (chart_derivatives) {
      emb.Xi.resize(nodes);
      emb.Xij.resize(nodes);
      // X_θ = b x⊥, X_θθ = b_θ x⊥ - b x
      std::vector<double> b(nodes), db(nodes);
      double mean = 0.0;
      for (std::size_t k = 0; k < nodes; ++k) {
        b[k] = values[k] + d.hess[k](0, 0);
        mean += b[k];
      }
      mean /= static_cast<double>(nodes);
      std::vector<double> dev(nodes);
      for (std::size_t k = 0; k < nodes; ++k) dev[k] = b[k] - mean;
      kernels::matvec(grid.d1_matrix(), dev, db);
      for (std::size_t k = 0; k < nodes; ++k) {
        const Vec3 x = grid.x(k), perp(-x(1), x(0), 0.0);
        emb.Xi[k][0] = b[k] * perp;
        emb.Xij[k][0][0] = db[k] * perp - b[k] * x;
      }
      for (std::size_t k = 0; k < nodes; ++k) {
        emb.Xi[k][0](2) = emb.Xij[k][0][0](2) = 0.0;
        emb.Xi[k][1].setZero();
        emb.Xij[k][0][1].setZero();
        emb.Xij[k][1][0].setZero();
        emb.Xij[k][1][1].setZero();
      }
      emb.has_chart_derivatives = true;
    }
    return emb;
  }

  if (chart_derivatives) {
    if (d.d3u.size() != nodes) throw ConfigError("n = 2 chart derivatives need third derivatives");
    emb.Xi.resize(nodes);
    emb.Xij.resize(nodes);
  }
  for (std::size_t k = 0; k < nodes; ++k) {
    const FaceFrame& fr = grid.frame(grid.face_of(k));
    const double y1 = grid.chart_y1(k), y2 = grid.chart_y2(k);
    const double u = grid.chart_w(k) * values[k];
    const Vec2& du = d.du[k];
    emb.X[k] = du(0) * fr.e1 + du(1) * fr.e2 + (u - y1 * du(0) - y2 * du(1)) * fr.nrm;
    if (chart_derivatives) {
      const Vec3 E[2] = {fr.e1 - y1 * fr.nrm, fr.e2 - y2 * fr.nrm};
      for (int i = 0; i < 2; ++i) {
        emb.Xi[k][i] = d.d2u[k](i, 0) * E[0] + d.d2u[k](i, 1) * E[1];
        for (int j = 0; j < 2; ++j)
          emb.Xij[k][i][j] = d.d3u[k][0](i, j) * E[0] + d.d3u[k][1](i, j) * E[1] -
                             d.d2u[k](i, j) * fr.nrm;
      }
    }
  }
  if (chart_derivatives) emb.has_chart_derivatives = true;
  return emb;
}

std::array<std::vector<double>, 2> scalar_chart_gradient(const GridPtr& grid_ptr,
                                                         std::span<const double> field) {
  const SphereGrid& grid = *grid_ptr;
  if (grid.dim() == 1) return chart_gradient(grid, field);
  const std::size_t nodes = grid.node_count();
  std::array<std::vector<double>, 2> out{std::vector<double>(nodes), std::vector<double>(nodes)};
  const int m = grid.face_size();
  const int hw = grid.halo_width();
  const int e = grid.extended_size();
  const double h = grid.spacing();
  std::vector<double> ext(static_cast<std::size_t>(e) * e);
  for (int f = 0; f < SphereGrid::kFaces; ++f) {
    fill_face_with_halo(grid, field, f, ext);
    auto at = [&](int i, int j) { return ext[static_cast<std::size_t>(j + hw) * e + (i + hw)]; };
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        double g1 = 0, g2 = 0;
        for (int a = 0; a < 5; ++a) {
          g1 += kCentered1[a] * at(i - 2 + a, j);
          g2 += kCentered1[a] * at(i, j - 2 + a);
        }
        const std::size_t k = grid.node_index(f, i, j);
        out[0][k] = g1 / (12.0 * h);
        out[1][k] = g2 / (12.0 * h);
      }
  }
  return out;
}

SupportField ellipsoid_support(const Eigen::MatrixXd& Q, const GridPtr& grid) {
  const int d = grid->ambient_dim();
  if (Q.rows() != d || Q.cols() != d)
    throw ConfigError("shape matrix must be " + std::to_string(d) + "x" + std::to_string(d));
  if ((Q - Q.transpose()).norm() > 1e-12 * std::max(1.0, Q.norm()))
    throw ConfigError("shape matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
  if (!(es.eigenvalues().minCoeff() > 0.0)) throw ConfigError("shape matrix is not positive definite");
  std::vector<double> v(grid->node_count());
  for (std::size_t k = 0; k < v.size(); ++k) {
    const Eigen::VectorXd x = grid->x(k).head(d);
    v[k] = std::sqrt(x.dot(Q * x));
  }
  return SupportField(grid, std::move(v));
}

Radii inner_outer_radii(const SupportField& s) {
  const auto [lo, hi] = std::minmax_element(s.values.begin(), s.values.end());
  return {*lo, *hi};
}

double interpolate(const GridPtr& grid_ptr, std::span<const double> values, const Vec3& direction) {
  const SphereGrid& grid = *grid_ptr;
  if (grid.dim() == 1) {
    const double phi = std::atan2(direction.y(), direction.x());
    const int n = grid.resolution();
    double acc = 0.0;
    for (int k = 0; k < n; ++k) acc += values[k] * trig_cardinal(n, phi - grid.theta(k));
    return acc;
  }
  constexpr int p = 4;
  const int face = SphereGrid::owning_face(direction);
  const auto yc = SphereGrid::chart_coords(face, direction);
  const int m = grid.face_size();
  const double h = grid.spacing();
  const double xa = (yc[0] + 1.0) / h, xb = (yc[1] + 1.0) / h;
  const int sa = std::clamp(static_cast<int>(std::floor(xa)) - 1, 0, m - p);
  const int sb = std::clamp(static_cast<int>(std::floor(xb)) - 1, 0, m - p);
  std::array<double, p> la{}, lb{};
  lagrange_weights(xa, sa, p, la);
  lagrange_weights(xb, sb, p, lb);
  double acc = 0.0;
  for (int b = 0; b < p; ++b)
    for (int a = 0; a < p; ++a) acc += la[a] * lb[b] * values[grid.node_index(face, sa + a, sb + b)];
  return acc;
}

double refined_max(const GridPtr& grid, std::span<const double> values) {
  const auto top = std::max_element(values.begin(), values.end());
  double best = *top;
  if (grid->dim() != 1) return best;
  constexpr int kSub = 64;
  const double h = grid->spacing();
  const double centre = grid->theta(static_cast<std::size_t>(top - values.begin()));
  for (int i = -kSub; i <= kSub; ++i) {
    const double phi = centre + h * i / kSub;
    best = std::max(best, interpolate(grid, values, Vec3(std::cos(phi), std::sin(phi), 0.0)));
  }
  return best;
}

SupportField apply_linear_map(const SupportField& s, const Eigen::MatrixXd& A) {
  const int d = s.grid->ambient_dim();
  if (A.rows() != d || A.cols() != d)
    throw ConfigError("linear map must be " + std::to_string(d) + "x" + std::to_string(d));
  const double scale = std::pow(std::max(A.norm(), 1e-300), d);
  if (std::abs(A.determinant()) <= 1e-14 * scale) throw ConfigError("linear map is singular");
  std::vector<double> v(s.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    Vec3 z = Vec3::Zero();
    z.head(d) = A.transpose() * s.grid->x(k).head(d);
    const double len = z.norm();
    v[k] = len * interpolate(s.grid, s.values, z / len);
  }
  return SupportField(s.grid, std::move(v));
}

}  // namespace caflow
