#include "caflow/sphere_grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "caflow/errors.hpp"

namespace caflow {

namespace {

constexpr int kHaloPoints = 6;  // quintic Lagrange per axis (halo fill, quadrature)
constexpr int kQuadPoints = 8;  // Gauss points per cell and axis

std::array<FaceFrame, 6> build_frames() {
  const Vec3 ex(1, 0, 0), ey(0, 1, 0), ez(0, 0, 1);
  return {{
      {ey, ez, ex},
      {-ex, ez, ey},
      {-ey, ez, -ex},
      {ex, ez, -ey},
      {ex, ey, ez},
      {ey, ex, -ez},
  }};
}

}  // namespace

const std::array<FaceFrame, 6>& SphereGrid::face_frames() {
  static const std::array<FaceFrame, 6> frames = build_frames();
  return frames;
}

int SphereGrid::owning_face(const Vec3& z) {
  const auto& frames = face_frames();
  int best = 0;
  double best_dot = z.dot(frames[0].nrm);
  for (int f = 1; f < kFaces; ++f) {
    const double d = z.dot(frames[f].nrm);
    if (d > best_dot) {
      best_dot = d;
      best = f;
    }
  }
  return best;
}

std::array<double, 2> SphereGrid::chart_coords(int face, const Vec3& z) {
  const auto& fr = face_frames()[face];
  const double zn = z.dot(fr.nrm);
  return {z.dot(fr.e1) / zn, z.dot(fr.e2) / zn};
}

void lagrange_weights(double xi, int start, int points, std::span<double> out) {
  for (int a = 0; a < points; ++a) {
    double wgt = 1.0;
    for (int b = 0; b < points; ++b) {
      if (b == a) continue;
      wgt *= (xi - (start + b)) / static_cast<double>(a - b);
    }
    out[a] = wgt;
  }
}

void gauss_legendre(int points, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(points);
  weights.resize(points);
  for (int i = 0; i < points; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= points; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = points * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

std::shared_ptr<const SphereGrid> SphereGrid::make(int n, int resolution, int halo_width) {
  std::shared_ptr<SphereGrid> grid(new SphereGrid());
  if (n == 1) {
    if (resolution < 16)
      throw ConfigError("n=1 grid needs at least 16 nodes, got " + std::to_string(resolution));
    grid->build_circle(resolution);
  } else if (n == 2) {
    if (resolution < 17 || resolution % 2 == 0)
      throw ConfigError("n=2 face resolution must be odd and >= 17, got " +
                        std::to_string(resolution));
    if (halo_width < 2) throw ConfigError("halo width must be >= 2");
    grid->build_cube(resolution, halo_width);
  } else {
    throw ConfigError("only n = 1 (curves) and n = 2 (surfaces) are supported");
  }
  return grid;
}

void SphereGrid::build_circle(int nn) {
  n_ = 1;
  res_ = nn;
  h_ = 2.0 * std::numbers::pi / nn;
  theta_.resize(nn);
  x_.resize(nn);
  for (int k = 0; k < nn; ++k) {
    theta_[k] = h_ * k;
    x_[k] = Vec3(std::cos(theta_[k]), std::sin(theta_[k]), 0.0);
  }
  weights_.assign(nn, h_);
  chart_weights_ = weights_;

  // Fourier collocation differentiation matrices.
  d1_.assign(static_cast<std::size_t>(nn) * nn, 0.0);
  d2_.assign(static_cast<std::size_t>(nn) * nn, 0.0);
  const bool even = nn % 2 == 0;
  const double diag2 = even ? -std::numbers::pi * std::numbers::pi / (3.0 * h_ * h_) - 1.0 / 6.0
                            : -(static_cast<double>(nn) * nn - 1.0) / 12.0;
  for (int i = 0; i < nn; ++i) {
    for (int j = 0; j < nn; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * nn + j;
      if (i == j) {
        d2_[idx] = diag2;
        continue;
      }
      const double half = 0.5 * (i - j) * h_;
      const double sign = ((i - j) % 2 == 0) ? 1.0 : -1.0;
      const double sn = std::sin(half);
      if (even) {
        d1_[idx] = 0.5 * sign * std::cos(half) / sn;
        d2_[idx] = -0.5 * sign / (sn * sn);
      } else {
        d1_[idx] = 0.5 * sign / sn;
        d2_[idx] = -0.5 * sign * std::cos(half) / (sn * sn);
      }
    }
  }
}

void SphereGrid::build_cube(int m, int halo_width) {
  n_ = 2;
  res_ = m;
  halo_width_ = halo_width;
  h_ = 2.0 / (m - 1);
  frames_ = face_frames();

  const std::size_t total = static_cast<std::size_t>(kFaces) * m * m;
  x_.resize(total);
  y1_.resize(total);
  y2_.resize(total);
  w_.resize(total);
  weights_.resize(total);
  chart_weights_.resize(total);

  auto coord = [&](int i) { return i == m - 1 ? 1.0 : -1.0 + i * h_; };

  // Product integration: weight of node (i,j) is the integral of the
  // Jacobian (1+|y|^2)^{-3/2} against its piecewise quintic cardinal function.
  std::vector<double> face_w(static_cast<std::size_t>(m) * m, 0.0);
  {
    std::vector<double> gx, gw;
    gauss_legendre(kQuadPoints, gx, gw);
    std::array<double, kHaloPoints> la{}, lb{};
    for (int cb = 0; cb < m - 1; ++cb) {
      const int sb = std::clamp(cb - kHaloPoints / 2 + 1, 0, m - kHaloPoints);
      for (int ca = 0; ca < m - 1; ++ca) {
        const int sa = std::clamp(ca - kHaloPoints / 2 + 1, 0, m - kHaloPoints);
        for (int qb = 0; qb < kQuadPoints; ++qb) {
          const double xb = cb + 0.5 * (gx[qb] + 1.0);
          const double yb = -1.0 + xb * h_;
          lagrange_weights(xb, sb, kHaloPoints, lb);
          for (int qa = 0; qa < kQuadPoints; ++qa) {
            const double xa = ca + 0.5 * (gx[qa] + 1.0);
            const double ya = -1.0 + xa * h_;
            lagrange_weights(xa, sa, kHaloPoints, la);
            const double jac = std::pow(1.0 + ya * ya + yb * yb, -1.5);
            const double wq = 0.25 * h_ * h_ * gw[qa] * gw[qb] * jac;
            for (int b = 0; b < kHaloPoints; ++b)
              for (int a = 0; a < kHaloPoints; ++a)
                face_w[static_cast<std::size_t>(sb + b) * m + (sa + a)] += wq * la[a] * lb[b];
          }
        }
      }
    }
  }

  for (int f = 0; f < kFaces; ++f) {
    const FaceFrame& fr = frames_[f];
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < m; ++i) {
        const std::size_t k = node_index(f, i, j);
        const double a = coord(i), b = coord(j);
        const double w = std::sqrt(1.0 + a * a + b * b);
        y1_[k] = a;
        y2_[k] = b;
        w_[k] = w;
        x_[k] = (a * fr.e1 + b * fr.e2 + fr.nrm) / w;
        x_[k].normalize();
        weights_[k] = face_w[static_cast<std::size_t>(j) * m + i];
        chart_weights_[k] = weights_[k] * w * w * w;
      }
    }
  }

  // Halo plans.
  const int ext = m + 2 * halo_width;
  std::array<double, kHaloPoints> la{}, lb{};
  for (int f = 0; f < kFaces; ++f) {
    HaloPlan plan;
    plan.offset.push_back(0);
    const FaceFrame& fr = frames_[f];
    for (int ej = 0; ej < ext; ++ej) {
      for (int ei = 0; ei < ext; ++ei) {
        const int i = ei - halo_width, j = ej - halo_width;
        if (i >= 0 && i < m && j >= 0 && j < m) continue;
        const double a = -1.0 + i * h_, b = -1.0 + j * h_;
        const Vec3 z = a * fr.e1 + b * fr.e2 + fr.nrm;
        double best = -1e300;
        for (int g = 0; g < kFaces; ++g) best = std::max(best, z.dot(frames_[g].nrm));
        std::vector<int> owners;
        for (int g = 0; g < kFaces; ++g)
          if (z.dot(frames_[g].nrm) >= best - 1e-12 * std::abs(best)) owners.push_back(g);
        if (owners.empty() || std::find(owners.begin(), owners.end(), f) != owners.end())
          throw GridError("halo point of face " + std::to_string(f) + " has no neighbour chart");
        std::map<std::size_t, double> terms;
        const double share = 1.0 / static_cast<double>(owners.size());
        for (int g : owners) {
          const auto yc = chart_coords(g, z);
          if (std::abs(yc[0]) > 1.0 + 1e-10 || std::abs(yc[1]) > 1.0 + 1e-10)
            throw GridError("halo interpolation left the neighbour chart");
          const double xa = (yc[0] + 1.0) / h_, xb = (yc[1] + 1.0) / h_;
          const int sa = std::clamp(static_cast<int>(std::floor(xa)) - kHaloPoints / 2 + 1, 0,
                                    m - kHaloPoints);
          const int sb = std::clamp(static_cast<int>(std::floor(xb)) - kHaloPoints / 2 + 1, 0,
                                    m - kHaloPoints);
          lagrange_weights(xa, sa, kHaloPoints, la);
          lagrange_weights(xb, sb, kHaloPoints, lb);
          for (int q2 = 0; q2 < kHaloPoints; ++q2)
            for (int q1 = 0; q1 < kHaloPoints; ++q1)
              terms[node_index(g, sa + q1, sb + q2)] += share * la[q1] * lb[q2];
        }
        plan.target.push_back(static_cast<std::size_t>(ej) * ext + ei);
        for (const auto& [src, wgt] : terms) {
          plan.source.push_back(src);
          plan.weight.push_back(wgt);
        }
        plan.offset.push_back(plan.source.size());
      }
    }
    halo_[f] = std::move(plan);
  }

  // Nodes that coincide across faces.
  std::map<std::array<long long, 3>, std::vector<std::size_t>> by_direction;
  for (std::size_t k = 0; k < total; ++k) {
    const std::array<long long, 3> key{std::llround(x_[k].x() * 1e9), std::llround(x_[k].y() * 1e9),
                                       std::llround(x_[k].z() * 1e9)};
    by_direction[key].push_back(k);
  }
  for (auto& [key, nodes] : by_direction)
    if (nodes.size() > 1) shared_.push_back(std::move(nodes));
}

}  // namespace caflow
