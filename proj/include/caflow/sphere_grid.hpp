#pragma once
// Discretisations of S^1 and S^2.
//
// Node ordering contract (stable, used by snapshot files):
//   n = 1: node k sits at angle theta_k = 2*pi*k/N, k = 0..N-1.
//   n = 2: node index = face*M*M + j*M + i, with chart coordinates
//          y1 = -1 + i*h, y2 = -1 + j*h, h = 2/(M-1). Faces are the six
//          gnomonic (central projection) charts of the cube in the order
//          +x, +y, -x, -y, +z, -z. A node direction is
//          x = (y1*e1 + y2*e2 + nrm)/sqrt(1+|y|^2) with the face frame below.
//          Nodes on face edges appear once per adjacent face.

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace caflow {

using Vec3 = Eigen::Vector3d;

struct FaceFrame {
  Vec3 e1;
  Vec3 e2;
  Vec3 nrm;  // outward face normal, e1 x e2 = nrm
};

// Sparse linear map filling one face's halo ring from neighbouring faces.
struct HaloPlan {
  std::vector<std::size_t> target;  // index into the extended (M+2w)^2 face array
  std::vector<std::size_t> offset;  // CSR row offsets, size target.size()+1
  std::vector<std::size_t> source;  // global node indices
  std::vector<double> weight;
};

class SphereGrid {
 public:
  // make_grid: n = 1 needs N >= 16; n = 2 needs odd M >= 17 and halo width >= 2.
  // Throws ConfigError.
  static std::shared_ptr<const SphereGrid> make(int n, int resolution, int halo_width = 3);

  int dim() const { return n_; }
  int ambient_dim() const { return n_ + 1; }
  int resolution() const { return res_; }
  int halo_width() const { return halo_width_; }
  std::size_t node_count() const { return x_.size(); }

  // Direction of node k on the unit sphere (z = 0 for n = 1).
  const Vec3& x(std::size_t k) const { return x_[k]; }
  // Weights integrating functions over S^n. n = 2: exact integrals of the
  // chart Jacobian against piecewise quintic cardinal functions.
  std::span<const double> weights() const { return weights_; }
  // Weights integrating densities over chart coordinates (theta, or y per
  // face); n = 2: weights() * (1+|y|^2)^{3/2}.
  std::span<const double> chart_weights() const { return chart_weights_; }
  // Chart spacing: 2*pi/N or 2/(M-1).
  double spacing() const { return h_; }

  // n = 1 only.
  double theta(std::size_t k) const { return theta_[k]; }
  std::span<const double> d1_matrix() const { return d1_; }
  std::span<const double> d2_matrix() const { return d2_; }

  // n = 2 only.
  static constexpr int kFaces = 6;
  int face_size() const { return res_; }
  std::size_t face_nodes() const { return static_cast<std::size_t>(res_) * res_; }
  std::size_t node_index(int face, int i, int j) const {
    return static_cast<std::size_t>(face) * face_nodes() + static_cast<std::size_t>(j) * res_ + i;
  }
  int face_of(std::size_t k) const { return static_cast<int>(k / face_nodes()); }
  const FaceFrame& frame(int face) const { return frames_[face]; }
  double chart_y1(std::size_t k) const { return y1_[k]; }
  double chart_y2(std::size_t k) const { return y2_[k]; }
  // sqrt(1 + |y|^2), the ratio u_F / s.
  double chart_w(std::size_t k) const { return w_[k]; }
  const HaloPlan& halo(int face) const { return halo_[face]; }
  int extended_size() const { return res_ + 2 * halo_width_; }
  // Groups of node indices that share a direction (face edges and corners).
  const std::vector<std::vector<std::size_t>>& shared_nodes() const { return shared_; }

  // Face whose chart owns direction z (largest z·nrm) and the chart coordinates.
  static int owning_face(const Vec3& z);
  static std::array<double, 2> chart_coords(int face, const Vec3& z);
  static const std::array<FaceFrame, 6>& face_frames();

 private:
  SphereGrid() = default;
  void build_circle(int n_nodes);
  void build_cube(int m, int halo_width);

  int n_ = 1;
  int res_ = 0;
  int halo_width_ = 0;
  double h_ = 0.0;
  std::vector<Vec3> x_;
  std::vector<double> weights_;
  std::vector<double> chart_weights_;
  std::vector<double> theta_;
  std::vector<double> d1_, d2_;
  std::array<FaceFrame, 6> frames_{};
  std::vector<double> y1_, y2_, w_;
  std::array<HaloPlan, 6> halo_{};
  std::vector<std::vector<std::size_t>> shared_;
};

using GridPtr = std::shared_ptr<const SphereGrid>;

// Lagrange weights for `points` equispaced nodes starting at `start` (in units
// of the spacing), evaluated at continuous index xi.
void lagrange_weights(double xi, int start, int points, std::span<double> out);

// Gauss-Legendre rule on [-1, 1].
void gauss_legendre(int points, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace caflow
