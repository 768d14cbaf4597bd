#pragma once

// Test-only oracles, independent of the library's computation paths.

#include <cmath>
#include <random>
#include <vector>

#include "pa/geometry.hpp"
#include "pa/relax.hpp"

namespace oracle {

// Point-by-point total objective, no scatter matrices involved.
inline double brute_total_objective(const std::vector<pa::Pose>& poses,
                                    const std::vector<pa::Plane>& planes,
                                    const std::vector<pa::LabeledPoint>& points) {
  double total = 0.0;
  for (const auto& pt : points) {
    const Eigen::Vector3d p_global = pa::transform_point(poses[pt.frame_id], pt.p_local);
    total += pa::point_to_plane_sq(planes[pt.plane_id], p_global);
  }
  return total;
}

// Quasi-uniform directions via the Fibonacci sphere.
inline std::vector<Eigen::Vector3d> fibonacci_sphere(int count) {
  std::vector<Eigen::Vector3d> dirs;
  dirs.reserve(count);
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < count; ++k) {
    const double y = 1.0 - 2.0 * (k + 0.5) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
    const double phi = golden * k;
    dirs.emplace_back(r * std::cos(phi), y, r * std::sin(phi));
  }
  return dirs;
}

// min over grid directions n (with the optimal d per direction) of
// [n;d]' B [n;d].
inline double grid_min_plane_residual(const pa::ScatterMatrix& scatter, int n_dirs) {
  const Eigen::Matrix3d b_nn = scatter.b.topLeftCorner<3, 3>();
  const Eigen::Vector3d b_nd = scatter.b.topRightCorner<3, 1>();
  const double b_dd = scatter.b(3, 3);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& n : fibonacci_sphere(n_dirs)) {
    const double d = -b_nd.dot(n) / b_dd;
    const double value = n.dot(b_nn * n) + 2.0 * d * b_nd.dot(n) + d * d * b_dd;
    best = std::min(best, value);
  }
  return best;
}

// Best rotation for fixed signs: value = lambda_min(sum th_j M_j), attained by
// the corresponding eigenvector quaternion.
inline std::pair<double, pa::UnitQuaternion> best_rotation_for_signs(
    const std::vector<Eigen::Vector3d>& locals, const std::vector<Eigen::Vector3d>& refs,
    const std::vector<double>& theta) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  for (std::size_t j = 0; j < locals.size(); ++j)
    m += theta[j] * pa::build_quat_cross_matrix(refs[j], locals[j]);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(m);
  return {eig.eigenvalues()[0], pa::UnitQuaternion::from_vector(eig.eigenvectors().col(0))};
}

// Exhaustive 2^k sign search with the closed-form rotation for each choice.
inline std::pair<std::vector<double>, double> brute_force_signs(
    const std::vector<Eigen::Vector3d>& locals, const std::vector<Eigen::Vector3d>& refs) {
  const int k = static_cast<int>(locals.size());
  std::vector<double> best_theta(k, 1.0);
  double best = std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < (1 << k); ++mask) {
    std::vector<double> theta(k);
    for (int j = 0; j < k; ++j) theta[j] = (mask >> j) & 1 ? -1.0 : 1.0;
    const double value = best_rotation_for_signs(locals, refs, theta).first;
    if (value < best) {
      best = value;
      best_theta = theta;
    }
  }
  return {best_theta, best};
}

inline pa::Pose random_pose(std::mt19937_64& rng, double box = 10.0) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u(-box, box);
  Eigen::Vector4d q;
  do {
    q << gauss(rng), gauss(rng), gauss(rng), gauss(rng);
  } while (q.norm() < 1e-12);
  pa::Pose p;
  p.rotation = pa::rotation_from_quat(pa::UnitQuaternion::from_vector(q));
  p.translation << u(rng), u(rng), u(rng);
  return p;
}

inline pa::Plane random_plane(std::mt19937_64& rng, double box = 10.0) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u(-box, 0.0);
  Eigen::Vector3d n;
  do {
    n << gauss(rng), gauss(rng), gauss(rng);
  } while (n.norm() < 1e-12);
  return pa::Plane::from_normal_d(n, u(rng));
}

inline std::vector<Eigen::Vector3d> random_points(std::mt19937_64& rng, int count,
                                                  double box = 10.0) {
  std::uniform_real_distribution<double> u(-box, box);
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(count);
  for (int k = 0; k < count; ++k) pts.emplace_back(u(rng), u(rng), u(rng));
  return pts;
}

}  // namespace oracle
