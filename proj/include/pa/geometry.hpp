#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace pa {

// Rigid transform mapping sensor-local coordinates to world coordinates.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Matrix4d matrix() const;
  Pose inverse() const;

  // Frobenius deviation of R'R from identity plus |det - 1|.
  double orthonormality_error() const;
  bool is_valid(double tol = 1e-9) const;
};

Pose compose(const Pose& a, const Pose& b);
Eigen::Vector3d transform_point(const Pose& pose, const Eigen::Vector3d& p_local);

// Unit quaternion in (w, x, y, z) order with canonical sign:
// w >= 0, ties broken by the first nonzero component being positive.
struct UnitQuaternion {
  Eigen::Vector4d wxyz{1.0, 0.0, 0.0, 0.0};

  static UnitQuaternion from_vector(const Eigen::Vector4d& v);
  UnitQuaternion canonicalized() const;
  double norm_error() const;
};

Eigen::Matrix3d rotation_from_quat(const UnitQuaternion& q);
UnitQuaternion quat_from_rotation(const Eigen::Matrix3d& r);

// Plane n.p + d = 0 with |n| = 1 and canonical sign d <= 0
// (ties at d = 0 broken by the first nonzero normal component > 0).
struct Plane {
  Eigen::Vector3d normal{0.0, 0.0, 1.0};
  double d = 0.0;

  static Plane from_normal_d(const Eigen::Vector3d& normal, double d);
  Plane canonicalized() const;
  Eigen::Vector4d homogeneous() const;  // [n; d]
  bool is_valid(double tol = 1e-12) const;
};

double point_to_plane_sq(const Plane& plane, const Eigen::Vector3d& p_global);

// |R n_l - n_g|^2 + (d_g - (d_l - n_l'R't))^2 : squared discrepancy between
// a locally fitted plane transformed to world coordinates and a global plane.
double plane_to_plane_sq(const Pose& pose, const Plane& local, const Plane& global);

struct LabeledPoint {
  int frame_id = 0;
  int plane_id = 0;
  Eigen::Vector3d p_local = Eigen::Vector3d::Zero();
};

// Accumulated outer products of homogeneous points, B = sum [p;1][p;1]'.
struct ScatterMatrix {
  Eigen::Matrix4d b = Eigen::Matrix4d::Zero();
  std::int64_t count = 0;
};

ScatterMatrix accumulate_scatter(const std::vector<Eigen::Vector3d>& points);

struct Observation {
  int frame_id = 0;
  int plane_id = 0;
  ScatterMatrix scatter;
  bool degenerate = false;  // fewer than 3 points; kept but flagged
};

struct ObservationGraph {
  int num_poses = 0;
  int num_planes = 0;
  std::vector<Observation> observations;
  std::vector<std::vector<int>> obs_of_pose;   // indices into observations
  std::vector<std::vector<int>> obs_of_plane;

  static ObservationGraph from_points(int m, int n, const std::vector<LabeledPoint>& points);
  void rebuild_index();

  std::int64_t total_points() const;
  // Every pose and every plane appears in at least one observation.
  bool well_posed() const;
  // Pose i observes >= 4 planes whose normals span rank 3.
  bool pose_determinable(int i, const std::vector<Plane>& planes) const;
};

// sum_(i,j) b_j' T_i B(i,j) T_i' b_j over all observations.
double total_objective(const std::vector<Pose>& poses, const std::vector<Plane>& planes,
                       const ObservationGraph& graph);

// Nearest rotation in Frobenius norm (polar factor, det forced to +1).
Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& m);

}  // namespace pa
