#pragma once

#include "pa/geometry.hpp"
#include "pa/sdp.hpp"

namespace pa {

// Lifted pose vector layout: [r1..r9 row-major rotation entries; t1 t2 t3; h].
// The constant last row of the 4x4 transform is eliminated.
inline constexpr int kLiftedPoseDim = 13;
inline constexpr int kLiftedHomogeneousSlot = 12;

Eigen::VectorXd encode_pose(const Pose& pose);
Pose decode_pose(const Eigen::VectorXd& x);  // exact inverse of encode_pose (projects R)

// Symmetric 4x4 M with q' M q = -2 a' R(q) b for every unit quaternion q.
Eigen::Matrix4d build_quat_cross_matrix(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

// Pose-only subproblem for pose i with the planes held fixed:
// cost sum_j (b_j b_j') (x) B(i,j) over the lifted pose, h-normalization plus
// the 21 rotation constraints (R'R = I, RR' = I, column cross products).
SdpProblem build_pose_sdp(int pose_index, const std::vector<Plane>& planes,
                          const ObservationGraph& graph);

// Plane-only subproblem for plane j with poses held fixed: 4x4 variable,
// cost D(j) = sum_i T_i B(i,j) T_i', unit-normal trace constraint.
SdpProblem build_plane_sdp(int plane_index, const std::vector<Pose>& poses,
                           const ObservationGraph& graph);

// Joint rotation and normal-sign search over stacked quaternion blocks
// [q; q th_1; ...; q th_n]. Objective sum_j th_j q' M_j q with
// M_j = build_quat_cross_matrix(reference_j, local_j).
SdpProblem build_rotation_only_sdp(const std::vector<Eigen::Vector3d>& local_normals,
                                   const std::vector<Eigen::Vector3d>& reference_normals);

struct PoseRecovery {
  Pose pose;
  double quality = 0.0;  // rank ratio lambda2/lambda1 of the lifted solution
};
PoseRecovery recover_pose(const SdpSolution& solution);

struct PlaneRecovery {
  Plane plane;
  double quality = 0.0;
};
PlaneRecovery recover_plane(const SdpSolution& solution);

struct SignRecovery {
  UnitQuaternion q;
  std::vector<double> theta;  // one sign per local normal
  double quality = 0.0;
};
SignRecovery recover_signs(const SdpSolution& solution, int n_planes);

}  // namespace pa
