#pragma once

#include <optional>

#include "pa/gp_solver.hpp"

namespace pa {

struct LocalPlaneFit {
  int frame_id = 0;
  int plane_id = 0;
  Eigen::Vector3d n_local{0.0, 0.0, 1.0};
  double d_local = 0.0;
  double residual = 0.0;
  std::int64_t point_count = 0;

  Plane as_plane() const { return Plane{n_local, d_local}; }
};

enum class CalibrationMode { Incremental, Joint };

struct GppConfig {
  int max_iter = 200;
  double rel_tol = 1e-4;
  CalibrationMode calibration_mode = CalibrationMode::Incremental;
  SdpSettings sdp;
  bool record_trace = true;
};

// Best-fit plane of an accumulated scatter: the normal is the minimum
// eigenvector of the Schur complement of B over the homogeneous slot,
// d = -(B_dn . n)/count. Result is sign-canonicalized.
LocalPlaneFit fit_local_plane(const ScatterMatrix& scatter);

struct CalibrationResult {
  std::vector<LocalPlaneFit> fits;      // input fits with signs made consistent
  std::vector<double> theta;            // per-fit sign applied (aligned with fits)
  std::vector<Eigen::Matrix3d> rotations;  // per-frame rotation into the reference gauge
  std::vector<SubCert> certs;
};

// Resolves the +-sign of every locally fitted normal jointly with a per-frame
// rotation. Incremental mode bootstraps the reference from frame 0 and grows
// it as frames are registered; joint mode registers every frame against the
// given reference normals.
CalibrationResult calibrate_normals(const std::vector<LocalPlaneFit>& fits, int num_poses,
                                    int num_planes,
                                    const std::vector<Eigen::Vector3d>* reference,
                                    CalibrationMode mode, const SdpSettings& sdp = {});

// Closed-form pose from calibrated fits of one frame: quaternion from the
// minimum eigenvector of the summed cross matrices, then translation from the
// 3x3 normal equations.
Pose closed_form_pose(const std::vector<LocalPlaneFit>& frame_fits,
                      const std::vector<Plane>& planes);

// Closed-form plane from calibrated fits observing it: normal is the
// normalized mean of rotated local normals, d the mean adjusted offset.
// The sign is kept consistent with the fits (not canonicalized).
Plane closed_form_plane(const std::vector<LocalPlaneFit>& plane_fits,
                        const std::vector<Pose>& poses);

// Plane-to-plane total over all fits.
double total_plane_objective(const std::vector<Pose>& poses, const std::vector<Plane>& planes,
                             const std::vector<LocalPlaneFit>& fits);

SolveReport run_globalpointer_pp(const ObservationGraph& graph, const GppConfig& config = {});

}  // namespace pa
