#include "pa/gpp_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pa {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double frame_plane_objective(const Pose& pose, const std::vector<Plane>& planes,
                             const std::vector<LocalPlaneFit>& fits,
                             const std::vector<int>& idx) {
  double total = 0.0;
  for (int k : idx) total += plane_to_plane_sq(pose, fits[k].as_plane(), planes[fits[k].plane_id]);
  return total;
}

double plane_fit_objective(const Plane& plane, const std::vector<Pose>& poses,
                           const std::vector<LocalPlaneFit>& fits, const std::vector<int>& idx) {
  double total = 0.0;
  for (int k : idx) total += plane_to_plane_sq(poses[fits[k].frame_id], fits[k].as_plane(), plane);
  return total;
}

// At most 15 normals fit in the 64-dim SDP cap (4*(15+1) = 64).
constexpr int kMaxSdpNormals = 15;

}  // namespace

LocalPlaneFit fit_local_plane(const ScatterMatrix& scatter) {
  if (scatter.count < 3) throw std::runtime_error("insufficient points");
  const Eigen::Matrix3d b_nn = scatter.b.topLeftCorner<3, 3>();
  const Eigen::Vector3d b_nd = scatter.b.topRightCorner<3, 1>();
  const double b_dd = scatter.b(3, 3);
  const Eigen::Matrix3d schur = b_nn - (b_nd * b_nd.transpose()) / b_dd;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(schur);
  const double tr = std::max(schur.trace(), 1e-300);
  if (eig.eigenvalues()[1] / tr < 1e-12) throw std::runtime_error("degenerate plane fit");

  const Eigen::Vector3d n = eig.eigenvectors().col(0);
  const Plane canonical = Plane::from_normal_d(n, -b_nd.dot(n) / b_dd);
  LocalPlaneFit fit;
  fit.n_local = canonical.normal;
  fit.d_local = canonical.d;
  fit.residual = std::max(0.0, eig.eigenvalues()[0]);
  fit.point_count = scatter.count;
  return fit;
}

CalibrationResult calibrate_normals(const std::vector<LocalPlaneFit>& fits, int num_poses,
                                    int num_planes,
                                    const std::vector<Eigen::Vector3d>* reference,
                                    CalibrationMode mode, const SdpSettings& sdp) {
  if (mode == CalibrationMode::Joint &&
      (!reference || static_cast<int>(reference->size()) != num_planes))
    throw std::runtime_error("joint calibration requires reference normals for every plane");

  std::vector<std::vector<int>> by_frame(static_cast<std::size_t>(num_poses));
  for (int k = 0; k < static_cast<int>(fits.size()); ++k) {
    if (fits[k].frame_id < 0 || fits[k].frame_id >= num_poses || fits[k].plane_id < 0 ||
        fits[k].plane_id >= num_planes)
      throw std::runtime_error("fit index out of range");
    by_frame[fits[k].frame_id].push_back(k);
  }
  for (int i = 0; i < num_poses; ++i)
    if (static_cast<int>(by_frame[i].size()) < 2)
      throw std::runtime_error("frame " + std::to_string(i) + " has fewer than 2 fitted planes");

  CalibrationResult out;
  out.fits = fits;
  out.theta.assign(fits.size(), 1.0);
  out.rotations.assign(static_cast<std::size_t>(num_poses), Eigen::Matrix3d::Identity());

  // Accumulated reference normals.
  std::vector<Eigen::Vector3d> ref(static_cast<std::size_t>(num_planes), Eigen::Vector3d::Zero());
  std::vector<bool> have_ref(static_cast<std::size_t>(num_planes), false);
  if (mode == CalibrationMode::Joint) {
    for (int j = 0; j < num_planes; ++j) {
      ref[j] = (*reference)[j];
      have_ref[j] = true;
    }
  } else {
    for (int k : by_frame[0]) {
      ref[fits[k].plane_id] = fits[k].n_local;  // frame 0 defines the gauge
      have_ref[fits[k].plane_id] = true;
    }
  }

  const int first = mode == CalibrationMode::Joint ? 0 : 1;
  for (int i = first; i < num_poses; ++i) {
    std::vector<int> common, fresh;
    for (int k : by_frame[i]) {
      (have_ref[fits[k].plane_id] ? common : fresh).push_back(k);
    }
    if (static_cast<int>(common.size()) < 2)
      throw std::runtime_error("frame " + std::to_string(i) +
                               " shares fewer than 2 planes with the reference");

    // Keep the SDP within the dense-block cap; leftover signs follow from the
    // recovered rotation afterwards.
    std::vector<int> in_sdp = common;
    if (static_cast<int>(in_sdp.size()) > kMaxSdpNormals) {
      std::stable_sort(in_sdp.begin(), in_sdp.end(), [&](int a, int b) {
        return fits[a].point_count > fits[b].point_count;
      });
      in_sdp.resize(kMaxSdpNormals);
    }

    std::vector<Eigen::Vector3d> local, refs;
    for (int k : in_sdp) {
      local.push_back(fits[k].n_local);
      refs.push_back(ref[fits[k].plane_id]);
    }
    const SdpProblem prob = build_rotation_only_sdp(local, refs);
    const SdpSolution sol = solve_sdp(prob, sdp);
    if (sol.status == SdpStatus::NumericalFailure || sol.status == SdpStatus::Infeasible)
      throw std::runtime_error("sign calibration failed for frame " + std::to_string(i));
    const Certificate cert = certify(prob, sol);
    out.certs.push_back({0, 'r', i, cert.rel_gap, cert.rank_ratio, cert.primal_feas,
                         cert.dual_feas});
    SignRecovery rec;
    try {
      rec = recover_signs(sol, static_cast<int>(in_sdp.size()));
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string(e.what()) + " (frame " + std::to_string(i) + ")");
    }
    // Closed-form polish: with the signs fixed, the best rotation is the
    // minimum eigenvector of the summed cross matrices.
    Eigen::Matrix4d m_sum = Eigen::Matrix4d::Zero();
    for (std::size_t a = 0; a < in_sdp.size(); ++a)
      m_sum += rec.theta[a] * build_quat_cross_matrix(refs[a], local[a]);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> m_eig(m_sum);
    const Eigen::Matrix3d r =
        rotation_from_quat(UnitQuaternion::from_vector(m_eig.eigenvectors().col(0)));
    out.rotations[i] = r;
    for (std::size_t a = 0; a < in_sdp.size(); ++a) out.theta[in_sdp[a]] = rec.theta[a];
    for (int k : common) {
      if (std::find(in_sdp.begin(), in_sdp.end(), k) != in_sdp.end()) continue;
      const double dot = ref[fits[k].plane_id].dot(r * fits[k].n_local);
      if (std::abs(dot) < 1e-9)
        throw std::runtime_error("ambiguous sign (frame " + std::to_string(i) + ")");
      out.theta[k] = dot > 0.0 ? 1.0 : -1.0;
    }
    for (int k : fresh) {
      ref[fits[k].plane_id] = r * fits[k].n_local;
      have_ref[fits[k].plane_id] = true;
    }
  }

  for (std::size_t k = 0; k < out.fits.size(); ++k) {
    out.fits[k].n_local *= out.theta[k];
    out.fits[k].d_local *= out.theta[k];
  }
  return out;
}

Pose closed_form_pose(const std::vector<LocalPlaneFit>& frame_fits,
                      const std::vector<Plane>& planes) {
  if (static_cast<int>(frame_fits.size()) < 3)
    throw std::runtime_error("insufficient planes for pose");
  Eigen::Matrix3d span = Eigen::Matrix3d::Zero();
  for (const auto& f : frame_fits) span += f.n_local * f.n_local.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> span_eig(span);
  if (span_eig.eigenvalues()[0] <= 1e-9 * std::max(1.0, span_eig.eigenvalues()[2]))
    throw std::runtime_error("underdetermined translation");

  Eigen::Matrix4d m_sum = Eigen::Matrix4d::Zero();
  for (const auto& f : frame_fits)
    m_sum += build_quat_cross_matrix(planes[f.plane_id].normal, f.n_local);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(m_sum);
  const UnitQuaternion q = UnitQuaternion::from_vector(eig.eigenvectors().col(0));

  Pose pose;
  pose.rotation = rotation_from_quat(q);
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d atb = Eigen::Vector3d::Zero();
  for (const auto& f : frame_fits) {
    const Eigen::Vector3d u = pose.rotation * f.n_local;
    ata += u * u.transpose();
    atb += u * (f.d_local - planes[f.plane_id].d);
  }
  pose.translation = ata.ldlt().solve(atb);
  return pose;
}

Plane closed_form_plane(const std::vector<LocalPlaneFit>& plane_fits,
                        const std::vector<Pose>& poses) {
  if (plane_fits.empty()) throw std::runtime_error("plane has no fits");
  Eigen::Vector3d s = Eigen::Vector3d::Zero();
  for (const auto& f : plane_fits) s += poses[f.frame_id].rotation * f.n_local;
  if (s.norm() < 1e-9) throw std::runtime_error("cancelling normals");

  Plane plane;
  plane.normal = s.normalized();
  double d = 0.0;
  for (const auto& f : plane_fits) {
    const Pose& p = poses[f.frame_id];
    d += f.d_local - f.n_local.dot(p.rotation.transpose() * p.translation);
  }
  plane.d = d / static_cast<double>(plane_fits.size());
  return plane;
}

double total_plane_objective(const std::vector<Pose>& poses, const std::vector<Plane>& planes,
                             const std::vector<LocalPlaneFit>& fits) {
  double total = 0.0;
  for (const auto& f : fits)
    total += plane_to_plane_sq(poses[f.frame_id], f.as_plane(), planes[f.plane_id]);
  return total;
}

SolveReport run_globalpointer_pp(const ObservationGraph& graph, const GppConfig& config) {
  if (!graph.well_posed()) throw std::runtime_error("observation graph not well posed");
  const auto t0 = Clock::now();
  SolveReport report;

  // Local plane fits, once, from the fixed labels.
  std::vector<LocalPlaneFit> fits;
  fits.reserve(graph.observations.size());
  {
    const auto tf = Clock::now();
    for (const auto& obs : graph.observations) {
      try {
        LocalPlaneFit f = fit_local_plane(obs.scatter);
        f.frame_id = obs.frame_id;
        f.plane_id = obs.plane_id;
        fits.push_back(f);
      } catch (const std::exception& e) {
        throw std::runtime_error(std::string(e.what()) + " (frame " +
                                 std::to_string(obs.frame_id) + ", plane " +
                                 std::to_string(obs.plane_id) + ")");
      }
    }
    report.wall.fit_ms = ms_since(tf);
  }

  // Global normal direction calibration.
  CalibrationResult calib;
  {
    const auto tc = Clock::now();
    calib = calibrate_normals(fits, graph.num_poses, graph.num_planes, nullptr,
                              config.calibration_mode, config.sdp);
    report.wall.calib_ms = ms_since(tc);
  }
  fits = std::move(calib.fits);
  for (auto& c : calib.certs) {
    report.gap_max = std::max(report.gap_max, c.rel_gap);
    report.rank_ratio_max = std::max(report.rank_ratio_max, c.rank_ratio);
    if (config.record_trace) report.certificates.push_back(c);
  }

  std::vector<std::vector<int>> fits_of_frame(static_cast<std::size_t>(graph.num_poses));
  std::vector<std::vector<int>> fits_of_plane(static_cast<std::size_t>(graph.num_planes));
  for (int k = 0; k < static_cast<int>(fits.size()); ++k) {
    fits_of_frame[fits[k].frame_id].push_back(k);
    fits_of_plane[fits[k].plane_id].push_back(k);
  }

  // Initialize poses from the calibration gauge and planes from their
  // closed-form solve; translations start at zero.
  report.poses.assign(static_cast<std::size_t>(graph.num_poses), Pose{});
  for (int i = 0; i < graph.num_poses; ++i) report.poses[i].rotation = calib.rotations[i];
  report.planes.resize(static_cast<std::size_t>(graph.num_planes));
  auto gather = [&](const std::vector<int>& idx) {
    std::vector<LocalPlaneFit> sel;
    sel.reserve(idx.size());
    for (int k : idx) sel.push_back(fits[k]);
    return sel;
  };
  try {
    for (int j = 0; j < graph.num_planes; ++j)
      report.planes[j] = closed_form_plane(gather(fits_of_plane[j]), report.poses);

    constexpr double kEpsFloor = 1e-12;
    double prev_obj = total_plane_objective(report.poses, report.planes, fits);
    report.objective_trace.push_back(prev_obj);
    report.point_objective_trace.push_back(total_objective(report.poses, report.planes, graph));

    for (int iter = 1; iter <= config.max_iter; ++iter) {
      report.iterations = iter;

      const auto tp = Clock::now();
      for (int i = 0; i < graph.num_poses; ++i) {
        const Pose cand = closed_form_pose(gather(fits_of_frame[i]), report.planes);
        if (frame_plane_objective(cand, report.planes, fits, fits_of_frame[i]) <=
            frame_plane_objective(report.poses[i], report.planes, fits, fits_of_frame[i])) {
          report.poses[i] = cand;
        } else {
          ++report.kept_previous;
        }
      }
      report.wall.pose_ms += ms_since(tp);

      const auto tl = Clock::now();
      for (int j = 0; j < graph.num_planes; ++j) {
        const Plane cand = closed_form_plane(gather(fits_of_plane[j]), report.poses);
        if (plane_fit_objective(cand, report.poses, fits, fits_of_plane[j]) <=
            plane_fit_objective(report.planes[j], report.poses, fits, fits_of_plane[j])) {
          report.planes[j] = cand;
        } else {
          ++report.kept_previous;
        }
      }
      report.wall.plane_ms += ms_since(tl);

      const double obj = total_plane_objective(report.poses, report.planes, fits);
      report.objective_trace.push_back(obj);
      report.point_objective_trace.push_back(total_objective(report.poses, report.planes, graph));
      if (std::abs(obj - prev_obj) <= config.rel_tol * std::max(prev_obj, kEpsFloor)) {
        report.converged = true;
        prev_obj = obj;
        break;
      }
      prev_obj = obj;
    }
  } catch (const std::exception& e) {
    report.wall.total_ms = ms_since(t0);
    throw SolveError(e.what(), std::move(report));
  }

  for (auto& plane : report.planes) plane = plane.canonicalized();
  report.wall.total_ms = ms_since(t0);
  return report;
}

}  // namespace pa
