#include "pa/gp_solver.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace pa {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Objective restricted to one pose (planes fixed).
double pose_objective(const Pose& pose, const std::vector<Plane>& planes,
                      const ObservationGraph& graph, int i) {
  double total = 0.0;
  const Eigen::Matrix4d t = pose.matrix();
  for (int k : graph.obs_of_pose[i]) {
    const Eigen::Vector4d b = planes[graph.observations[k].plane_id].homogeneous();
    const Eigen::Vector4d u = t.transpose() * b;
    total += u.dot(graph.observations[k].scatter.b * u);
  }
  return total;
}

double plane_objective(const Plane& plane, const std::vector<Pose>& poses,
                       const ObservationGraph& graph, int j) {
  double total = 0.0;
  const Eigen::Vector4d b = plane.homogeneous();
  for (int k : graph.obs_of_plane[j]) {
    const Eigen::Matrix4d t = poses[graph.observations[k].frame_id].matrix();
    const Eigen::Vector4d u = t.transpose() * b;
    total += u.dot(graph.observations[k].scatter.b * u);
  }
  return total;
}

}  // namespace

PoseStepResult pose_step(const std::vector<Plane>& planes, const ObservationGraph& graph,
                         const GpConfig& config, const std::vector<Pose>* prev) {
  PoseStepResult out;
  out.poses.resize(graph.num_poses);
  for (int i = 0; i < graph.num_poses; ++i) {
    if (!graph.pose_determinable(i, planes))
      throw std::runtime_error("underdetermined pose " + std::to_string(i));
    try {
      const SdpProblem prob = build_pose_sdp(i, planes, graph);
      const SdpSolution sol = solve_sdp(prob, config.sdp);
      if (sol.status == SdpStatus::NumericalFailure || sol.status == SdpStatus::Infeasible)
        throw std::runtime_error("pose sub-solve failed");
      const Certificate cert = certify(prob, sol);
      out.certs.push_back({0, 'p', i, cert.rel_gap, cert.rank_ratio, cert.primal_feas,
                           cert.dual_feas});
      Pose cand = recover_pose(sol).pose;
      if (prev && pose_objective(cand, planes, graph, i) >
                      pose_objective((*prev)[i], planes, graph, i)) {
        cand = (*prev)[i];
        ++out.kept_previous;
      }
      out.poses[i] = cand;
    } catch (const std::exception& e) {
      if (!prev) throw std::runtime_error(std::string(e.what()) + " (pose " + std::to_string(i) + ")");
      out.poses[i] = (*prev)[i];
      ++out.failures;
    }
  }
  return out;
}

PlaneStepResult plane_step(const std::vector<Pose>& poses, const ObservationGraph& graph,
                           const GpConfig& config, const std::vector<Plane>* prev) {
  PlaneStepResult out;
  out.planes.resize(graph.num_planes);
  for (int j = 0; j < graph.num_planes; ++j) {
    if (graph.obs_of_plane[j].empty())
      throw std::runtime_error("unobserved plane " + std::to_string(j));
    try {
      const SdpProblem prob = build_plane_sdp(j, poses, graph);
      const SdpSolution sol = solve_sdp(prob, config.sdp);
      if (sol.status == SdpStatus::NumericalFailure || sol.status == SdpStatus::Infeasible)
        throw std::runtime_error("plane sub-solve failed");
      const Certificate cert = certify(prob, sol);
      out.certs.push_back({0, 'l', j, cert.rel_gap, cert.rank_ratio, cert.primal_feas,
                           cert.dual_feas});
      Plane cand = recover_plane(sol).plane;
      if (prev && plane_objective(cand, poses, graph, j) >
                      plane_objective((*prev)[j], poses, graph, j)) {
        cand = (*prev)[j];
        ++out.kept_previous;
      }
      out.planes[j] = cand;
    } catch (const std::exception& e) {
      if (!prev) throw std::runtime_error(std::string(e.what()) + " (plane " + std::to_string(j) + ")");
      out.planes[j] = (*prev)[j];
      ++out.failures;
    }
  }
  return out;
}

SolveReport run_globalpointer(const ObservationGraph& graph, std::vector<Pose> init_poses,
                              std::vector<Plane> init_planes, const GpConfig& config) {
  if (!graph.well_posed()) throw std::runtime_error("observation graph not well posed");
  if (static_cast<int>(init_poses.size()) != graph.num_poses ||
      static_cast<int>(init_planes.size()) != graph.num_planes)
    throw std::runtime_error("initialization size mismatch");

  const auto t0 = Clock::now();
  SolveReport report;
  report.poses = std::move(init_poses);
  report.planes = std::move(init_planes);

  constexpr double kEpsFloor = 1e-12;
  double prev_obj = total_objective(report.poses, report.planes, graph);
  report.objective_trace.push_back(prev_obj);

  try {
    for (int iter = 1; iter <= config.max_iter; ++iter) {
      report.iterations = iter;

      const auto tp = Clock::now();
      PoseStepResult ps = pose_step(report.planes, graph, config, &report.poses);
      report.wall.pose_ms += ms_since(tp);
      report.poses = std::move(ps.poses);
      report.kept_previous += ps.kept_previous;
      report.sub_failures += ps.failures;
      for (auto& c : ps.certs) {
        c.iteration = iter;
        report.gap_max = std::max(report.gap_max, c.rel_gap);
        report.rank_ratio_max = std::max(report.rank_ratio_max, c.rank_ratio);
        if (config.record_trace) report.certificates.push_back(c);
      }

      const auto tl = Clock::now();
      PlaneStepResult ls = plane_step(report.poses, graph, config, &report.planes);
      report.wall.plane_ms += ms_since(tl);
      report.planes = std::move(ls.planes);
      report.kept_previous += ls.kept_previous;
      report.sub_failures += ls.failures;
      for (auto& c : ls.certs) {
        c.iteration = iter;
        report.gap_max = std::max(report.gap_max, c.rel_gap);
        report.rank_ratio_max = std::max(report.rank_ratio_max, c.rank_ratio);
        if (config.record_trace) report.certificates.push_back(c);
      }

      const double obj = total_objective(report.poses, report.planes, graph);
      report.objective_trace.push_back(obj);
      if (std::abs(obj - prev_obj) <= config.rel_tol * std::max(prev_obj, kEpsFloor)) {
        report.converged = true;
        prev_obj = obj;
        break;
      }
      prev_obj = obj;
    }
  } catch (const std::exception& e) {
    report.wall.total_ms = ms_since(t0);
    report.point_objective_trace = report.objective_trace;
    throw SolveError(e.what(), std::move(report));
  }

  report.point_objective_trace = report.objective_trace;
  report.wall.total_ms = ms_since(t0);
  return report;
}

}  // namespace pa
