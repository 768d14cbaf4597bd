#pragma once

#include <optional>

#include "pa/geometry.hpp"
#include "pa/relax.hpp"
#include "pa/sdp.hpp"

namespace pa {

struct GpConfig {
  int max_iter = 200;
  double rel_tol = 1e-4;
  SdpSettings sdp;
  bool record_trace = true;
};

// One per SDP sub-solve, recomputed from problem data.
struct SubCert {
  int iteration = 0;
  char kind = 'p';  // 'p' pose, 'l' plane, 'r' rotation calibration
  int entity = 0;
  double rel_gap = 0.0;
  double rank_ratio = 0.0;
  double primal_feas = 0.0;
  double dual_feas = 0.0;
};

struct PhaseTimes {
  double fit_ms = 0.0;
  double calib_ms = 0.0;
  double pose_ms = 0.0;
  double plane_ms = 0.0;
  double total_ms = 0.0;
};

struct SolveReport {
  std::vector<Pose> poses;
  std::vector<Plane> planes;
  std::vector<double> objective_trace;        // monitored objective per iteration (index 0 = initial)
  std::vector<double> point_objective_trace;  // point-to-plane total (same as above for GlobalPointer)
  std::vector<SubCert> certificates;
  int iterations = 0;
  bool converged = false;
  double gap_max = 0.0;
  double rank_ratio_max = 0.0;
  int sub_failures = 0;
  int kept_previous = 0;
  PhaseTimes wall;
};

// Raised when a solve aborts mid-run; carries the partial report.
struct SolveError : std::runtime_error {
  SolveError(const std::string& what, SolveReport partial_report)
      : std::runtime_error(what), partial(std::move(partial_report)) {}
  SolveReport partial;
};

struct PoseStepResult {
  std::vector<Pose> poses;
  std::vector<SubCert> certs;
  int kept_previous = 0;
  int failures = 0;
};

struct PlaneStepResult {
  std::vector<Plane> planes;
  std::vector<SubCert> certs;
  int kept_previous = 0;
  int failures = 0;
};

// Re-solves every pose from the fixed planes. When prev is given, a recovered
// pose is kept only if it does not worsen that pose's restricted objective,
// which makes the outer loop monotone under rounding noise.
PoseStepResult pose_step(const std::vector<Plane>& planes, const ObservationGraph& graph,
                         const GpConfig& config, const std::vector<Pose>* prev = nullptr);

PlaneStepResult plane_step(const std::vector<Pose>& poses, const ObservationGraph& graph,
                           const GpConfig& config, const std::vector<Plane>* prev = nullptr);

SolveReport run_globalpointer(const ObservationGraph& graph, std::vector<Pose> init_poses,
                              std::vector<Plane> init_planes, const GpConfig& config = {});

}  // namespace pa
