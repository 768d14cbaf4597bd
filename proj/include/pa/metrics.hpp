#pragma once

#include "pa/geometry.hpp"

namespace pa {

struct Aggregate {
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
};

Aggregate aggregate(std::vector<double> values);

struct MetricsRecord {
  double e_total = 0.0;
  std::vector<double> e_r;  // per pose, squared radians
  std::vector<double> e_t;  // per pose, squared meters
  std::vector<double> e_n;  // per plane
  std::vector<double> e_d;  // per plane
  Aggregate e_r_agg, e_t_agg, e_n_agg, e_d_agg;
  double clamp_excess = 0.0;  // how far any arccos argument exceeded [-1, 1]
};

// Applies the rigid transform mapping estimated pose 0 onto ground-truth
// pose 0 to every pose and plane (plane adjustment is gauge-free; metrics
// are meaningful only after this).
std::pair<std::vector<Pose>, std::vector<Plane>> gauge_align(const std::vector<Pose>& est_poses,
                                                             const std::vector<Plane>& est_planes,
                                                             const std::vector<Pose>& gt_poses);

MetricsRecord compute_metrics(const std::vector<Pose>& est_poses,
                              const std::vector<Plane>& est_planes,
                              const std::vector<Pose>& gt_poses,
                              const std::vector<Plane>& gt_planes,
                              const ObservationGraph& graph);

}  // namespace pa
