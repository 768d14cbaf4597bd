#include "pa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pa {

Aggregate aggregate(std::vector<double> values) {
  Aggregate agg;
  if (values.empty()) return agg;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  agg.mean = sum / static_cast<double>(values.size());
  const std::size_t n = values.size();
  agg.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  agg.max = values.back();
  return agg;
}

std::pair<std::vector<Pose>, std::vector<Plane>> gauge_align(const std::vector<Pose>& est_poses,
                                                             const std::vector<Plane>& est_planes,
                                                             const std::vector<Pose>& gt_poses) {
  if (est_poses.empty() || gt_poses.empty()) throw std::runtime_error("gauge_align needs poses");
  const Pose g = compose(gt_poses[0], est_poses[0].inverse());
  std::vector<Pose> poses;
  poses.reserve(est_poses.size());
  for (const auto& p : est_poses) poses.push_back(compose(g, p));
  std::vector<Plane> planes;
  planes.reserve(est_planes.size());
  for (const auto& pl : est_planes) {
    Plane out;
    out.normal = g.rotation * pl.normal;
    out.d = pl.d - pl.normal.dot(g.rotation.transpose() * g.translation);
    planes.push_back(out.canonicalized());
  }
  return {poses, planes};
}

MetricsRecord compute_metrics(const std::vector<Pose>& est_poses,
                              const std::vector<Plane>& est_planes,
                              const std::vector<Pose>& gt_poses,
                              const std::vector<Plane>& gt_planes,
                              const ObservationGraph& graph) {
  if (est_poses.size() != gt_poses.size() || est_planes.size() != gt_planes.size())
    throw std::runtime_error("estimate/ground-truth size mismatch");

  MetricsRecord rec;
  rec.e_total = total_objective(est_poses, est_planes, graph);
  for (std::size_t i = 0; i < est_poses.size(); ++i) {
    double arg = (gt_poses[i].rotation.transpose() * est_poses[i].rotation).trace() * 0.5 - 0.5;
    if (std::abs(arg) > 1.0) {
      rec.clamp_excess = std::max(rec.clamp_excess, std::abs(arg) - 1.0);
      arg = std::clamp(arg, -1.0, 1.0);
    }
    const double angle = std::acos(arg);
    rec.e_r.push_back(angle * angle);
    rec.e_t.push_back((est_poses[i].translation - gt_poses[i].translation).squaredNorm());
  }
  for (std::size_t j = 0; j < est_planes.size(); ++j) {
    rec.e_n.push_back(
        (est_planes[j].normal.cwiseAbs() - gt_planes[j].normal.cwiseAbs()).squaredNorm());
    const double dd = std::abs(est_planes[j].d) - std::abs(gt_planes[j].d);
    rec.e_d.push_back(dd * dd);
  }
  rec.e_r_agg = aggregate(rec.e_r);
  rec.e_t_agg = aggregate(rec.e_t);
  rec.e_n_agg = aggregate(rec.e_n);
  rec.e_d_agg = aggregate(rec.e_d);
  return rec;
}

}  // namespace pa
