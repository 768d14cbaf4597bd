#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <utility>

#include "pa/geometry.hpp"

namespace pa {

struct SceneSpec {
  int m = 10;                    // poses
  int n = 10;                    // planes
  double box_half_extent = 25.0; // 50 m box
  int points_per_obs = 100;
  double sigma_p = 0.0;          // point noise std, meters
  double overlap = 1.0;          // fraction of retained (pose, plane) pairs
  std::uint64_t seed = 0;

  void validate() const;
};

struct Scene {
  SceneSpec spec;
  std::vector<Pose> gt_poses;
  std::vector<Plane> gt_planes;
  bool has_ground_truth = false;
  std::vector<LabeledPoint> points;
  ObservationGraph graph;

  std::int64_t total_points() const { return static_cast<std::int64_t>(points.size()); }
};

// Deterministic sub-stream derivation: (seed, cell, trial) -> stream seed.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t cell, std::uint64_t trial);

Scene generate_scene(const SceneSpec& spec);

// Retains ceil(overlap*m*n) pairs such that every pose sees >= 4 planes with a
// rank-3 normal span, every plane is seen >= 2 times, and the bipartite graph
// is connected. Throws "cannot satisfy overlap" when infeasible.
std::set<std::pair<int, int>> make_overlap_mask(int m, int n, double overlap,
                                                std::mt19937_64& rng,
                                                const std::vector<Plane>& planes);

std::vector<Pose> perturb_init(const std::vector<Pose>& poses, double sigma_r, double sigma_t,
                               std::mt19937_64& rng);

std::pair<std::vector<Pose>, std::vector<Plane>> random_init(const SceneSpec& spec,
                                                             std::mt19937_64& rng);

Eigen::Vector3d random_unit_vector(std::mt19937_64& rng);
Eigen::Matrix3d random_rotation(std::mt19937_64& rng);

}  // namespace pa
