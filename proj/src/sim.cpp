#include "pa/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pa {

namespace {

constexpr double kPatchRadius = 10.0;  // in-plane sampling disc, meters

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Orthonormal basis perpendicular to unit n.
std::pair<Eigen::Vector3d, Eigen::Vector3d> plane_basis(const Eigen::Vector3d& n) {
  Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
  if (std::abs(n.x()) > 0.9) axis = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d u = n.cross(axis).normalized();
  return {u, n.cross(u)};
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
};

bool rank3_span(const std::vector<Eigen::Vector3d>& normals, double rel_tol) {
  Eigen::Matrix3d nn = Eigen::Matrix3d::Zero();
  for (const auto& n : normals) nn += n * n.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(nn);
  return eig.eigenvalues()[0] > rel_tol * static_cast<double>(normals.size());
}

}  // namespace

void SceneSpec::validate() const {
  if (m < 2) throw std::runtime_error("scene needs at least 2 poses");
  if (n < 4) throw std::runtime_error("scene needs at least 4 planes");
  if (!(overlap > 0.0 && overlap <= 1.0)) throw std::runtime_error("overlap must be in (0,1]");
  if (box_half_extent <= 0.0) throw std::runtime_error("box must be positive");
  if (points_per_obs < 1) throw std::runtime_error("points_per_obs must be positive");
  if (sigma_p < 0.0) throw std::runtime_error("sigma_p must be nonnegative");
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t cell, std::uint64_t trial) {
  return splitmix64(splitmix64(root ^ splitmix64(cell + 1)) ^ splitmix64(trial * 0x51ED2701ULL + 2));
}

Eigen::Vector3d random_unit_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Vector3d v;
  do {
    v << gauss(rng), gauss(rng), gauss(rng);
  } while (v.norm() < 1e-12);
  return v.normalized();
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Vector4d q;
  do {
    q << gauss(rng), gauss(rng), gauss(rng), gauss(rng);
  } while (q.norm() < 1e-12);
  return rotation_from_quat(UnitQuaternion::from_vector(q));
}

std::set<std::pair<int, int>> make_overlap_mask(int m, int n, double overlap,
                                                std::mt19937_64& rng,
                                                const std::vector<Plane>& planes) {
  if (!(overlap > 0.0 && overlap <= 1.0)) throw std::runtime_error("overlap must be in (0,1]");
  if (static_cast<int>(planes.size()) != n) throw std::runtime_error("plane count mismatch");
  const long long quota = static_cast<long long>(
      std::ceil(overlap * static_cast<double>(m) * static_cast<double>(n)));

  std::set<std::pair<int, int>> all;
  if (quota >= static_cast<long long>(m) * n) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) all.insert({i, j});
    return all;
  }
  if (quota < std::max(4LL * m, 2LL * n)) throw std::runtime_error("cannot satisfy overlap");

  std::uniform_int_distribution<int> pick_pose(0, m - 1);
  std::uniform_int_distribution<int> pick_plane(0, n - 1);

  for (int attempt = 0; attempt < 100; ++attempt) {
    std::set<std::pair<int, int>> edges;
    std::vector<int> plane_deg(n, 0), pose_deg(m, 0);
    auto add_edge = [&](int i, int j) {
      if (edges.insert({i, j}).second) {
        ++plane_deg[j];
        ++pose_deg[i];
        return true;
      }
      return false;
    };

    // Each pose picks 4 planes, preferring low-degree planes so tight quotas
    // stay balanced, resampling until the normals span rank 3.
    bool ok = true;
    for (int i = 0; i < m && ok; ++i) {
      bool found = false;
      for (int tries = 0; tries < 60 && !found; ++tries) {
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return plane_deg[a] < plane_deg[b]; });
        const int window = std::min(n, 4 + tries / 4);
        std::vector<int> cand(order.begin(), order.begin() + window);
        std::shuffle(cand.begin(), cand.end(), rng);
        cand.resize(4);
        std::vector<Eigen::Vector3d> normals;
        for (int j : cand) normals.push_back(planes[j].normal);
        if (!rank3_span(normals, 1e-3)) continue;
        for (int j : cand) add_edge(i, j);
        found = true;
      }
      ok = found;
    }
    if (!ok) continue;

    for (int j = 0; j < n; ++j) {
      int guard = 0;
      while (plane_deg[j] < 2 && guard++ < 1000) add_edge(pick_pose(rng), j);
    }

    // Connect components (poses 0..m-1, planes m..m+n-1).
    UnionFind uf(m + n);
    for (const auto& e : edges) uf.unite(e.first, m + e.second);
    int guard = 0;
    while (guard++ < 10000) {
      bool connected = true;
      const int root = uf.find(0);
      for (int v = 1; v < m + n && connected; ++v) connected = uf.find(v) == root;
      if (connected) break;
      const int i = pick_pose(rng);
      const int j = pick_plane(rng);
      if (uf.find(i) != uf.find(m + j)) {
        add_edge(i, j);
        uf.unite(i, m + j);
      }
    }
    if (static_cast<long long>(edges.size()) > quota) continue;

    std::vector<std::pair<int, int>> spare;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        if (!edges.count({i, j})) spare.push_back({i, j});
    std::shuffle(spare.begin(), spare.end(), rng);
    for (const auto& e : spare) {
      if (static_cast<long long>(edges.size()) >= quota) break;
      add_edge(e.first, e.second);
    }
    if (static_cast<long long>(edges.size()) != quota) continue;

    // Final verification.
    bool valid = true;
    for (int i = 0; i < m && valid; ++i) {
      std::vector<Eigen::Vector3d> normals;
      for (int j = 0; j < n; ++j)
        if (edges.count({i, j})) normals.push_back(planes[j].normal);
      valid = static_cast<int>(normals.size()) >= 4 && rank3_span(normals, 1e-6);
    }
    for (int j = 0; j < n && valid; ++j) valid = plane_deg[j] >= 2;
    if (valid) return edges;
  }
  throw std::runtime_error("cannot satisfy overlap");
}

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(derive_seed(spec.seed, 0, 0));
  std::uniform_real_distribution<double> ubox(-spec.box_half_extent, spec.box_half_extent);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Scene scene;
  scene.spec = spec;
  scene.has_ground_truth = true;

  std::vector<Eigen::Vector3d> anchors(spec.n);
  for (int j = 0; j < spec.n; ++j) {
    const Eigen::Vector3d normal = random_unit_vector(rng);
    anchors[j] << ubox(rng), ubox(rng), ubox(rng);
    scene.gt_planes.push_back(Plane::from_normal_d(normal, -normal.dot(anchors[j])));
  }
  for (int i = 0; i < spec.m; ++i) {
    Pose pose;
    pose.rotation = random_rotation(rng);
    pose.translation << ubox(rng), ubox(rng), ubox(rng);
    scene.gt_poses.push_back(pose);
  }

  std::set<std::pair<int, int>> mask;
  if (spec.overlap >= 1.0) {
    for (int i = 0; i < spec.m; ++i)
      for (int j = 0; j < spec.n; ++j) mask.insert({i, j});
  } else {
    mask = make_overlap_mask(spec.m, spec.n, spec.overlap, rng, scene.gt_planes);
  }

  const double inside = spec.box_half_extent;
  for (int i = 0; i < spec.m; ++i) {
    const Pose inv = scene.gt_poses[i].inverse();
    for (int j = 0; j < spec.n; ++j) {
      if (!mask.count({i, j})) continue;
      const auto [u, v] = plane_basis(scene.gt_planes[j].normal);
      const Eigen::Vector3d n_local = inv.rotation * scene.gt_planes[j].normal;
      double radius = kPatchRadius;
      for (int k = 0; k < spec.points_per_obs; ++k) {
        Eigen::Vector3d world;
        int guard = 0;
        while (true) {
          const double r = radius * std::sqrt(unit(rng));
          const double phi = 2.0 * M_PI * unit(rng);
          world = anchors[j] + r * std::cos(phi) * u + r * std::sin(phi) * v;
          if (world.cwiseAbs().maxCoeff() <= inside) break;
          if (++guard % 1000 == 0) radius *= 0.5;  // shrink toward the in-box anchor
        }
        Eigen::Vector3d local = transform_point(inv, world);
        if (spec.sigma_p > 0.0) {
          Eigen::Vector3d noise;
          do {  // keep points inside the 4-sigma plane envelope
            noise << gauss(rng), gauss(rng), gauss(rng);
            noise *= spec.sigma_p;
          } while (std::abs(n_local.dot(noise)) > 4.0 * spec.sigma_p);
          local += noise;
        }
        scene.points.push_back({i, j, local});
      }
    }
  }

  scene.graph = ObservationGraph::from_points(spec.m, spec.n, scene.points);
  return scene;
}

std::vector<Pose> perturb_init(const std::vector<Pose>& poses, double sigma_r, double sigma_t,
                               std::mt19937_64& rng) {
  if (sigma_r < 0.0 || sigma_t < 0.0) throw std::runtime_error("sigmas must be nonnegative");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Pose> out;
  out.reserve(poses.size());
  for (const auto& pose : poses) {
    Pose p = pose;
    if (sigma_r > 0.0) {
      const Eigen::Vector3d axis = random_unit_vector(rng);
      const double angle = std::abs(sigma_r * gauss(rng));
      p.rotation = Eigen::AngleAxisd(angle, axis).toRotationMatrix() * p.rotation;
    }
    if (sigma_t > 0.0) {
      Eigen::Vector3d dt;
      dt << gauss(rng), gauss(rng), gauss(rng);
      p.translation += sigma_t * dt;
    }
    out.push_back(p);
  }
  return out;
}

std::pair<std::vector<Pose>, std::vector<Plane>> random_init(const SceneSpec& spec,
                                                             std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ubox(-spec.box_half_extent, spec.box_half_extent);
  std::uniform_real_distribution<double> ud(-spec.box_half_extent, 0.0);
  std::vector<Pose> poses;
  for (int i = 0; i < spec.m; ++i) {
    Pose p;
    p.rotation = random_rotation(rng);
    p.translation << ubox(rng), ubox(rng), ubox(rng);
    poses.push_back(p);
  }
  std::vector<Plane> planes;
  for (int j = 0; j < spec.n; ++j)
    planes.push_back(Plane::from_normal_d(random_unit_vector(rng), ud(rng)));
  return {poses, planes};
}

}  // namespace pa
