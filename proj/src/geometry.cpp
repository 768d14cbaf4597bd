#include "pa/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace pa {

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  t.topLeftCorner<3, 3>() = rotation;
  t.topRightCorner<3, 1>() = translation;
  return t;
}

Pose Pose::inverse() const {
  Pose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(rotation.transpose() * translation);
  return inv;
}

double Pose::orthonormality_error() const {
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).norm();
  const double det = std::abs(rotation.determinant() - 1.0);
  return std::max(ortho, det);
}

bool Pose::is_valid(double tol) const { return orthonormality_error() < tol; }

Pose compose(const Pose& a, const Pose& b) {
  Pose c;
  c.rotation = a.rotation * b.rotation;
  c.translation = a.rotation * b.translation + a.translation;
  return c;
}

Eigen::Vector3d transform_point(const Pose& pose, const Eigen::Vector3d& p_local) {
  return pose.rotation * p_local + pose.translation;
}

UnitQuaternion UnitQuaternion::from_vector(const Eigen::Vector4d& v) {
  const double n = v.norm();
  if (n < 1e-300) throw std::runtime_error("zero quaternion");
  UnitQuaternion q;
  q.wxyz = v / n;
  return q.canonicalized();
}

UnitQuaternion UnitQuaternion::canonicalized() const {
  UnitQuaternion q = *this;
  for (int i = 0; i < 4; ++i) {
    if (q.wxyz[i] > 0.0) break;
    if (q.wxyz[i] < 0.0) {
      q.wxyz = -q.wxyz;
      break;
    }
  }
  return q;
}

double UnitQuaternion::norm_error() const { return std::abs(wxyz.norm() - 1.0); }

Eigen::Matrix3d rotation_from_quat(const UnitQuaternion& q) {
  const double w = q.wxyz[0], x = q.wxyz[1], y = q.wxyz[2], z = q.wxyz[3];
  Eigen::Matrix3d r;
  r << w * w + x * x - y * y - z * z, 2.0 * (x * y - w * z), 2.0 * (x * z + w * y),
      2.0 * (x * y + w * z), w * w - x * x + y * y - z * z, 2.0 * (y * z - w * x),
      2.0 * (x * z - w * y), 2.0 * (y * z + w * x), w * w - x * x - y * y + z * z;
  return r;
}

UnitQuaternion quat_from_rotation(const Eigen::Matrix3d& r) {
  // Shepperd's method: branch on the largest of trace and diagonal entries.
  Eigen::Vector4d q;
  const double tr = r.trace();
  if (tr > r(0, 0) && tr > r(1, 1) && tr > r(2, 2)) {
    const double s = std::sqrt(tr + 1.0) * 2.0;
    q << 0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s;
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    const double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
    q << (r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s;
  } else if (r(1, 1) > r(2, 2)) {
    const double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
    q << (r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s;
  } else {
    const double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
    q << (r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s;
  }
  return UnitQuaternion::from_vector(q);
}

Plane Plane::from_normal_d(const Eigen::Vector3d& normal, double d) {
  const double n = normal.norm();
  if (n < 1e-300) throw std::runtime_error("zero plane normal");
  Plane p;
  p.normal = normal / n;
  p.d = d / n;
  return p.canonicalized();
}

Plane Plane::canonicalized() const {
  Plane p = *this;
  bool flip = false;
  if (p.d > 0.0) {
    flip = true;
  } else if (p.d == 0.0) {
    for (int i = 0; i < 3; ++i) {
      if (p.normal[i] > 0.0) break;
      if (p.normal[i] < 0.0) {
        flip = true;
        break;
      }
    }
  }
  if (flip) {
    p.normal = -p.normal;
    p.d = -p.d;
  }
  return p;
}

Eigen::Vector4d Plane::homogeneous() const {
  return Eigen::Vector4d(normal[0], normal[1], normal[2], d);
}

bool Plane::is_valid(double tol) const { return std::abs(normal.norm() - 1.0) < tol; }

double point_to_plane_sq(const Plane& plane, const Eigen::Vector3d& p_global) {
  const double r = plane.normal.dot(p_global) + plane.d;
  return r * r;
}

double plane_to_plane_sq(const Pose& pose, const Plane& local, const Plane& global) {
  const Eigen::Vector3d n_g = pose.rotation * local.normal;
  const double d_g = local.d - local.normal.dot(pose.rotation.transpose() * pose.translation);
  const double dd = global.d - d_g;
  return (n_g - global.normal).squaredNorm() + dd * dd;
}

ScatterMatrix accumulate_scatter(const std::vector<Eigen::Vector3d>& points) {
  if (points.empty()) throw std::runtime_error("empty observation");
  ScatterMatrix s;
  for (const auto& p : points) {
    const Eigen::Vector4d h(p[0], p[1], p[2], 1.0);
    s.b += h * h.transpose();
  }
  s.b = 0.5 * (s.b + s.b.transpose()).eval();
  s.count = static_cast<std::int64_t>(points.size());
  return s;
}

ObservationGraph ObservationGraph::from_points(int m, int n,
                                               const std::vector<LabeledPoint>& points) {
  ObservationGraph g;
  g.num_poses = m;
  g.num_planes = n;
  std::vector<std::vector<std::vector<Eigen::Vector3d>>> buckets(
      static_cast<std::size_t>(m),
      std::vector<std::vector<Eigen::Vector3d>>(static_cast<std::size_t>(n)));
  for (const auto& pt : points) {
    if (pt.frame_id < 0 || pt.frame_id >= m || pt.plane_id < 0 || pt.plane_id >= n)
      throw std::runtime_error("labeled point index out of range");
    buckets[pt.frame_id][pt.plane_id].push_back(pt.p_local);
  }
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      if (buckets[i][j].empty()) continue;
      Observation obs;
      obs.frame_id = i;
      obs.plane_id = j;
      obs.scatter = accumulate_scatter(buckets[i][j]);
      obs.degenerate = obs.scatter.count < 3;
      g.observations.push_back(std::move(obs));
    }
  }
  g.rebuild_index();
  return g;
}

void ObservationGraph::rebuild_index() {
  obs_of_pose.assign(static_cast<std::size_t>(num_poses), {});
  obs_of_plane.assign(static_cast<std::size_t>(num_planes), {});
  for (int k = 0; k < static_cast<int>(observations.size()); ++k) {
    obs_of_pose[observations[k].frame_id].push_back(k);
    obs_of_plane[observations[k].plane_id].push_back(k);
  }
}

std::int64_t ObservationGraph::total_points() const {
  std::int64_t n = 0;
  for (const auto& o : observations) n += o.scatter.count;
  return n;
}

bool ObservationGraph::well_posed() const {
  for (const auto& list : obs_of_pose)
    if (list.empty()) return false;
  for (const auto& list : obs_of_plane)
    if (list.empty()) return false;
  return num_poses > 0 && num_planes > 0;
}

bool ObservationGraph::pose_determinable(int i, const std::vector<Plane>& planes) const {
  if (i < 0 || i >= num_poses) return false;
  const auto& list = obs_of_pose[i];
  if (static_cast<int>(list.size()) < 4) return false;
  Eigen::Matrix3d nn = Eigen::Matrix3d::Zero();
  for (int k : list) {
    const Eigen::Vector3d& n = planes[observations[k].plane_id].normal;
    nn += n * n.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(nn);
  return eig.eigenvalues()[0] > 1e-9 * std::max(1.0, eig.eigenvalues()[2]);
}

double total_objective(const std::vector<Pose>& poses, const std::vector<Plane>& planes,
                       const ObservationGraph& graph) {
  double total = 0.0;
  for (const auto& obs : graph.observations) {
    const Eigen::Matrix4d t = poses[obs.frame_id].matrix();
    const Eigen::Vector4d b = planes[obs.plane_id].homogeneous();
    const Eigen::Vector4d u = t.transpose() * b;
    total += u.dot(obs.scatter.b * u);
  }
  return total;
}

Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv[2] > 1e-12 * std::max(1.0, sv[0]))) {
    throw std::runtime_error("degenerate rotation estimate");
  }
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

}  // namespace pa
