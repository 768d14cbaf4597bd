#include "pa/relax.hpp"

#include <cmath>
#include <stdexcept>

namespace pa {

namespace {

// x index of rotation entry R(row, col), row-major.
inline int rot_idx(int row, int col) { return 3 * row + col; }
// Embedding of the 13 lifted coordinates into the row-major 16-vector of T.
constexpr int kWIndex[kLiftedPoseDim] = {0, 1, 2, 4, 5, 6, 8, 9, 10, 3, 7, 11, 15};

void add_sym(Eigen::MatrixXd& a, int r, int c, double v) {
  if (r == c) {
    a(r, r) += v;
  } else {
    a(r, c) += 0.5 * v;
    a(c, r) += 0.5 * v;
  }
}

}  // namespace

Eigen::VectorXd encode_pose(const Pose& pose) {
  Eigen::VectorXd x(kLiftedPoseDim);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) x[rot_idx(r, c)] = pose.rotation(r, c);
  x.segment<3>(9) = pose.translation;
  x[kLiftedHomogeneousSlot] = 1.0;
  return x;
}

Pose decode_pose(const Eigen::VectorXd& x) {
  if (x.size() != kLiftedPoseDim) throw std::runtime_error("lifted pose size mismatch");
  Eigen::Matrix3d r;
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) r(row, col) = x[rot_idx(row, col)];
  Pose pose;
  pose.rotation = project_to_so3(r);
  pose.translation = x.segment<3>(9);
  return pose;
}

Eigen::Matrix4d build_quat_cross_matrix(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  // a' R(q) b = q' K q with K below (scalar-first quaternion); M = -2K.
  Eigen::Matrix4d k = Eigen::Matrix4d::Zero();
  k(0, 0) = a.dot(b);
  const Eigen::Vector3d bxa = b.cross(a);
  k.block<3, 1>(1, 0) = bxa;
  k.block<1, 3>(0, 1) = bxa.transpose();
  k.block<3, 3>(1, 1) =
      a * b.transpose() + b * a.transpose() - a.dot(b) * Eigen::Matrix3d::Identity();
  return -2.0 * k;
}

SdpProblem build_pose_sdp(int pose_index, const std::vector<Plane>& planes,
                          const ObservationGraph& graph) {
  if (pose_index < 0 || pose_index >= graph.num_poses)
    throw std::runtime_error("pose index out of range");
  const auto& obs_list = graph.obs_of_pose[pose_index];
  if (obs_list.empty()) throw std::runtime_error("pose has no observations");

  SdpProblem p;
  p.dim = kLiftedPoseDim;
  p.cost = Eigen::MatrixXd::Zero(kLiftedPoseDim, kLiftedPoseDim);

  // C = sum_j (b_j b_j') (x) B(i,j) restricted to the 13 live coordinates of
  // the row-major vec of T (entry (4c+a, 4d+e) of the Kronecker product is
  // bb(c,d) * B(a,e)).
  for (int k : obs_list) {
    const Observation& obs = graph.observations[k];
    const Eigen::Vector4d b = planes[obs.plane_id].homogeneous();
    const Eigen::Matrix4d bb = b * b.transpose();
    for (int pq = 0; pq < kLiftedPoseDim; ++pq) {
      const int wp = kWIndex[pq];
      const int cp = wp / 4, ap = wp % 4;
      for (int qq = pq; qq < kLiftedPoseDim; ++qq) {
        const int wq = kWIndex[qq];
        const int cq = wq / 4, aq = wq % 4;
        const double v = bb(cp, cq) * obs.scatter.b(ap, aq);
        p.cost(pq, qq) += v;
        if (qq != pq) p.cost(qq, pq) += v;
      }
    }
  }

  auto zero = [&] { return Eigen::MatrixXd::Zero(kLiftedPoseDim, kLiftedPoseDim).eval(); };

  // h normalization.
  {
    Eigen::MatrixXd a = zero();
    a(kLiftedHomogeneousSlot, kLiftedHomogeneousSlot) = 1.0;
    p.constraints.push_back({a, 1.0});
  }
  // R'R = I (columns a.b) and RR' = I (rows a.b).
  const int pairs[6][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}};
  for (const auto& pr : pairs) {
    Eigen::MatrixXd a = zero();
    for (int c = 0; c < 3; ++c) add_sym(a, rot_idx(c, pr[0]), rot_idx(c, pr[1]), 1.0);
    p.constraints.push_back({a, pr[0] == pr[1] ? 1.0 : 0.0});
  }
  for (const auto& pr : pairs) {
    Eigen::MatrixXd a = zero();
    for (int c = 0; c < 3; ++c) add_sym(a, rot_idx(pr[0], c), rot_idx(pr[1], c), 1.0);
    p.constraints.push_back({a, pr[0] == pr[1] ? 1.0 : 0.0});
  }
  // Column cross products: col_a x col_b = col_c for cyclic (a,b,c).
  const int cyc[3][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}};
  for (const auto& t : cyc) {
    for (int row = 0; row < 3; ++row) {
      Eigen::MatrixXd a = zero();
      const int p1 = (row + 1) % 3, p2 = (row + 2) % 3;
      // (col_a x col_b)[row] = R(p1,a) R(p2,b) - R(p2,a) R(p1,b)
      add_sym(a, rot_idx(p1, t[0]), rot_idx(p2, t[1]), 1.0);
      add_sym(a, rot_idx(p2, t[0]), rot_idx(p1, t[1]), -1.0);
      add_sym(a, rot_idx(row, t[2]), kLiftedHomogeneousSlot, -1.0);
      p.constraints.push_back({a, 0.0});
    }
  }
  return p;
}

SdpProblem build_plane_sdp(int plane_index, const std::vector<Pose>& poses,
                           const ObservationGraph& graph) {
  if (plane_index < 0 || plane_index >= graph.num_planes)
    throw std::runtime_error("plane index out of range");
  const auto& obs_list = graph.obs_of_plane[plane_index];
  if (obs_list.empty()) throw std::runtime_error("plane has no observations");

  SdpProblem p;
  p.dim = 4;
  Eigen::Matrix4d d = Eigen::Matrix4d::Zero();
  for (int k : obs_list) {
    const Observation& obs = graph.observations[k];
    const Eigen::Matrix4d t = poses[obs.frame_id].matrix();
    d += t * obs.scatter.b * t.transpose();
  }
  p.cost = 0.5 * (d + d.transpose());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
  a.topLeftCorner<3, 3>() = Eigen::Matrix3d::Identity();
  p.constraints.push_back({a, 1.0});
  return p;
}

SdpProblem build_rotation_only_sdp(const std::vector<Eigen::Vector3d>& local_normals,
                                   const std::vector<Eigen::Vector3d>& reference_normals) {
  if (local_normals.size() != reference_normals.size())
    throw std::runtime_error("normal list length mismatch");
  const int n = static_cast<int>(local_normals.size());
  if (n < 1) throw std::runtime_error("no normals to calibrate");
  const int dim = 4 * (n + 1);

  SdpProblem p;
  p.dim = dim;
  p.cost = Eigen::MatrixXd::Zero(dim, dim);
  for (int j = 0; j < n; ++j) {
    const Eigen::Matrix4d m = build_quat_cross_matrix(reference_normals[j], local_normals[j]);
    p.cost.block<4, 4>(0, 4 * (j + 1)) = 0.5 * m;
    p.cost.block<4, 4>(4 * (j + 1), 0) = 0.5 * m.transpose();
  }

  // trace(Q_00) = 1.
  {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
    a.topLeftCorner<4, 4>() = Eigen::Matrix4d::Identity();
    p.constraints.push_back({a, 1.0});
  }
  // Q_00 = Q_jj entrywise (10 equations per block).
  for (int j = 1; j <= n; ++j) {
    for (int r = 0; r < 4; ++r) {
      for (int c = r; c < 4; ++c) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
        add_sym(a, r, c, 1.0);
        add_sym(a, 4 * j + r, 4 * j + c, -1.0);
        p.constraints.push_back({a, 0.0});
      }
    }
  }
  return p;
}

PoseRecovery recover_pose(const SdpSolution& solution) {
  if (solution.x_matrix.rows() != kLiftedPoseDim)
    throw std::runtime_error("solution is not a lifted pose");
  auto [v, ratio] = round_rank1(solution.x_matrix);
  const double h = v[kLiftedHomogeneousSlot];
  if (std::abs(h) < 1e-9 * std::max(1.0, v.norm()))
    throw std::runtime_error("lost homogeneous scale");
  PoseRecovery out;
  out.pose = decode_pose(v / h);
  out.quality = ratio;
  return out;
}

PlaneRecovery recover_plane(const SdpSolution& solution) {
  if (solution.x_matrix.rows() != 4) throw std::runtime_error("solution is not a plane variable");
  auto [v, ratio] = round_rank1(solution.x_matrix);
  const double nn = v.head<3>().norm();
  if (nn < 1e-9 * std::max(1.0, v.norm())) throw std::runtime_error("degenerate normal");
  PlaneRecovery out;
  out.plane = Plane::from_normal_d(v.head<3>(), v[3]);
  out.quality = ratio;
  return out;
}

SignRecovery recover_signs(const SdpSolution& solution, int n_planes) {
  const int dim = 4 * (n_planes + 1);
  if (solution.x_matrix.rows() != dim)
    throw std::runtime_error("solution does not match sign-calibration layout");
  auto [v, ratio] = round_rank1(solution.x_matrix);
  SignRecovery out;
  out.quality = ratio;
  out.theta.resize(n_planes);

  if (ratio < 1e-6) {
    const Eigen::Vector4d q0 = v.head<4>();
    const double q0n2 = q0.squaredNorm();
    for (int j = 1; j <= n_planes; ++j) {
      const double dot = v.segment<4>(4 * j).dot(q0);
      if (std::abs(dot) < 1e-9 * q0n2) throw std::runtime_error("ambiguous sign");
      out.theta[j - 1] = dot > 0.0 ? 1.0 : -1.0;
    }
    out.q = UnitQuaternion::from_vector(q0);
    return out;
  }

  // Degenerate optimal face. Every cross matrix has spectrum {-2,-2,2,2}, so
  // the face contains rank-4 points X_0j = U_j'/4 with U_j orthogonal and the
  // consistent quaternion is their common (+-1)-eigenvector: maximize
  // sum_j |a' B_j a| over unit a by alternating signs and eigenvectors.
  std::vector<Eigen::Matrix4d> b(n_planes);
  Eigen::Matrix4d b_sum = Eigen::Matrix4d::Zero();
  for (int j = 1; j <= n_planes; ++j) {
    const Eigen::MatrixXd blk = solution.x_matrix.block(0, 4 * j, 4, 4);
    b[j - 1] = 0.5 * (blk + blk.transpose());
    b_sum += b[j - 1];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> x00(
      solution.x_matrix.topLeftCorner<4, 4>().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> sum_eig(b_sum);
  std::vector<Eigen::Vector4d> starts;
  starts.push_back(sum_eig.eigenvectors().col(3));  // all-positive-sign seed first
  if (v.head<4>().norm() > 1e-6 * v.norm()) starts.push_back(v.head<4>().normalized());
  for (int c = 3; c >= 0; --c) starts.push_back(x00.eigenvectors().col(c));

  double best_score = -1.0;
  Eigen::Vector4d best_a = Eigen::Vector4d::UnitX();
  for (const auto& start : starts) {
    Eigen::Vector4d a = start;
    std::vector<double> theta(n_planes, 1.0);
    for (int sweep = 0; sweep < 30; ++sweep) {
      bool changed = false;
      for (int j = 0; j < n_planes; ++j) {
        const double t = a.dot(b[j] * a) >= 0.0 ? 1.0 : -1.0;
        if (t != theta[j]) changed = true;
        theta[j] = t;
      }
      Eigen::Matrix4d w = Eigen::Matrix4d::Zero();
      for (int j = 0; j < n_planes; ++j) w += theta[j] * b[j];
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> we(w);
      const Eigen::Vector4d next = we.eigenvectors().col(3);
      if (!changed && std::abs(next.dot(a)) > 1.0 - 1e-14) break;
      a = next;
    }
    double score = 0.0;
    for (int j = 0; j < n_planes; ++j) score += std::abs(a.dot(b[j] * a));
    if (score > best_score * (1.0 + 1e-12)) {
      best_score = score;
      best_a = a;
    }
  }
  for (int j = 0; j < n_planes; ++j) {
    const double val = best_a.dot(b[j] * best_a);
    if (std::abs(val) < 1e-9) throw std::runtime_error("ambiguous sign");
    out.theta[j] = val > 0.0 ? 1.0 : -1.0;
  }
  out.q = UnitQuaternion::from_vector(best_a);
  return out;
}

}  // namespace pa
