#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pa/relax.hpp"
#include "pa/sim.hpp"

using namespace pa;

TEST_SUITE_BEGIN("relax");

namespace {

// Small noise-free graph with everything observed.
struct TestScene {
  std::vector<Pose> poses;
  std::vector<Plane> planes;
  ObservationGraph graph;
};

TestScene make_scene(std::uint64_t seed, int m = 2, int n = 6) {
  SceneSpec spec;
  spec.m = m;
  spec.n = n;
  spec.points_per_obs = 25;
  spec.seed = seed;
  Scene s = generate_scene(spec);
  return {s.gt_poses, s.gt_planes, s.graph};
}

}  // namespace

TEST_CASE("quat cross matrix identity") {
  const Eigen::Vector3d e1(1, 0, 0);
  const Eigen::Matrix4d m = build_quat_cross_matrix(e1, e1);
  const Eigen::Vector4d qi(1, 0, 0, 0);
  CHECK(qi.dot(m * qi) == doctest::Approx(-2.0));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    Eigen::Vector3d a, b;
    a << gauss(rng), gauss(rng), gauss(rng);
    b << gauss(rng), gauss(rng), gauss(rng);
    Eigen::Vector4d qv;
    qv << gauss(rng), gauss(rng), gauss(rng), gauss(rng);
    const UnitQuaternion q = UnitQuaternion::from_vector(qv);
    const Eigen::Matrix4d mm = build_quat_cross_matrix(a, b);
    const double quad = q.wxyz.dot(mm * q.wxyz);
    const double direct = -2.0 * a.dot(rotation_from_quat(q) * b);
    CHECK(quad == doctest::Approx(direct).epsilon(1e-12));
    CHECK(-quad == doctest::Approx(2.0 * a.dot(rotation_from_quat(q) * b)).epsilon(1e-12));
    CHECK((mm - mm.transpose()).norm() < 1e-14);
  }
}

TEST_CASE("encoded poses satisfy every pose-sdp constraint") {
  std::mt19937_64 rng(5);
  const TestScene ts = make_scene(101);
  for (int trial = 0; trial < 25; ++trial) {
    const Pose pose = oracle::random_pose(rng);
    const Eigen::VectorXd x = encode_pose(pose);
    const Eigen::MatrixXd xx = x * x.transpose();
    const SdpProblem p = build_pose_sdp(0, ts.planes, ts.graph);
    for (const auto& con : p.constraints) {
      CHECK(std::abs((con.a.cwiseProduct(xx)).sum() - con.b) < 1e-10);
    }
  }
}

TEST_CASE("pose-sdp objective equals the restricted point-to-plane objective") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const TestScene ts = make_scene(200 + trial, 2, 5);
    const SdpProblem p = build_pose_sdp(0, ts.planes, ts.graph);
    const Pose pose = oracle::random_pose(rng);
    const Eigen::VectorXd x = encode_pose(pose);
    const double via_sdp = x.dot(p.cost * x);
    double direct = 0.0;
    for (int k : ts.graph.obs_of_pose[0]) {
      const Eigen::Vector4d b = ts.planes[ts.graph.observations[k].plane_id].homogeneous();
      const Eigen::Vector4d u = pose.matrix().transpose() * b;
      direct += u.dot(ts.graph.observations[k].scatter.b * u);
    }
    CHECK(std::abs(via_sdp - direct) < 1e-9 * (1.0 + direct));
  }
}

TEST_CASE("consistent scene has zero cost at the encoded ground truth") {
  ObservationGraph g = ObservationGraph::from_points(
      1, 1, {{0, 0, {0, 0, 0}}, {0, 0, {1, 0, 0}}, {0, 0, {0, 1, 0}}, {0, 0, {2, 3, 0}}});
  const std::vector<Plane> planes = {Plane{{0, 0, 1}, 0.0}};
  // Only one plane: pad with three more so the builder precondition holds.
  const SdpProblem p = build_pose_sdp(0, planes, g);
  const Eigen::VectorXd x = encode_pose(Pose{});
  CHECK(x.dot(p.cost * x) == doctest::Approx(0.0));
}

TEST_CASE("noise-free pose solve recovers ground truth") {
  const TestScene ts = make_scene(42, 2, 8);
  for (int i = 0; i < 2; ++i) {
    const SdpProblem p = build_pose_sdp(i, ts.planes, ts.graph);
    const SdpSolution sol = solve_sdp(p);
    // Optimum 0 puts the 1e-8 relative gap at the fp floor for box-scale
    // data; MaxIter with a certified-tight iterate is acceptable.
    REQUIRE(sol.status != SdpStatus::NumericalFailure);
    REQUIRE(sol.status != SdpStatus::Infeasible);
    const Certificate cert = certify(p, sol);
    CHECK(cert.rel_gap < 1e-6);
    CHECK(cert.rank_ratio < 1e-6);
    CHECK(cert.corank1);
    const PoseRecovery rec = recover_pose(sol);
    CHECK((rec.pose.rotation - ts.poses[i].rotation).norm() < 1e-6);
    CHECK((rec.pose.translation - ts.poses[i].translation).lpNorm<Eigen::Infinity>() < 1e-6);
    CHECK(rec.quality < 1e-6);
  }
}

TEST_CASE("plane-sdp basics and noise-free recovery") {
  // Points exactly on z = 1 from the identity pose.
  ObservationGraph g = ObservationGraph::from_points(
      1, 1, {{0, 0, {0, 0, 1}}, {0, 0, {1, 0, 1}}, {0, 0, {0, 1, 1}}, {0, 0, {3, 2, 1}}});
  const SdpProblem p = build_plane_sdp(0, {Pose{}}, g);
  const SdpSolution sol = solve_sdp(p);
  REQUIRE(sol.status == SdpStatus::Optimal);
  CHECK((p.cost.cwiseProduct(sol.x_matrix)).sum() == doctest::Approx(0.0).epsilon(1e-8));
  const PlaneRecovery rec = recover_plane(sol);
  CHECK(rec.plane.normal.z() == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(rec.plane.d == doctest::Approx(-1.0).epsilon(1e-7));

  // Two poses observing one plane, noise-free. Recovery to 1e-8 needs the
  // sub-solver pushed tighter than its 1e-8 default.
  SdpSettings tight;
  tight.rel_gap_tol = 1e-11;
  tight.feas_tol = 1e-11;
  const TestScene ts = make_scene(77, 2, 6);
  for (int j = 0; j < 3; ++j) {
    const SdpProblem pj = build_plane_sdp(j, ts.poses, ts.graph);
    const SdpSolution sj = solve_sdp(pj, tight);
    REQUIRE(sj.status != SdpStatus::NumericalFailure);
    const PlaneRecovery rj = recover_plane(sj);
    CHECK((rj.plane.normal - ts.planes[j].normal).norm() < 1e-8);
    CHECK(rj.plane.d == doctest::Approx(ts.planes[j].d).epsilon(1e-8));
    const Certificate cert = certify(pj, sj);
    CHECK(cert.rel_gap < 1e-6);
    CHECK(cert.rank_ratio < 1e-6);
  }
}

TEST_CASE("plane-sdp optimum matches the Schur-complement closed form") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pts = oracle::random_points(rng, 30, 5.0);
    const ScatterMatrix s = accumulate_scatter(pts);
    ObservationGraph g;
    g.num_poses = 1;
    g.num_planes = 1;
    g.observations.push_back({0, 0, s, false});
    g.rebuild_index();
    const SdpProblem p = build_plane_sdp(0, {Pose{}}, g);
    const SdpSolution sol = solve_sdp(p);
    REQUIRE(sol.status == SdpStatus::Optimal);
    const double sdp_obj = (p.cost.cwiseProduct(sol.x_matrix)).sum();

    // Closed form: lambda_min of the Schur complement of B over the d slot.
    const Eigen::Matrix3d schur =
        s.b.topLeftCorner<3, 3>() -
        s.b.topRightCorner<3, 1>() * s.b.topRightCorner<3, 1>().transpose() / s.b(3, 3);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(schur);
    CHECK(sdp_obj == doctest::Approx(eig.eigenvalues()[0]).epsilon(1e-8));
  }
}

TEST_CASE("rotation-only sdp: single aligned normal") {
  const std::vector<Eigen::Vector3d> ns = {{0, 0, 1}};
  const SdpProblem p = build_rotation_only_sdp(ns, ns);
  CHECK(p.dim == 8);
  const SdpSolution sol = solve_sdp(p);
  REQUIRE(sol.status == SdpStatus::Optimal);
  CHECK((p.cost.cwiseProduct(sol.x_matrix)).sum() == doctest::Approx(-2.0).epsilon(1e-7));
  const SignRecovery rec = recover_signs(sol, 1);
  CHECK(rec.theta[0] == 1.0);
  const Eigen::Matrix3d r = rotation_from_quat(rec.q);
  CHECK((r * ns[0] - ns[0]).norm() < 1e-6);
}

TEST_CASE("rotation-only sdp matches exhaustive sign search") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 8; ++trial) {
    const int k = 3 + static_cast<int>(rng() % 6);  // up to 8 normals
    const Eigen::Matrix3d r_true = oracle::random_pose(rng).rotation;
    std::vector<Eigen::Vector3d> refs, locals;
    std::vector<double> signs;
    for (int j = 0; j < k; ++j) {
      Eigen::Vector3d ref = oracle::random_plane(rng).normal;
      const double s = rng() % 2 ? 1.0 : -1.0;
      refs.push_back(ref);
      locals.push_back(s * (r_true.transpose() * ref));
      signs.push_back(s);
    }
    const auto [brute_theta, brute_value] = oracle::brute_force_signs(locals, refs);
    const SdpProblem p = build_rotation_only_sdp(locals, refs);
    const SdpSolution sol = solve_sdp(p);
    REQUIRE(sol.status == SdpStatus::Optimal);
    const SignRecovery rec = recover_signs(sol, k);
    for (int j = 0; j < k; ++j) {
      CHECK(rec.theta[j] == brute_theta[j]);
      CHECK(rec.theta[j] == signs[j]);  // noise-free: flips are recovered exactly
    }
    // Value-tight on consistent data. The optimal face is rank-degenerate
    // (every cross matrix has spectrum {-2,-2,2,2}), so no rank assertion.
    const double obj = (p.cost.cwiseProduct(sol.x_matrix)).sum();
    CHECK(obj == doctest::Approx(brute_value).epsilon(1e-6));
    CHECK((rotation_from_quat(rec.q) - r_true).norm() < 1e-6);

    const Certificate cert = certify(p, sol);
    CHECK(cert.rel_gap < 1e-6);

    // Gauge: negating every reference flips every recovered sign, same rotation.
    std::vector<Eigen::Vector3d> neg_refs;
    for (const auto& ref : refs) neg_refs.push_back(-ref);
    const SdpSolution sol2 = solve_sdp(build_rotation_only_sdp(locals, neg_refs));
    REQUIRE(sol2.status == SdpStatus::Optimal);
    const SignRecovery rec2 = recover_signs(sol2, k);
    for (int j = 0; j < k; ++j) CHECK(rec2.theta[j] == -rec.theta[j]);
    CHECK((rotation_from_quat(rec2.q) - rotation_from_quat(rec.q)).norm() < 1e-5);
  }
}

TEST_CASE("rotation-only feasibility of rank-1 encodings") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 6);
    std::vector<Eigen::Vector3d> refs, locals;
    for (int j = 0; j < k; ++j) {
      refs.push_back(oracle::random_plane(rng).normal);
      locals.push_back(oracle::random_plane(rng).normal);
    }
    const SdpProblem p = build_rotation_only_sdp(locals, refs);
    Eigen::Vector4d qv;
    std::normal_distribution<double> gauss(0.0, 1.0);
    qv << gauss(rng), gauss(rng), gauss(rng), gauss(rng);
    const UnitQuaternion q = UnitQuaternion::from_vector(qv);
    Eigen::VectorXd qbar(4 * (k + 1));
    qbar.head<4>() = q.wxyz;
    for (int j = 1; j <= k; ++j) qbar.segment<4>(4 * j) = (rng() % 2 ? 1.0 : -1.0) * q.wxyz;
    const Eigen::MatrixXd qq = qbar * qbar.transpose();
    for (const auto& con : p.constraints)
      CHECK(std::abs((con.a.cwiseProduct(qq)).sum() - con.b) < 1e-12);
  }
}

TEST_CASE("recover_pose round trip and perturbation") {
  std::mt19937_64 rng(31);
  const Pose pose = oracle::random_pose(rng);
  const Eigen::VectorXd x = encode_pose(pose);

  SdpSolution sol;
  sol.x_matrix = x * x.transpose();
  sol.status = SdpStatus::Optimal;
  sol.dual_y = Eigen::VectorXd::Zero(1);
  const PoseRecovery rec = recover_pose(sol);
  CHECK((rec.pose.rotation - pose.rotation).norm() < 1e-12);
  CHECK((rec.pose.translation - pose.translation).norm() < 1e-12);
  CHECK(rec.quality == doctest::Approx(0.0));

  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd noise(kLiftedPoseDim, kLiftedPoseDim);
  for (int a = 0; a < kLiftedPoseDim; ++a)
    for (int b = 0; b < kLiftedPoseDim; ++b) noise(a, b) = gauss(rng);
  sol.x_matrix = x * x.transpose() + 1e-8 * (noise * noise.transpose()).eval();
  const PoseRecovery rec2 = recover_pose(sol);
  CHECK((rec2.pose.rotation - pose.rotation).norm() < 1e-4);
  CHECK((rec2.pose.translation - pose.translation).norm() < 1e-4);
  CHECK(rec2.quality < 1e-6);

  SdpSolution degenerate;
  degenerate.x_matrix = Eigen::MatrixXd::Zero(kLiftedPoseDim, kLiftedPoseDim);
  degenerate.x_matrix(0, 0) = 1.0;  // no homogeneous component
  CHECK_THROWS_WITH(recover_pose(degenerate), "lost homogeneous scale");
}

TEST_CASE("recover_plane cases") {
  const Eigen::Vector4d b(0, 0, 1, -2);
  SdpSolution sol;
  sol.x_matrix = b * b.transpose();
  const PlaneRecovery rec = recover_plane(sol);
  CHECK((rec.plane.normal - Eigen::Vector3d(0, 0, 1)).norm() < 1e-12);
  CHECK(rec.plane.d == doctest::Approx(-2.0));

  SdpSolution iso;
  iso.x_matrix = Eigen::MatrixXd::Identity(4, 4);
  const PlaneRecovery rec2 = recover_plane(iso);
  CHECK(rec2.quality == doctest::Approx(1.0));
  const PlaneRecovery rec3 = recover_plane(iso);
  CHECK((rec2.plane.normal - rec3.plane.normal).norm() == 0.0);  // deterministic tie-break

  SdpSolution bad;
  bad.x_matrix = Eigen::MatrixXd::Zero(4, 4);
  bad.x_matrix(3, 3) = 1.0;
  CHECK_THROWS_WITH(recover_plane(bad), "degenerate normal");
}

TEST_CASE("recover_signs encode/decode and eigen-sign gauge") {
  std::mt19937_64 rng(37);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Vector4d qv;
  qv << gauss(rng), gauss(rng), gauss(rng), gauss(rng);
  const UnitQuaternion q = UnitQuaternion::from_vector(qv);
  Eigen::VectorXd qbar(12);
  qbar.head<4>() = q.wxyz;
  qbar.segment<4>(4) = q.wxyz;
  qbar.segment<4>(8) = -q.wxyz;

  SdpSolution sol;
  sol.x_matrix = qbar * qbar.transpose();
  const SignRecovery rec = recover_signs(sol, 2);
  CHECK(rec.theta[0] == 1.0);
  CHECK(rec.theta[1] == -1.0);
  CHECK((rec.q.wxyz - q.wxyz).norm() < 1e-12);

  // The negated eigenvector yields the identical output.
  sol.x_matrix = (-qbar) * (-qbar).transpose();
  const SignRecovery rec2 = recover_signs(sol, 2);
  CHECK(rec2.theta[0] == 1.0);
  CHECK(rec2.theta[1] == -1.0);
  CHECK((rec2.q.wxyz - rec.q.wxyz).norm() == 0.0);

  // Orthogonal block: ambiguous sign.
  Eigen::VectorXd bad = qbar;
  bad.segment<4>(4) << -q.wxyz[1], q.wxyz[0], -q.wxyz[3], q.wxyz[2];  // orthogonal to q
  sol.x_matrix = bad * bad.transpose();
  CHECK_THROWS(recover_signs(sol, 2));
}

TEST_SUITE_END();
