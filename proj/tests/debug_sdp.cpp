// Scratch diagnostics for interior-point behavior on builder instances.
#include <cstdio>
#include <random>

#include "oracles.hpp"
#include "pa/relax.hpp"
#include "pa/sim.hpp"

using namespace pa;

int main(int argc, char** argv) {
  const int mode = argc > 1 ? std::atoi(argv[1]) : 0;

  if (mode == 0) {
    SceneSpec spec;
    spec.m = 2;
    spec.n = 8;
    spec.points_per_obs = 25;
    spec.seed = 42;
    Scene s = generate_scene(spec);
    const SdpProblem p = build_pose_sdp(0, s.gt_planes, s.graph);
    std::printf("dim=%d m=%zu costnorm=%.3e\n", p.dim, p.constraints.size(), p.cost.norm());
    SdpSettings st;
    const SdpSolution sol = solve_sdp(p, st);
    std::printf("status=%d iters=%d relgap=%.3e pfeas=%.3e dresid=%.3e pruned=%zu\n",
                (int)sol.status, sol.iterations, sol.rel_gap, sol.primal_feas, sol.dual_resid,
                sol.pruned_constraints.size());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sol.x_matrix);
    std::printf("X eigs:");
    for (int i = 0; i < p.dim; ++i) std::printf(" %.3e", eig.eigenvalues()[i]);
    std::printf("\n");
    const Eigen::VectorXd xgt = encode_pose(s.gt_poses[0]);
    std::printf("obj(X)=%.6e obj(gt)=%.6e\n", (p.cost.cwiseProduct(sol.x_matrix)).sum(),
                xgt.dot(p.cost * xgt));
  } else if (mode == 2) {
    ObservationGraph g = ObservationGraph::from_points(
        1, 1, {{0, 0, {0, 0, 1}}, {0, 0, {1, 0, 1}}, {0, 0, {0, 1, 1}}, {0, 0, {3, 2, 1}}});
    const SdpProblem p = build_plane_sdp(0, {Pose{}}, g);
    SdpSettings st;
    st.rel_gap_tol = 1e-11;
    st.feas_tol = 1e-11;
    const SdpSolution sol = solve_sdp(p, st);
    std::printf("status=%d iters=%d relgap=%.3e pfeas=%.3e dresid=%.3e\n", (int)sol.status,
                sol.iterations, sol.rel_gap, sol.primal_feas, sol.dual_resid);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sol.x_matrix);
    std::printf("X eigs: %.3e %.3e %.3e %.3e\n", eig.eigenvalues()[0], eig.eigenvalues()[1],
                eig.eigenvalues()[2], eig.eigenvalues()[3]);
    std::printf("obj=%.6e\n", (p.cost.cwiseProduct(sol.x_matrix)).sum());
  } else if (mode == 1) {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 8; ++trial) {
      const int k = 3 + static_cast<int>(rng() % 6);
      const Eigen::Matrix3d r_true = oracle::random_pose(rng).rotation;
      std::vector<Eigen::Vector3d> refs, locals;
      std::vector<double> signs;
      for (int j = 0; j < k; ++j) {
        Eigen::Vector3d ref = oracle::random_plane(rng).normal;
        const double sg = rng() % 2 ? 1.0 : -1.0;
        refs.push_back(ref);
        locals.push_back(sg * (r_true.transpose() * ref));
        signs.push_back(sg);
      }
      const auto [bt, bv] = oracle::brute_force_signs(locals, refs);
      const SdpProblem p = build_rotation_only_sdp(locals, refs);
      const SdpSolution sol = solve_sdp(p);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sol.x_matrix);
      std::printf("trial=%d k=%d status=%d obj=%.9e brute=%.9e l1=%.3e l2=%.3e l3=%.3e\n", trial,
                  k, (int)sol.status, (p.cost.cwiseProduct(sol.x_matrix)).sum(), bv,
                  eig.eigenvalues()[p.dim - 1], eig.eigenvalues()[p.dim - 2],
                  eig.eigenvalues()[p.dim - 3]);
    }
  }
  return 0;
}
