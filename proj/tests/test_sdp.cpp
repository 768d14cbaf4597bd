#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pa/sdp.hpp"

using namespace pa;

TEST_SUITE_BEGIN("sdp");

namespace {

SdpProblem scalar_problem() {
  SdpProblem p;
  p.dim = 1;
  p.cost = Eigen::MatrixXd::Constant(1, 1, 3.0);
  p.constraints.push_back({Eigen::MatrixXd::Constant(1, 1, 1.0), 2.0});
  return p;
}

SdpProblem trace_problem() {
  SdpProblem p;
  p.dim = 2;
  p.cost = Eigen::Vector2d(1.0, -1.0).asDiagonal();
  p.constraints.push_back({Eigen::MatrixXd::Identity(2, 2), 1.0});
  return p;
}

}  // namespace

TEST_CASE("scalar sdp") {
  const SdpSolution sol = solve_sdp(scalar_problem());
  REQUIRE(sol.status == SdpStatus::Optimal);
  CHECK(sol.x_matrix(0, 0) == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(3.0 * sol.x_matrix(0, 0) == doctest::Approx(6.0).epsilon(1e-7));
}

TEST_CASE("unit-trace sdp matches grid brute force") {
  const SdpProblem p = trace_problem();
  const SdpSolution sol = solve_sdp(p);
  REQUIRE(sol.status == SdpStatus::Optimal);

  // Brute force: X = [x z; z 1-x], PSD iff z^2 <= x(1-x).
  double best = std::numeric_limits<double>::infinity();
  for (int xi = 0; xi <= 400; ++xi) {
    const double x = xi / 400.0;
    const double zmax = std::sqrt(std::max(0.0, x * (1.0 - x)));
    for (int zi = -50; zi <= 50; ++zi) {
      const double z = zmax * zi / 50.0;
      best = std::min(best, x - (1.0 - x) + 0.0 * z);
    }
  }
  const double obj = (p.cost.cwiseProduct(sol.x_matrix)).sum();
  CHECK(obj == doctest::Approx(best).epsilon(1e-6));
  CHECK(sol.x_matrix(0, 0) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(sol.x_matrix(1, 1) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("optimal solutions satisfy the advertised invariants") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const SdpSettings settings;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const int m = 1 + static_cast<int>(rng() % 3);
    SdpProblem p;
    p.dim = n;
    Eigen::MatrixXd c(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) c(a, b) = gauss(rng);
    p.cost = 0.5 * (c + c.transpose());
    for (int k = 0; k < m; ++k) {
      Eigen::MatrixXd a(n, n);
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) a(r, s) = gauss(rng);
      a = (0.5 * (a + a.transpose())).eval();
      // Feasible by construction: b_k = <A_k, I>.
      p.constraints.push_back({a, a.trace()});
    }
    const SdpSolution sol = solve_sdp(p, settings);
    if (sol.status != SdpStatus::Optimal) continue;  // unbounded instances end as MaxIter

    CHECK(sol.primal_feas <= settings.feas_tol * 10);
    CHECK(sol.rel_gap <= settings.rel_gap_tol * 10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sol.x_matrix);
    CHECK(eig.eigenvalues()[0] >= -settings.feas_tol * sol.x_matrix.trace());

    // Weak duality on the returned pair.
    const double pobj = (p.cost.cwiseProduct(sol.x_matrix)).sum();
    double dobj = 0.0;
    for (std::size_t k = 0; k < p.constraints.size(); ++k)
      dobj += sol.dual_y[static_cast<int>(k)] * p.constraints[k].b;
    CHECK(pobj - dobj >= -settings.feas_tol * (1.0 + std::abs(pobj)) * 100);
  }
}

TEST_CASE("determinism") {
  const SdpProblem p = trace_problem();
  const SdpSolution a = solve_sdp(p);
  const SdpSolution b = solve_sdp(p);
  CHECK((a.x_matrix - b.x_matrix).norm() == 0.0);
  CHECK((a.dual_y - b.dual_y).norm() == 0.0);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("certify") {
  const SdpProblem p = trace_problem();

  SdpSolution hand;
  hand.x_matrix = Eigen::Vector2d(0.0, 1.0).asDiagonal();
  hand.dual_y = Eigen::VectorXd::Constant(1, -1.0);
  hand.status = SdpStatus::Optimal;
  const Certificate cert = certify(p, hand);
  CHECK(cert.dual_feas == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cert.primal_feas == doctest::Approx(0.0));
  CHECK(cert.rel_gap == doctest::Approx(0.0));
  CHECK(cert.corank1);

  // Injected constraint violation shows up as primal infeasibility.
  SdpSolution bad = hand;
  bad.x_matrix = Eigen::Vector2d(0.0, 1.05).asDiagonal();
  const Certificate cert2 = certify(p, bad);
  CHECK(cert2.primal_feas == doctest::Approx(0.05 / 2.0).epsilon(1e-9));
}

TEST_CASE("round_rank1") {
  Eigen::Vector2d u(1.0, 2.0);
  auto [v, ratio] = round_rank1(u * u.transpose());
  CHECK(ratio == doctest::Approx(0.0));
  CHECK(std::abs(v.dot(u)) == doctest::Approx(u.squaredNorm()).epsilon(1e-12));

  auto [v2, ratio2] = round_rank1(Eigen::MatrixXd::Identity(2, 2));
  CHECK(ratio2 == doctest::Approx(1.0));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd w(5);
  for (int k = 0; k < 5; ++k) w[k] = gauss(rng);
  Eigen::MatrixXd noise(5, 5);
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) noise(a, b) = gauss(rng);
  const Eigen::MatrixXd x =
      w * w.transpose() + 1e-8 * (noise * noise.transpose()).eval();
  CHECK(round_rank1(x).second < 1e-6);

  CHECK_THROWS_WITH(round_rank1(Eigen::MatrixXd::Zero(3, 3)), "zero solution");
}

TEST_CASE("infeasible problem is not reported optimal") {
  SdpProblem p;
  p.dim = 1;
  p.cost = Eigen::MatrixXd::Constant(1, 1, 1.0);
  p.constraints.push_back({Eigen::MatrixXd::Constant(1, 1, 1.0), -1.0});
  const SdpSolution sol = solve_sdp(p);
  CHECK(sol.status != SdpStatus::Optimal);
}

TEST_CASE("linearly dependent constraints are pruned, not fatal") {
  SdpProblem p = trace_problem();
  p.constraints.push_back({2.0 * Eigen::MatrixXd::Identity(2, 2), 2.0});  // duplicate
  const SdpSolution sol = solve_sdp(p);
  REQUIRE(sol.status == SdpStatus::Optimal);
  REQUIRE(sol.pruned_constraints.size() == 1);
  CHECK(sol.pruned_constraints[0] == 1);
  CHECK(sol.dual_y[1] == 0.0);
  CHECK(sol.x_matrix(1, 1) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("problem validation") {
  SdpProblem p = trace_problem();
  p.cost(0, 1) = 0.5;  // asymmetric
  CHECK_THROWS(p.validate());

  SdpProblem q;
  q.dim = 65;
  q.cost = Eigen::MatrixXd::Zero(65, 65);
  q.constraints.push_back({Eigen::MatrixXd::Zero(65, 65), 0.0});
  CHECK_THROWS(q.validate());
}

TEST_SUITE_END();
