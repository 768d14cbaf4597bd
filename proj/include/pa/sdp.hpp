#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace pa {

struct SdpConstraint {
  Eigen::MatrixXd a;  // symmetric dim x dim
  double b = 0.0;
};

// Standard-form SDP: minimize <C,X> s.t. <A_k,X> = b_k, X >= 0.
// Dense blocks up to dim 64; larger problems are rejected.
struct SdpProblem {
  int dim = 0;
  Eigen::MatrixXd cost;
  std::vector<SdpConstraint> constraints;

  void validate() const;  // throws on asymmetry / empty constraints / dim > 64
};

struct SdpSettings {
  double rel_gap_tol = 1e-8;
  double feas_tol = 1e-8;
  int max_iter = 100;
};

enum class SdpStatus { Optimal, MaxIter, NumericalFailure, Infeasible };

struct SdpSolution {
  Eigen::MatrixXd x_matrix;
  Eigen::VectorXd dual_y;  // one multiplier per *original* constraint (0 for pruned)
  double rel_gap = 0.0;
  SdpStatus status = SdpStatus::NumericalFailure;
  int iterations = 0;
  double primal_feas = 0.0;   // max_k |<A_k,X>-b_k| / (1+|b_k|)
  double dual_resid = 0.0;    // |C - S - sum y_k A_k|_F / (1+|C|_F)
  std::vector<int> pruned_constraints;  // indices dropped as linearly dependent
};

SdpSolution solve_sdp(const SdpProblem& problem, const SdpSettings& settings = {});

// Recomputed from (problem, X, y) only; never from solver internals.
struct Certificate {
  double primal_feas = 0.0;
  double dual_feas = 0.0;   // min eigenvalue of C - sum y_k A_k
  double rel_gap = 0.0;
  double rank_ratio = 0.0;  // lambda2 / lambda1 of X
  bool corank1 = false;     // rank_ratio < 1e-6
};

Certificate certify(const SdpProblem& problem, const SdpSolution& solution);

// Top eigenpair extraction: returns (sqrt(lambda1) v1, lambda2/lambda1).
std::pair<Eigen::VectorXd, double> round_rank1(const Eigen::MatrixXd& x_matrix);

}  // namespace pa
