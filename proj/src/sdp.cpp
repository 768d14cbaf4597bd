#include "pa/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pa {

namespace {

constexpr int kMaxDim = 64;

struct Triplet {
  int r, c;
  double v;
};

// <A, Z> for symmetric A given its upper-triangle triplets.
double sparse_dot(const std::vector<Triplet>& a, const Eigen::MatrixXd& z) {
  double s = 0.0;
  for (const auto& t : a) s += t.v * (t.r == t.c ? z(t.r, t.c) : 2.0 * z(t.r, t.c));
  return s;
}

std::vector<Triplet> upper_triplets(const Eigen::MatrixXd& a) {
  std::vector<Triplet> out;
  const int n = static_cast<int>(a.rows());
  for (int r = 0; r < n; ++r)
    for (int c = r; c < n; ++c)
      if (a(r, c) != 0.0) out.push_back({r, c, a(r, c)});
  return out;
}

Eigen::VectorXd svec(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  Eigen::VectorXd v(n * (n + 1) / 2);
  int k = 0;
  const double s2 = std::sqrt(2.0);
  for (int r = 0; r < n; ++r) {
    v[k++] = a(r, r);
    for (int c = r + 1; c < n; ++c) v[k++] = s2 * a(r, c);
  }
  return v;
}

// Largest step alpha with P + alpha*D >= 0, given the Cholesky factor of P.
double max_step(const Eigen::LLT<Eigen::MatrixXd>& llt_p, const Eigen::MatrixXd& d) {
  const Eigen::MatrixXd l = llt_p.matrixL();
  Eigen::MatrixXd b = l.triangularView<Eigen::Lower>().solve(d);
  b = l.triangularView<Eigen::Lower>().solve(b.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (b + b.transpose()),
                                                     Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues()[0];
  if (lmin >= -1e-300) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

}  // namespace

void SdpProblem::validate() const {
  if (dim <= 0) throw std::runtime_error("sdp: nonpositive dimension");
  if (dim > kMaxDim) throw std::runtime_error("sdp: dimension exceeds supported maximum (64)");
  if (cost.rows() != dim || cost.cols() != dim) throw std::runtime_error("sdp: cost size mismatch");
  if ((cost - cost.transpose()).norm() > 1e-12 * std::max(1.0, cost.norm()))
    throw std::runtime_error("sdp: cost not symmetric");
  if (constraints.empty()) throw std::runtime_error("sdp: no constraints");
  for (const auto& c : constraints) {
    if (c.a.rows() != dim || c.a.cols() != dim)
      throw std::runtime_error("sdp: constraint size mismatch");
    if ((c.a - c.a.transpose()).norm() > 1e-12 * std::max(1.0, c.a.norm()))
      throw std::runtime_error("sdp: constraint not symmetric");
  }
}

SdpSolution solve_sdp(const SdpProblem& problem, const SdpSettings& settings) {
  problem.validate();
  const int n = problem.dim;
  const int m_all = static_cast<int>(problem.constraints.size());

  SdpSolution sol;
  sol.x_matrix = Eigen::MatrixXd::Zero(n, n);
  sol.dual_y = Eigen::VectorXd::Zero(m_all);

  // Prune linearly dependent constraints by an ordered Gram-Schmidt sweep
  // over svec images (rank tolerance 1e-10 relative). Earlier constraints win.
  std::vector<int> active;
  {
    std::vector<Eigen::VectorXd> basis;
    for (int k = 0; k < m_all; ++k) {
      Eigen::VectorXd v = svec(0.5 * (problem.constraints[k].a +
                                      problem.constraints[k].a.transpose()));
      const double orig = v.norm();
      if (orig == 0.0) {
        sol.pruned_constraints.push_back(k);
        continue;
      }
      for (const auto& u : basis) v -= u.dot(v) * u;
      // Second pass stabilizes near-dependent directions.
      for (const auto& u : basis) v -= u.dot(v) * u;
      if (v.norm() > 1e-10 * orig) {
        basis.push_back(v / v.norm());
        active.push_back(k);
      } else {
        sol.pruned_constraints.push_back(k);
      }
    }
  }
  const int m = static_cast<int>(active.size());
  if (m == 0) throw std::runtime_error("sdp: all constraints degenerate");

  // Scale data to unit Frobenius magnitude.
  const double s_c = std::max(1.0, problem.cost.norm());
  Eigen::MatrixXd c_mat = 0.5 * (problem.cost + problem.cost.transpose()) / s_c;
  std::vector<Eigen::MatrixXd> a_mats(m);
  std::vector<std::vector<Triplet>> a_trip(m);
  Eigen::VectorXd b_vec(m), a_scale(m);
  for (int k = 0; k < m; ++k) {
    const auto& con = problem.constraints[active[k]];
    a_scale[k] = con.a.norm();
    a_mats[k] = 0.5 * (con.a + con.a.transpose()) / a_scale[k];
    a_trip[k] = upper_triplets(a_mats[k]);
    b_vec[k] = con.b / a_scale[k];
  }

  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double tau_p = sqrt_n * std::max(1.0, b_vec.cwiseAbs().maxCoeff());
  Eigen::MatrixXd x = tau_p * Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd s = sqrt_n * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

  // Best iterate seen so far, by worst violated criterion. Noise-free
  // instances have optimum 0, where the relative gap turns into an absolute
  // demand at the floating-point floor; when the path stalls there we return
  // the best iterate instead of the broken-down one.
  Eigen::MatrixXd best_x = x;
  Eigen::MatrixXd best_s = s;
  Eigen::VectorXd best_y = y;
  double best_merit = std::numeric_limits<double>::infinity();

  auto finalize = [&](SdpStatus status, int iters) {
    sol.status = status;
    sol.iterations = iters;
    if (status != SdpStatus::Optimal && best_merit < std::numeric_limits<double>::infinity()) {
      x = best_x;
      s = best_s;
      y = best_y;
    }
    sol.x_matrix = 0.5 * (x + x.transpose());
    for (int k = 0; k < m; ++k) sol.dual_y[active[k]] = y[k] * s_c / a_scale[k];
    // Report metrics on the original data.
    double pf = 0.0;
    for (int k = 0; k < m_all; ++k) {
      const auto& con = problem.constraints[k];
      pf = std::max(pf, std::abs((con.a.cwiseProduct(sol.x_matrix)).sum() - con.b) /
                            (1.0 + std::abs(con.b)));
    }
    sol.primal_feas = pf;
    Eigen::MatrixXd dual_slack = problem.cost;
    for (int k = 0; k < m_all; ++k) dual_slack -= sol.dual_y[k] * problem.constraints[k].a;
    sol.dual_resid = (dual_slack - s_c * s).norm() / (1.0 + problem.cost.norm());
    const double pobj = (problem.cost.cwiseProduct(sol.x_matrix)).sum();
    double dobj = 0.0;
    for (int k = 0; k < m_all; ++k) dobj += sol.dual_y[k] * problem.constraints[k].b;
    sol.rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
    return sol;
  };

  const double tau_step = 0.98;
  int stall = 0;
  double init_pinf = -1.0;

  for (int iter = 0; iter < settings.max_iter; ++iter) {
    // Residuals in scaled units.
    Eigen::VectorXd rp(m);
    for (int k = 0; k < m; ++k) rp[k] = b_vec[k] - sparse_dot(a_trip[k], x);
    Eigen::MatrixXd rd = c_mat - s;
    for (int k = 0; k < m; ++k) rd -= y[k] * a_mats[k];

    // Convergence metrics in original units.
    double pinf = 0.0;
    for (int k = 0; k < m; ++k)
      pinf = std::max(pinf, std::abs(rp[k]) * a_scale[k] / (1.0 + std::abs(b_vec[k] * a_scale[k])));
    const double dinf = rd.norm() * s_c / (1.0 + problem.cost.norm());
    const double pobj = s_c * (c_mat.cwiseProduct(x)).sum();
    double dobj = 0.0;
    for (int k = 0; k < m; ++k) dobj += s_c * y[k] * b_vec[k];
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
    if (init_pinf < 0.0) init_pinf = pinf;

    if (pinf <= settings.feas_tol && dinf <= settings.feas_tol && gap <= settings.rel_gap_tol)
      return finalize(SdpStatus::Optimal, iter);

    if (x.allFinite() && s.allFinite() && y.allFinite()) {
      const double merit = std::max({pinf, dinf, gap});
      if (merit < best_merit) {
        best_merit = merit;
        best_x = x;
        best_s = s;
        best_y = y;
      }
    } else {
      return finalize(best_merit < 1e-2 ? SdpStatus::MaxIter : SdpStatus::NumericalFailure, iter);
    }

    const double mu = (x.cwiseProduct(s)).sum() / n;

    // Nesterov-Todd scaling point: W = G G' with W S W = X, and the scaled
    // iterates G^-1 X G^-T = G' S G = D both diagonal.
    auto degrade = [&](int it) {
      return finalize(best_merit < 1e-2 ? SdpStatus::MaxIter : SdpStatus::NumericalFailure, it);
    };
    Eigen::LLT<Eigen::MatrixXd> llt_x(x);
    Eigen::LLT<Eigen::MatrixXd> llt_s(s);
    if (llt_x.info() != Eigen::Success || llt_s.info() != Eigen::Success) return degrade(iter);
    const Eigen::MatrixXd lx = llt_x.matrixL();
    Eigen::MatrixXd k_mat = lx.transpose() * s * lx;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_k(0.5 * (k_mat + k_mat.transpose()));
    if (eig_k.eigenvalues()[0] <= 0.0) return degrade(iter);
    const Eigen::VectorXd lam = eig_k.eigenvalues();
    const Eigen::MatrixXd g = lx * eig_k.eigenvectors() *
                              lam.array().pow(-0.25).matrix().asDiagonal();
    Eigen::MatrixXd g_inv = eig_k.eigenvectors().transpose() *
                            lx.triangularView<Eigen::Lower>()
                                .solve(Eigen::MatrixXd::Identity(n, n));
    g_inv = lam.array().pow(0.25).matrix().asDiagonal() * g_inv;
    const Eigen::MatrixXd w = g * g.transpose();
    const Eigen::VectorXd d_nt = lam.array().sqrt();

    // Schur complement M_kl = <A_k, W A_l W>, SPD for independent constraints.
    std::vector<Eigen::MatrixXd> waw(m);
    for (int k = 0; k < m; ++k) waw[k] = w * a_mats[k] * w;
    Eigen::MatrixXd schur(m, m);
    for (int k = 0; k < m; ++k)
      for (int l = k; l < m; ++l) {
        const double v = sparse_dot(a_trip[k], waw[l]);
        schur(k, l) = v;
        schur(l, k) = v;
      }
    Eigen::LLT<Eigen::MatrixXd> llt_m(schur);
    if (llt_m.info() != Eigen::Success) {
      schur.diagonal().array() += 1e-13 * std::max(1.0, schur.trace() / m);
      llt_m.compute(schur);
      if (llt_m.info() != Eigen::Success) return degrade(iter);
    }

    const Eigen::MatrixXd wrdw = w * rd * w;
    Eigen::VectorXd a_dot_wrdw(m);
    for (int k = 0; k < m; ++k) a_dot_wrdw[k] = sparse_dot(a_trip[k], wrdw);

    // Direction solve for a given complementarity right-hand side Rc:
    //   dX + W dS W = Rc,  dS = Rd - sum dy_k A_k,  <A_k, dX> = rp_k.
    auto solve_direction = [&](const Eigen::MatrixXd& rc, Eigen::MatrixXd& dx,
                               Eigen::MatrixXd& ds, Eigen::VectorXd& dy) {
      Eigen::VectorXd h(m);
      for (int k = 0; k < m; ++k) h[k] = rp[k] - sparse_dot(a_trip[k], rc) + a_dot_wrdw[k];
      dy = llt_m.solve(h);
      dy += llt_m.solve(h - schur * dy);  // one refinement step for the endgame
      ds = rd;
      for (int k = 0; k < m; ++k) ds -= dy[k] * a_mats[k];
      dx = rc - w * ds * w;
      dx = 0.5 * (dx + dx.transpose()).eval();
    };

    // Predictor (affine scaling).
    Eigen::MatrixXd dx_aff, ds_aff;
    Eigen::VectorXd dy_aff;
    solve_direction(-x, dx_aff, ds_aff, dy_aff);
    const double ap_aff = std::min(1.0, max_step(llt_x, dx_aff));
    const double ad_aff = std::min(1.0, max_step(llt_s, ds_aff));
    const double mu_aff =
        std::max(0.0, ((x + ap_aff * dx_aff).cwiseProduct(s + ad_aff * ds_aff)).sum() / n);
    double sigma = std::pow(mu_aff / mu, 3);
    sigma = std::clamp(sigma, 0.0, 1.0);

    // Mehrotra corrector in the scaled space where both iterates equal diag(d_nt).
    const Eigen::MatrixXd dxh = g_inv * dx_aff * g_inv.transpose();
    const Eigen::MatrixXd dsh = g.transpose() * ds_aff * g;
    const Eigen::MatrixXd cross = dxh * dsh;
    Eigen::MatrixXd rhat(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = -0.5 * (cross(i, j) + cross(j, i));
        if (i == j) v += sigma * mu - d_nt[i] * d_nt[i];
        rhat(i, j) = v * 2.0 / (d_nt[i] + d_nt[j]);
      }
    const Eigen::MatrixXd rc = g * rhat * g.transpose();

    Eigen::MatrixXd dx, ds;
    Eigen::VectorXd dy;
    solve_direction(rc, dx, ds, dy);
    double ap = std::min(1.0, tau_step * max_step(llt_x, dx));
    double ad = std::min(1.0, tau_step * max_step(llt_s, ds));

    if (ap < 1e-7 && ad < 1e-7) {
      if (++stall >= 3) {
        if (pinf > std::max(10.0 * settings.feas_tol, 0.5 * init_pinf) && pinf >= dinf)
          return finalize(SdpStatus::Infeasible, iter);
        return degrade(iter);
      }
    } else {
      stall = 0;
    }

    x += ap * dx;
    x = 0.5 * (x + x.transpose()).eval();
    s += ad * ds;
    s = 0.5 * (s + s.transpose()).eval();
    y += ad * dy;
  }

  return finalize(SdpStatus::MaxIter, settings.max_iter);
}

Certificate certify(const SdpProblem& problem, const SdpSolution& solution) {
  Certificate cert;
  const Eigen::MatrixXd& x = solution.x_matrix;
  double pf = 0.0;
  for (std::size_t k = 0; k < problem.constraints.size(); ++k) {
    const auto& con = problem.constraints[k];
    pf = std::max(pf,
                  std::abs((con.a.cwiseProduct(x)).sum() - con.b) / (1.0 + std::abs(con.b)));
  }
  cert.primal_feas = pf;

  Eigen::MatrixXd h = problem.cost;
  for (std::size_t k = 0; k < problem.constraints.size(); ++k)
    h -= solution.dual_y[static_cast<int>(k)] * problem.constraints[k].a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_h(0.5 * (h + h.transpose()),
                                                       Eigen::EigenvaluesOnly);
  cert.dual_feas = eig_h.eigenvalues()[0];

  const double pobj = (problem.cost.cwiseProduct(x)).sum();
  double dobj = 0.0;
  for (std::size_t k = 0; k < problem.constraints.size(); ++k)
    dobj += solution.dual_y[static_cast<int>(k)] * problem.constraints[k].b;
  cert.rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_x(0.5 * (x + x.transpose()),
                                                       Eigen::EigenvaluesOnly);
  const int n = static_cast<int>(x.rows());
  const double l1 = eig_x.eigenvalues()[n - 1];
  const double l2 = n > 1 ? std::max(0.0, eig_x.eigenvalues()[n - 2]) : 0.0;
  cert.rank_ratio = l1 > 0.0 ? l2 / l1 : 1.0;
  cert.corank1 = cert.rank_ratio < 1e-6;
  return cert;
}

std::pair<Eigen::VectorXd, double> round_rank1(const Eigen::MatrixXd& x_matrix) {
  const int n = static_cast<int>(x_matrix.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (x_matrix + x_matrix.transpose()));
  const double l1 = eig.eigenvalues()[n - 1];
  if (!(l1 > 0.0)) throw std::runtime_error("zero solution");
  const double l2 = n > 1 ? std::max(0.0, eig.eigenvalues()[n - 2]) : 0.0;
  // Tied top eigenvalues: deterministic tie-break on the lowest index.
  int pick = n - 1;
  while (pick > 0 && eig.eigenvalues()[pick - 1] >= l1 * (1.0 - 1e-9)) --pick;
  Eigen::VectorXd v = std::sqrt(l1) * eig.eigenvectors().col(pick);
  return {v, l2 / l1};
}

}  // namespace pa
