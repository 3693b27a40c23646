#pragma once

// Strictly convex QP with diagonal Hessian: primal active-set method started
// from a simplex phase-one vertex.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mgempc/lp.hpp"

namespace mgempc::lp {

/// min 1/2 sum h_j x_j^2 + c'x + c0 over the constraints of `lp`.
struct QuadraticProgram {
  LinearProgram lp;
  std::vector<double> hessian_diag;  // h_j > 0

  double objective(std::span<const double> x) const {
    double v = lp.objective(x);
    for (std::size_t j = 0; j < hessian_diag.size(); ++j) v += 0.5 * hessian_diag[j] * x[j] * x[j];
    return v;
  }
};

struct ActiveSetOptions {
  double step_tol = 1e-10;        // relative, on the search direction
  double multiplier_tol = 1e-9;   // relative to the largest gradient entry
  double feasibility_tol = 1e-9;
  int max_iterations = 20000;
};

inline Solution solve_qp(const QuadraticProgram& qp, const ActiveSetOptions& opt = {}) {
  const LinearProgram& lp = qp.lp;
  const int n = lp.num_vars();
  const int m = lp.num_rows();
  if (static_cast<int>(qp.hessian_diag.size()) != n) throw InputError("Hessian size mismatch");
  for (double h : qp.hessian_diag)
    if (!(h > 0.0) || !std::isfinite(h)) throw InputError("QP Hessian must be positive definite");

  SimplexOptions so;
  so.zero_objective = true;
  Solution start = solve_simplex(lp, so);
  Solution sol;
  sol.iterations = start.iterations;
  if (start.status != Status::optimal) {
    sol.status = start.status == Status::infeasible ? Status::infeasible : Status::numerical_failure;
    return sol;
  }
  std::vector<double> x = start.x;
  const auto& cols = lp.columns();
  const auto& rows = lp.rows();

  // working set: bound side per variable (0 free, -1 lower, +1 upper), row side likewise
  std::vector<int> vside(n, 0), rside(m, 0);
  for (int j = 0; j < n; ++j)
    if (cols[j].lower == cols[j].upper) {
      vside[j] = -1;
      x[j] = cols[j].lower;
    }
  for (int i = 0; i < m; ++i)
    if (rows[i].lower == rows[i].upper) rside[i] = -1;

  double gscale = 1.0;
  for (int j = 0; j < n; ++j) gscale = std::max(gscale, std::abs(cols[j].cost));

  std::vector<double> g(n), p(n), hinv(n);
  for (int j = 0; j < n; ++j) hinv[j] = 1.0 / qp.hessian_diag[j];

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    for (int j = 0; j < n; ++j) g[j] = qp.hessian_diag[j] * x[j] + cols[j].cost;
    std::vector<int> R;
    for (int i = 0; i < m; ++i)
      if (rside[i] != 0) R.push_back(i);
    const int r = static_cast<int>(R.size());
    // M: active rows restricted to free variables
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(r, n);
    for (int k = 0; k < r; ++k)
      for (const Term& t : rows[R[k]].terms)
        if (vside[t.var] == 0) M(k, t.var) += t.coef;
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(r);
    if (r > 0) {
      Eigen::MatrixXd K = M * Eigen::Map<Eigen::VectorXd>(hinv.data(), n).asDiagonal() * M.transpose();
      Eigen::VectorXd rhs(r);
      for (int k = 0; k < r; ++k) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += M(k, j) * hinv[j] * g[j];
        rhs(k) = -s;
      }
      Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
      lam = ldlt.solve(rhs);
      if (!lam.allFinite()) break;
    }
    double pmax = 0.0, xmax = 1.0;
    for (int j = 0; j < n; ++j) {
      if (vside[j] != 0) {
        p[j] = 0.0;
        continue;
      }
      double s = g[j];
      for (int k = 0; k < r; ++k) s += M(k, j) * lam(k);
      p[j] = -hinv[j] * s;
      pmax = std::max(pmax, std::abs(p[j]));
      xmax = std::max(xmax, std::abs(x[j]));
    }

    if (pmax <= opt.step_tol * xmax) {
      // stationary on the working set: check multiplier signs
      double worst = opt.multiplier_tol * gscale;
      int drop_row = -1, drop_var = -1;
      for (int k = 0; k < r; ++k) {
        const int i = R[k];
        if (rows[i].lower == rows[i].upper) continue;
        // row at lower needs lam <= 0, at upper lam >= 0
        const double viol = rside[i] < 0 ? lam(k) : -lam(k);
        if (viol > worst) {
          worst = viol;
          drop_row = k;
          drop_var = -1;
        }
      }
      for (int j = 0; j < n; ++j) {
        if (vside[j] == 0 || cols[j].lower == cols[j].upper) continue;
        double nu = g[j];
        for (int k = 0; k < r; ++k)
          for (const Term& t : rows[R[k]].terms)
            if (t.var == j) nu += t.coef * lam(k);
        const double viol = vside[j] < 0 ? -nu : nu;
        if (viol > worst) {
          worst = viol;
          drop_var = j;
          drop_row = -1;
        }
      }
      if (drop_row < 0 && drop_var < 0) {
        sol.status = Status::optimal;
        break;
      }
      if (drop_row >= 0) rside[R[drop_row]] = 0;
      else vside[drop_var] = 0;
      continue;
    }

    double alpha = 1.0;
    int block_var = -1, block_row = -1, block_side = 0;
    for (int j = 0; j < n; ++j) {
      if (vside[j] != 0 || p[j] == 0.0) continue;
      if (p[j] < 0.0 && std::isfinite(cols[j].lower)) {
        const double a = (cols[j].lower - x[j]) / p[j];
        if (a < alpha) { alpha = std::max(a, 0.0); block_var = j; block_row = -1; block_side = -1; }
      } else if (p[j] > 0.0 && std::isfinite(cols[j].upper)) {
        const double a = (cols[j].upper - x[j]) / p[j];
        if (a < alpha) { alpha = std::max(a, 0.0); block_var = j; block_row = -1; block_side = 1; }
      }
    }
    for (int i = 0; i < m; ++i) {
      if (rside[i] != 0) continue;
      double ap = 0.0, ax = 0.0;
      for (const Term& t : rows[i].terms) {
        ap += t.coef * p[t.var];
        ax += t.coef * x[t.var];
      }
      if (std::abs(ap) <= 1e-14 * xmax) continue;
      if (ap < 0.0 && std::isfinite(rows[i].lower)) {
        const double a = (rows[i].lower - ax) / ap;
        if (a < alpha) { alpha = std::max(a, 0.0); block_row = i; block_var = -1; block_side = -1; }
      } else if (ap > 0.0 && std::isfinite(rows[i].upper)) {
        const double a = (rows[i].upper - ax) / ap;
        if (a < alpha) { alpha = std::max(a, 0.0); block_row = i; block_var = -1; block_side = 1; }
      }
    }
    for (int j = 0; j < n; ++j) x[j] += alpha * p[j];
    if (block_var >= 0) {
      vside[block_var] = block_side;
      x[block_var] = block_side < 0 ? cols[block_var].lower : cols[block_var].upper;
    } else if (block_row >= 0) {
      rside[block_row] = block_side;
    }
  }
  sol.iterations += it;
  sol.x = x;
  sol.objective = qp.objective(x);
  sol.max_primal_residual = lp.max_violation(x);
  if (sol.status == Status::optimal && sol.max_primal_residual > 1e-6) sol.status = Status::numerical_failure;
  return sol;
}

}  // namespace mgempc::lp
