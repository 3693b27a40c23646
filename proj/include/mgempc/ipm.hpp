#pragma once

// Mehrotra predictor-corrector interior-point method on sparse normal
// equations. Used for the month-long benchmark LP where a dense tableau is
// out of reach.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mgempc/lp.hpp"

namespace mgempc::lp {

struct InteriorPointOptions {
  double tolerance = 1e-9;   // relative primal/dual infeasibility and gap
  int max_iterations = 200;
  double regularization = 1e-14;  // relative to the largest normal-matrix diagonal
};

namespace detail {

struct IpmForm {
  // min c'x, A x = b, lo <= x <= up; x = [structurals, row slacks]
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b, c, lo, up;
  int n_struct = 0;
};

inline IpmForm make_ipm_form(const LinearProgram& lp, std::vector<double>& row_scale) {
  const int n = lp.num_vars();
  const int m = lp.num_rows();
  IpmForm f;
  f.n_struct = n;
  row_scale.assign(m, 1.0);
  for (int i = 0; i < m; ++i) {
    double mx = 0.0;
    for (const Term& t : lp.rows()[i].terms) mx = std::max(mx, std::abs(t.coef));
    if (mx > 0.0) row_scale[i] = pow2_round(1.0 / mx);
  }
  std::vector<int> slack_of(m, -1);
  int nx = n;
  for (int i = 0; i < m; ++i) {
    const Row& r = lp.rows()[i];
    if (r.lower != r.upper) slack_of[i] = nx++;
  }
  std::vector<Eigen::Triplet<double>> trip;
  f.b = Eigen::VectorXd::Zero(m);
  f.c = Eigen::VectorXd::Zero(nx);
  f.lo = Eigen::VectorXd::Constant(nx, -kInf);
  f.up = Eigen::VectorXd::Constant(nx, kInf);
  for (int j = 0; j < n; ++j) {
    f.c(j) = lp.columns()[j].cost;
    f.lo(j) = lp.columns()[j].lower;
    f.up(j) = lp.columns()[j].upper;
  }
  for (int i = 0; i < m; ++i) {
    const Row& r = lp.rows()[i];
    const double s = row_scale[i];
    for (const Term& t : r.terms) trip.emplace_back(i, t.var, t.coef * s);
    if (slack_of[i] >= 0) {
      trip.emplace_back(i, slack_of[i], -1.0);
      f.lo(slack_of[i]) = r.lower * s;
      f.up(slack_of[i]) = r.upper * s;
    } else {
      f.b(i) = r.lower * s;
    }
  }
  f.A.resize(m, nx);
  f.A.setFromTriplets(trip.begin(), trip.end());
  f.A.makeCompressed();
  return f;
}

}  // namespace detail

inline Solution solve_interior_point(const LinearProgram& lp, const InteriorPointOptions& opt = {}) {
  using Eigen::VectorXd;
  std::vector<double> row_scale;
  const detail::IpmForm f = detail::make_ipm_form(lp, row_scale);
  const int nx = static_cast<int>(f.c.size());
  const int m = static_cast<int>(f.b.size());
  const double cscale = std::max(1.0, f.c.cwiseAbs().maxCoeff());
  const VectorXd c = f.c / cscale;

  std::vector<char> has_lo(nx), has_up(nx);
  VectorXd x(nx), z = VectorXd::Zero(nx), w = VectorXd::Zero(nx), y = VectorXd::Zero(m);
  for (int j = 0; j < nx; ++j) {
    has_lo[j] = std::isfinite(f.lo(j));
    has_up[j] = std::isfinite(f.up(j));
    if (has_lo[j] && has_up[j]) x(j) = 0.5 * (f.lo(j) + f.up(j));
    else if (has_lo[j]) x(j) = f.lo(j) + 1.0;
    else if (has_up[j]) x(j) = f.up(j) - 1.0;
    else x(j) = 0.0;
    if (has_lo[j]) z(j) = 1.0;
    if (has_up[j]) w(j) = 1.0;
  }
  int nbound = 0;
  for (int j = 0; j < nx; ++j) nbound += has_lo[j] + has_up[j];

  Eigen::SparseMatrix<double> At = f.A.transpose();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  bool analyzed = false;

  Solution sol;
  sol.status = Status::numerical_failure;
  const double bnorm = 1.0 + f.b.norm();
  const double cnorm = 1.0 + c.norm();

  VectorXd g(nx), t(nx), dinv(nx), rb(m), rc(nx);
  auto gaps = [&]() {
    for (int j = 0; j < nx; ++j) {
      g(j) = has_lo[j] ? x(j) - f.lo(j) : 1.0;
      t(j) = has_up[j] ? f.up(j) - x(j) : 1.0;
    }
  };
  auto step_to_boundary = [&](const VectorXd& v, const VectorXd& dv, const std::vector<char>& mask) {
    double a = 1.0;
    for (int j = 0; j < nx; ++j)
      if (mask[j] && dv(j) < 0.0) a = std::min(a, -v(j) / dv(j));
    return a;
  };
  std::vector<char> mask_lo(has_lo), mask_up(has_up);

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    gaps();
    rb = f.b - f.A * x;
    rc = c - At * y - z + w;
    double mu = 0.0;
    for (int j = 0; j < nx; ++j) {
      if (has_lo[j]) mu += g(j) * z(j);
      if (has_up[j]) mu += t(j) * w(j);
    }
    mu = nbound > 0 ? mu / nbound : 0.0;
    double pobj = c.dot(x), dobj = f.b.dot(y);
    for (int j = 0; j < nx; ++j) {
      if (has_lo[j]) dobj += f.lo(j) * z(j);
      if (has_up[j]) dobj -= f.up(j) * w(j);
    }
    const bool conv = rb.norm() / bnorm < opt.tolerance && rc.norm() / cnorm < opt.tolerance &&
                      std::abs(pobj - dobj) / (1.0 + std::abs(pobj)) < opt.tolerance;
    if (conv) {
      sol.status = Status::optimal;
      break;
    }
    for (int j = 0; j < nx; ++j) {
      double d = 1e-10;
      if (has_lo[j]) d += z(j) / g(j);
      if (has_up[j]) d += w(j) / t(j);
      dinv(j) = 1.0 / d;
    }
    const Eigen::SparseMatrix<double> M0 = f.A * dinv.asDiagonal() * At;
    double dmax = 1.0;
    for (int i = 0; i < m; ++i) dmax = std::max(dmax, M0.coeff(i, i));
    bool factored = false;
    for (double reg = opt.regularization; reg < 1e-4 && !factored; reg *= 100.0) {
      Eigen::SparseMatrix<double> M = M0;
      for (int i = 0; i < m; ++i) M.coeffRef(i, i) += reg * dmax;
      if (!analyzed) {
        ldlt.analyzePattern(M);
        analyzed = true;
      }
      ldlt.factorize(M);
      factored = ldlt.info() == Eigen::Success;
    }
    if (!factored) {
      // accept a nearly converged iterate when the normal matrix degenerates
      if (rb.norm() / bnorm < 1e-7 && rc.norm() / cnorm < 1e-7 &&
          std::abs(pobj - dobj) / (1.0 + std::abs(pobj)) < 1e-7)
        sol.status = Status::optimal;
      break;
    }

    auto direction = [&](const VectorXd& rz, const VectorXd& rw, VectorXd& dx, VectorXd& dy,
                         VectorXd& dz, VectorXd& dw) {
      VectorXd rhat = rc;
      for (int j = 0; j < nx; ++j) {
        if (has_lo[j]) rhat(j) -= rz(j) / g(j);
        if (has_up[j]) rhat(j) += rw(j) / t(j);
      }
      VectorXd tmp = dinv.cwiseProduct(rhat);
      dy = ldlt.solve(rb + f.A * tmp);
      dx = dinv.cwiseProduct(At * dy - rhat);
      dz = VectorXd::Zero(nx);
      dw = VectorXd::Zero(nx);
      for (int j = 0; j < nx; ++j) {
        if (has_lo[j]) dz(j) = (rz(j) - z(j) * dx(j)) / g(j);
        if (has_up[j]) dw(j) = (rw(j) + w(j) * dx(j)) / t(j);
      }
    };

    VectorXd rz(nx), rw(nx);
    for (int j = 0; j < nx; ++j) {
      rz(j) = has_lo[j] ? -g(j) * z(j) : 0.0;
      rw(j) = has_up[j] ? -t(j) * w(j) : 0.0;
    }
    VectorXd dx, dy, dz, dw;
    direction(rz, rw, dx, dy, dz, dw);
    double ap = std::min(step_to_boundary(g, dx, mask_lo), step_to_boundary(t, -dx, mask_up));
    double ad = std::min(step_to_boundary(z, dz, mask_lo), step_to_boundary(w, dw, mask_up));
    double mu_aff = 0.0;
    for (int j = 0; j < nx; ++j) {
      if (has_lo[j]) mu_aff += (g(j) + ap * dx(j)) * (z(j) + ad * dz(j));
      if (has_up[j]) mu_aff += (t(j) - ap * dx(j)) * (w(j) + ad * dw(j));
    }
    mu_aff = nbound > 0 ? mu_aff / nbound : 0.0;
    const double sigma = mu > 0.0 ? std::pow(mu_aff / mu, 3) : 0.0;
    for (int j = 0; j < nx; ++j) {
      if (has_lo[j]) rz(j) = sigma * mu - g(j) * z(j) - dx(j) * dz(j);
      if (has_up[j]) rw(j) = sigma * mu - t(j) * w(j) + dx(j) * dw(j);
    }
    direction(rz, rw, dx, dy, dz, dw);
    ap = std::min(step_to_boundary(g, dx, mask_lo), step_to_boundary(t, -dx, mask_up));
    ad = std::min(step_to_boundary(z, dz, mask_lo), step_to_boundary(w, dw, mask_up));
    ap = std::min(1.0, 0.995 * ap);
    ad = std::min(1.0, 0.995 * ad);
    x += ap * dx;
    y += ad * dy;
    z += ad * dz;
    w += ad * dw;
    if (!x.allFinite() || !y.allFinite()) break;
  }
  sol.iterations = it;
  sol.x.assign(x.data(), x.data() + f.n_struct);
  sol.objective = lp.objective(sol.x);
  sol.max_primal_residual = lp.max_violation(sol.x);
  return sol;
}

}  // namespace mgempc::lp
