#pragma once

// Bounded-variable LP model and a dense primal simplex on a compact tableau.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mgempc/error.hpp"

namespace mgempc::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Term {
  int var;
  double coef;
};

struct Column {
  std::string name;
  double lower;
  double upper;
  double cost;
};

struct Row {
  std::string name;
  std::vector<Term> terms;
  double lower;
  double upper;
};

/// min c'x + c0  s.t.  row.lower <= a'x <= row.upper,  lower <= x <= upper
class LinearProgram {
 public:
  int add_variable(std::string name, double lower, double upper, double cost = 0.0) {
    if (std::isnan(lower) || std::isnan(upper) || lower > upper || !std::isfinite(cost))
      throw InputError("invalid bounds or cost for variable " + name);
    cols_.push_back({std::move(name), lower, upper, cost});
    return static_cast<int>(cols_.size()) - 1;
  }

  int add_row(std::string name, std::vector<Term> terms, double lower, double upper) {
    if (std::isnan(lower) || std::isnan(upper) || lower > upper)
      throw InputError("invalid bounds for row " + name);
    for (const Term& t : terms)
      if (t.var < 0 || t.var >= num_vars() || !std::isfinite(t.coef))
        throw InputError("invalid term in row " + name);
    rows_.push_back({std::move(name), std::move(terms), lower, upper});
    return static_cast<int>(rows_.size()) - 1;
  }

  void add_cost(int var, double c) { cols_.at(var).cost += c; }
  void set_cost_constant(double c) { c0_ = c; }
  double cost_constant() const { return c0_; }

  int num_vars() const { return static_cast<int>(cols_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  const std::vector<Column>& columns() const { return cols_; }
  const std::vector<Row>& rows() const { return rows_; }

  double objective(std::span<const double> x) const {
    double v = c0_;
    for (int j = 0; j < num_vars(); ++j) v += cols_[j].cost * x[j];
    return v;
  }

  double activity(int i, std::span<const double> x) const {
    double v = 0.0;
    for (const Term& t : rows_[i].terms) v += t.coef * x[t.var];
    return v;
  }

  /// Largest absolute bound or row violation of x.
  double max_violation(std::span<const double> x) const {
    double v = 0.0;
    for (int j = 0; j < num_vars(); ++j)
      v = std::max({v, cols_[j].lower - x[j], x[j] - cols_[j].upper});
    for (int i = 0; i < num_rows(); ++i) {
      const double a = activity(i, x);
      v = std::max({v, rows_[i].lower - a, a - rows_[i].upper});
    }
    return v;
  }

 private:
  std::vector<Column> cols_;
  std::vector<Row> rows_;
  double c0_ = 0.0;
};

enum class Status { optimal, infeasible, unbounded, numerical_failure };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

struct Solution {
  Status status = Status::numerical_failure;
  std::vector<double> x;
  double objective = 0.0;
  double max_primal_residual = 0.0;
  int iterations = 0;
};

struct SimplexOptions {
  double feasibility_tol = 1e-9;  // in the scaled problem
  double optimality_tol = 1e-9;   // relative to the largest scaled cost
  double pivot_tol = 1e-9;
  int max_iterations = 100000;
  bool scale = true;
  bool zero_objective = false;  // stop after phase 1 (any feasible vertex)
};

namespace detail {

inline double pow2_round(double v) { return std::exp2(std::round(std::log2(v))); }

enum class NbState : unsigned char { lower, upper, zero };

/// Compact (Tucker) tableau: x_B = -T x_N with one column per nonbasic variable.
/// Variables: structurals [0, n), row slacks [n, n+m) with s_i = a_i'x, and
/// phase-one artificials [n+m, n+2m).
class DenseSimplex {
 public:
  DenseSimplex(const LinearProgram& lp, const SimplexOptions& opt) : lp_(lp), opt_(opt) {
    n_ = lp.num_vars();
    m_ = lp.num_rows();
    scale_problem();
  }

  Solution run() {
    Solution sol;
    setup_phase_one();
    Status st = iterate(true);
    if (st == Status::numerical_failure) return finish(st);
    double infeas = 0.0;
    for (int i = 0; i < m_; ++i)
      if (is_artificial(basis_[i])) infeas += val_[basis_[i]];
    if (infeas > 1e2 * opt_.feasibility_tol * (1.0 + m_ * 1e-2)) return finish(Status::infeasible);
    for (int v = n_ + m_; v < n_ + 2 * m_; ++v) up_[v] = 0.0;
    if (opt_.zero_objective) return finish(Status::optimal);
    setup_phase_two();
    st = iterate(false);
    return finish(st);
  }

 private:
  bool is_artificial(int v) const { return v >= n_ + m_; }
  double* row(int i) { return tab_.data() + static_cast<std::size_t>(i) * stride_; }

  void scale_problem() {
    row_scale_.assign(m_, 1.0);
    col_scale_.assign(n_, 1.0);
    if (opt_.scale && m_ > 0) {
      for (int pass = 0; pass < 6; ++pass) {
        for (int i = 0; i < m_; ++i) {
          double lo = kInf, hi = 0.0;
          for (const Term& t : lp_.rows()[i].terms) {
            const double a = std::abs(t.coef) * col_scale_[t.var];
            if (a == 0.0) continue;
            lo = std::min(lo, a);
            hi = std::max(hi, a);
          }
          if (hi > 0.0) row_scale_[i] = 1.0 / std::sqrt(lo * hi);
        }
        std::vector<double> lo(n_, kInf), hi(n_, 0.0);
        for (int i = 0; i < m_; ++i)
          for (const Term& t : lp_.rows()[i].terms) {
            const double a = std::abs(t.coef) * row_scale_[i];
            if (a == 0.0) continue;
            lo[t.var] = std::min(lo[t.var], a);
            hi[t.var] = std::max(hi[t.var], a);
          }
        for (int j = 0; j < n_; ++j)
          if (hi[j] > 0.0) col_scale_[j] = 1.0 / std::sqrt(lo[j] * hi[j]);
      }
      for (double& r : row_scale_) r = pow2_round(r);
      for (double& s : col_scale_) s = pow2_round(s);
    }
    const int nv = n_ + 2 * m_;
    lo_.assign(nv, 0.0);
    up_.assign(nv, kInf);
    cost2_.assign(nv, 0.0);
    double cmax = 0.0;
    for (int j = 0; j < n_; ++j) {
      const Column& c = lp_.columns()[j];
      lo_[j] = c.lower / col_scale_[j];
      up_[j] = c.upper / col_scale_[j];
      cost2_[j] = c.cost * col_scale_[j];
      cmax = std::max(cmax, std::abs(cost2_[j]));
    }
    cost_scale_ = cmax > 0.0 ? pow2_round(cmax) : 1.0;
    for (int j = 0; j < n_; ++j) cost2_[j] /= cost_scale_;
    for (int i = 0; i < m_; ++i) {
      lo_[n_ + i] = lp_.rows()[i].lower * row_scale_[i];
      up_[n_ + i] = lp_.rows()[i].upper * row_scale_[i];
    }
    arows_.resize(m_);
    for (int i = 0; i < m_; ++i)
      for (const Term& t : lp_.rows()[i].terms)
        arows_[i].push_back({t.var, t.coef * row_scale_[i] * col_scale_[t.var]});
  }

  void set_nonbasic(int v, NbState s) {
    state_[v] = s;
    val_[v] = s == NbState::lower ? lo_[v] : s == NbState::upper ? up_[v] : 0.0;
  }

  NbState initial_state(int v) const {
    if (std::isfinite(lo_[v])) return NbState::lower;
    if (std::isfinite(up_[v])) return NbState::upper;
    return NbState::zero;
  }

  void setup_phase_one() {
    const int nv = n_ + 2 * m_;
    val_.assign(nv, 0.0);
    state_.assign(nv, NbState::lower);
    for (int j = 0; j < n_; ++j) set_nonbasic(j, initial_state(j));
    std::vector<double> act(m_, 0.0);
    std::vector<int> art_rows;
    for (int i = 0; i < m_; ++i) {
      for (const Term& t : arows_[i]) act[i] += t.coef * val_[t.var];
      const double tol = opt_.feasibility_tol;
      if (act[i] < lo_[n_ + i] - tol || act[i] > up_[n_ + i] + tol) art_rows.push_back(i);
    }
    width_ = n_ + static_cast<int>(art_rows.size());
    stride_ = std::max(width_, 1);
    tab_.assign(static_cast<std::size_t>(m_) * stride_, 0.0);
    nonbasic_.resize(width_);
    basis_.resize(m_);
    for (int j = 0; j < n_; ++j) nonbasic_[j] = j;
    std::vector<double> sigma(m_, 0.0);
    for (std::size_t k = 0; k < art_rows.size(); ++k) {
      const int i = art_rows[k];
      const int slack = n_ + i;
      const bool below = act[i] < lo_[slack];
      set_nonbasic(slack, below ? NbState::lower : NbState::upper);
      sigma[i] = below ? 1.0 : -1.0;  // sign(s_i - a_i'x)
      nonbasic_[n_ + k] = slack;
      row(i)[n_ + k] = -1.0 / sigma[i];
    }
    for (int i = 0; i < m_; ++i) {
      double* Ti = row(i);
      if (sigma[i] == 0.0) {
        basis_[i] = n_ + i;
        for (const Term& t : arows_[i]) Ti[t.var] -= t.coef;
        val_[n_ + i] = act[i];
      } else {
        basis_[i] = n_ + m_ + i;
        for (const Term& t : arows_[i]) Ti[t.var] += t.coef / sigma[i];
        val_[n_ + m_ + i] = std::abs(val_[n_ + i] - act[i]);
      }
    }
    cost_.assign(nv, 0.0);
    for (int v = n_ + m_; v < nv; ++v) cost_[v] = 1.0;
    compute_reduced_costs();
  }

  void setup_phase_two() {
    cost_ = cost2_;
    recompute_basic_values();
    compute_reduced_costs();
  }

  void compute_reduced_costs() {
    d_.assign(stride_, 0.0);
    for (int j = 0; j < width_; ++j) d_[j] = cost_[nonbasic_[j]];
    for (int i = 0; i < m_; ++i) {
      const double cb = cost_[basis_[i]];
      if (cb == 0.0) continue;
      const double* Ti = row(i);
      for (int j = 0; j < width_; ++j) d_[j] -= cb * Ti[j];
    }
  }

  void recompute_basic_values() {
    for (int i = 0; i < m_; ++i) {
      const double* Ti = row(i);
      double v = 0.0;
      for (int j = 0; j < width_; ++j) v -= Ti[j] * val_[nonbasic_[j]];
      val_[basis_[i]] = v;
    }
  }

  /// Entering column and direction, or -1 at optimality.
  int price(bool bland, int& dir) const {
    int best = -1;
    double best_score = opt_.optimality_tol;
    int best_var = -1;
    for (int j = 0; j < width_; ++j) {
      const int v = nonbasic_[j];
      if (lo_[v] == up_[v]) continue;
      const double dj = d_[j];
      int dj_dir = 0;
      switch (state_[v]) {
        case NbState::lower: if (dj < -opt_.optimality_tol) dj_dir = 1; break;
        case NbState::upper: if (dj > opt_.optimality_tol) dj_dir = -1; break;
        case NbState::zero:
          if (std::abs(dj) > opt_.optimality_tol) dj_dir = dj < 0 ? 1 : -1;
          break;
      }
      if (dj_dir == 0) continue;
      if (bland) {
        if (best_var < 0 || v < best_var) {
          best_var = v;
          best = j;
          dir = dj_dir;
        }
      } else if (std::abs(dj) > best_score) {
        best_score = std::abs(dj);
        best = j;
        dir = dj_dir;
      }
    }
    return best;
  }

  /// Leaving row (or -1), step length, and whether the leaving variable hits its upper bound.
  int ratio_test(int s, int dir, bool bland, double& theta, bool& to_upper) const {
    const double tol = opt_.feasibility_tol;
    double theta_max = kInf;
    if (!bland) {
      for (int i = 0; i < m_; ++i) {
        const double alpha = tab_[static_cast<std::size_t>(i) * stride_ + s];
        if (std::abs(alpha) <= opt_.pivot_tol) continue;
        const double rate = -alpha * dir;
        const int v = basis_[i];
        if (rate > 0.0 && std::isfinite(up_[v]))
          theta_max = std::min(theta_max, (up_[v] + tol - val_[v]) / rate);
        else if (rate < 0.0 && std::isfinite(lo_[v]))
          theta_max = std::min(theta_max, (val_[v] - lo_[v] + tol) / -rate);
      }
    }
    int best = -1;
    double best_alpha = 0.0;
    double best_theta = kInf;
    for (int i = 0; i < m_; ++i) {
      const double alpha = tab_[static_cast<std::size_t>(i) * stride_ + s];
      if (std::abs(alpha) <= opt_.pivot_tol) continue;
      const double rate = -alpha * dir;
      const int v = basis_[i];
      double t;
      bool up;
      if (rate > 0.0 && std::isfinite(up_[v])) {
        t = (up_[v] - val_[v]) / rate;
        up = true;
      } else if (rate < 0.0 && std::isfinite(lo_[v])) {
        t = (val_[v] - lo_[v]) / -rate;
        up = false;
      } else {
        continue;
      }
      t = std::max(t, 0.0);
      if (bland) {
        if (best < 0 || t < best_theta || (t == best_theta && v < basis_[best])) {
          best = i;
          best_theta = t;
          to_upper = up;
        }
      } else if (t <= theta_max && std::abs(alpha) > best_alpha) {
        best = i;
        best_alpha = std::abs(alpha);
        best_theta = t;
        to_upper = up;
      }
    }
    theta = best_theta;
    return best;
  }

  void pivot(int r, int s) {
    double* Tr = row(r);
    const double inv = 1.0 / Tr[s];
    for (int j = 0; j < width_; ++j) Tr[j] *= inv;
    Tr[s] = inv;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* Ti = row(i);
      const double f = Ti[s];
      if (f == 0.0) continue;
      for (int j = 0; j < width_; ++j) Ti[j] -= f * Tr[j];
      Ti[s] = -f * inv;
    }
    const double f = d_[s];
    if (f != 0.0) {
      for (int j = 0; j < width_; ++j) d_[j] -= f * Tr[j];
      d_[s] = -f * inv;
    }
  }

  void drop_column(int s) {
    const int last = width_ - 1;
    if (s != last) {
      for (int i = 0; i < m_; ++i) row(i)[s] = row(i)[last];
      d_[s] = d_[last];
      nonbasic_[s] = nonbasic_[last];
    }
    for (int i = 0; i < m_; ++i) row(i)[last] = 0.0;
    d_[last] = 0.0;
    --width_;
  }

  Status iterate(bool phase_one) {
    int degenerate_run = 0;
    bool bland = false;
    while (true) {
      if (iterations_ >= opt_.max_iterations) return Status::numerical_failure;
      if (phase_one) {
        bool any = false;
        for (int i = 0; i < m_ && !any; ++i)
          if (is_artificial(basis_[i]) && val_[basis_[i]] > opt_.feasibility_tol) any = true;
        if (!any) return Status::optimal;
      }
      int dir = 0;
      const int s = price(bland, dir);
      if (s < 0) return Status::optimal;
      ++iterations_;
      const int e = nonbasic_[s];
      double theta = kInf;
      bool to_upper = false;
      const int r = ratio_test(s, dir, bland, theta, to_upper);
      const double range = up_[e] - lo_[e];
      const bool flip = std::isfinite(range) && state_[e] != NbState::zero &&
                        (r < 0 || range <= theta);
      if (!flip && r < 0) return phase_one ? Status::numerical_failure : Status::unbounded;
      const double step = flip ? range : theta;
      if (step > 0.0) {
        for (int i = 0; i < m_; ++i) {
          const double alpha = tab_[static_cast<std::size_t>(i) * stride_ + s];
          if (alpha != 0.0) val_[basis_[i]] -= alpha * dir * step;
        }
      }
      if (step <= opt_.feasibility_tol) {
        if (++degenerate_run > 50) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }
      if (flip) {
        set_nonbasic(e, dir > 0 ? NbState::upper : NbState::lower);
        continue;
      }
      val_[e] += dir * step;
      const int leaving = basis_[r];
      pivot(r, s);
      basis_[r] = e;
      nonbasic_[s] = leaving;
      set_nonbasic(leaving, to_upper ? NbState::upper : NbState::lower);
      if (is_artificial(leaving)) {
        up_[leaving] = 0.0;
        drop_column(s);
      }
    }
  }

  Solution finish(Status st) {
    Solution sol;
    sol.status = st;
    sol.iterations = iterations_;
    if (st == Status::numerical_failure && val_.empty()) return sol;
    recompute_basic_values();
    sol.x.resize(n_);
    for (int j = 0; j < n_; ++j) {
      double x = val_[j] * col_scale_[j];
      const Column& c = lp_.columns()[j];
      // snap tiny bound overshoots produced by the relaxed ratio test
      if (x < c.lower && c.lower - x <= 1e-7 * (1.0 + std::abs(c.lower))) x = c.lower;
      if (x > c.upper && x - c.upper <= 1e-7 * (1.0 + std::abs(c.upper))) x = c.upper;
      sol.x[j] = x;
    }
    sol.objective = lp_.objective(sol.x);
    sol.max_primal_residual = lp_.max_violation(sol.x);
    return sol;
  }

  const LinearProgram& lp_;
  SimplexOptions opt_;
  int n_ = 0, m_ = 0;
  std::vector<double> row_scale_, col_scale_;
  double cost_scale_ = 1.0;
  std::vector<std::vector<Term>> arows_;
  std::vector<double> lo_, up_, cost_, cost2_, val_;
  std::vector<NbState> state_;
  std::vector<int> basis_, nonbasic_;
  int width_ = 0, stride_ = 1;
  std::vector<double> tab_, d_;
  int iterations_ = 0;
};

}  // namespace detail

/// Solves an LP with the dense primal simplex. Deterministic for a given model.
inline Solution solve_simplex(const LinearProgram& lp, const SimplexOptions& opt = {}) {
  detail::DenseSimplex s(lp, opt);
  return s.run();
}

}  // namespace mgempc::lp
