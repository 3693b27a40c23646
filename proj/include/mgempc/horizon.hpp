#pragma once

// Finite-horizon dispatch problem: LP (economic objectives) or QP (tracking).
// Running peaks are condensed into terminal epigraph variables, so the
// decision vector is the BESS power split per step plus a few peak variables.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "mgempc/dynamics.hpp"
#include "mgempc/error.hpp"
#include "mgempc/lp.hpp"
#include "mgempc/qp.hpp"
#include "mgempc/tariff.hpp"

namespace mgempc {

enum class PeakKind { nc, op };
enum class TerminalSocKind { none, equal, at_least };

/// weight * max(scale * peak(t0 + step | t0), floor)
struct MaxTerm {
  PeakKind peak = PeakKind::nc;
  int step = 1;  // 1 or N
  double weight = 0.0;
  double scale = 1.0;
  double floor = 0.0;
};

/// Controller-agnostic objective and terminal set description.
struct HorizonSkeleton {
  std::string label;
  bool tracking = false;
  std::vector<double> track_weight;  // P_k
  std::vector<double> track_target;  // ideal grid import per step
  double nc_terminal_coef = 0.0;     // on x2(t0+N|t0)
  double op_terminal_coef = 0.0;     // on x3(t0+N|t0)
  std::vector<MaxTerm> max_terms;
  TerminalSocKind terminal = TerminalSocKind::none;
  double terminal_soc = 0.0;
};

struct HorizonData {
  const MicrogridParams& params;
  const TariffSchedule& tariff;
  const ExogenousSeries& series;
};

struct HorizonProblem {
  HorizonSkeleton skeleton;
  std::size_t t0 = 0;
  int N = 0;
  AugmentedState x0;
  MicrogridParams params;
  double dt = 0.25;
  double tie_break = 0.0;
  bool with_op = true;
  std::vector<double> c;        // net generation per step
  std::vector<double> rate_dt;  // energy rate * dt per step
  std::vector<int> onpeak;
  lp::QuadraticProgram program;  // hessian empty for LP objectives
  std::vector<int> p, n, v;      // charge/discharge split (LP) or BESS power (QP)
  int X2 = -1, X3 = -1, X2_1 = -1, X3_1 = -1;
  std::vector<int> W;  // one per max term

  bool quadratic() const { return skeleton.tracking; }
  int num_vars() const { return program.lp.num_vars(); }
  int num_rows() const { return program.lp.num_rows(); }
};

inline constexpr double kRedundancyMargin = 1e-9;

inline HorizonProblem build_horizon(const HorizonSkeleton& sk, const AugmentedState& x0,
                                    std::size_t t0, int N, const HorizonData& d,
                                    double tie_break = 0.0) {
  if (N < 1) throw BuildError("horizon length must be at least 1");
  if (t0 + static_cast<std::size_t>(N) > d.series.size())
    throw InputError("exogenous data does not cover the horizon starting at step " +
                     std::to_string(t0));
  const MicrogridParams& P = d.params;
  HorizonProblem hp;
  hp.skeleton = sk;
  hp.t0 = t0;
  hp.N = N;
  hp.x0 = x0;
  hp.params = P;
  hp.dt = d.tariff.dt_hours;
  hp.tie_break = tie_break;
  hp.with_op = d.tariff.opdc_rate > 0.0;
  for (int k = 0; k < N; ++k) {
    const std::size_t t = t0 + k;
    hp.c.push_back(d.series.net(t));
    const double r = d.tariff.rate(t);
    if (r < 0.0) throw BuildError("negative energy rate breaks the |u1| split at step " + std::to_string(t));
    hp.rate_dt.push_back(r * hp.dt);
    hp.onpeak.push_back(onpeak_indicator(t, d.tariff));
  }
  if (!(sk.nc_terminal_coef >= 0.0) || !(sk.op_terminal_coef >= 0.0))
    throw BuildError("negative objective coefficient on a peak epigraph variable");
  for (const MaxTerm& m : sk.max_terms) {
    if (!(m.weight >= 0.0) || !(m.scale >= 0.0))
      throw BuildError("negative objective coefficient on a terminal max auxiliary");
    if (!std::isfinite(m.floor) || !std::isfinite(m.scale) || !std::isfinite(m.weight))
      throw BuildError("non-finite reference peak in a terminal max term");
    if (m.step != 1 && m.step != N) throw BuildError("max term must reference step 1 or N");
  }
  if (sk.tracking && (static_cast<int>(sk.track_weight.size()) != N ||
                      static_cast<int>(sk.track_target.size()) != N))
    throw BuildError("tracking weight/target length must equal N");

  lp::LinearProgram& lp = hp.program.lp;
  const double B = P.bess_power_kw;
  const double lam = loss_factor(P.eta);
  const double g = P.soc_gain(hp.dt);
  auto nm = [](const char* s, int k) { return std::string(s) + "[" + std::to_string(k) + "]"; };

  // BESS power as a signed sum of columns, per step
  std::vector<std::vector<lp::Term>> power(N);
  if (sk.tracking) {
    double c0 = 0.0;
    for (int k = 0; k < N; ++k) {
      const double w2 = sk.track_weight[k] * sk.track_weight[k];
      const double target = hp.c[k] + sk.track_target[k];
      const double lo = std::max(-B, hp.c[k] + P.grid_lo);
      const double hi = std::min(B, hp.c[k] + P.grid_hi);
      if (lo > hi) throw InfeasibleError("grid limits exclude every BESS power", static_cast<long>(t0 + k));
      hp.v.push_back(lp.add_variable(nm("u1", k), lo, hi, -2.0 * w2 * target));
      hp.program.hessian_diag.push_back(2.0 * w2);
      c0 += w2 * target * target;
      power[k] = {{hp.v[k], 1.0}};
    }
    lp.set_cost_constant(c0);
  } else {
    double c0 = 0.0;
    for (int k = 0; k < N; ++k) {
      const double r = hp.rate_dt[k];
      hp.p.push_back(lp.add_variable(nm("p", k), 0.0, B, r * (1.0 + lam) + tie_break));
      hp.n.push_back(lp.add_variable(nm("n", k), 0.0, B, r * (lam - 1.0) + tie_break));
      c0 -= r * hp.c[k];
      power[k] = {{hp.p[k], 1.0}, {hp.n[k], -1.0}};
    }
    lp.set_cost_constant(c0);
    hp.X2 = lp.add_variable("X2", x0.x2, lp::kInf, sk.nc_terminal_coef);
    if (hp.with_op) hp.X3 = lp.add_variable("X3", x0.x3, lp::kInf, sk.op_terminal_coef);
    for (const MaxTerm& m : sk.max_terms) {
      if (m.peak == PeakKind::op && !hp.with_op) continue;
      if (m.step == 1 && N > 1) {
        if (m.peak == PeakKind::nc && hp.X2_1 < 0) hp.X2_1 = lp.add_variable("X2_1", x0.x2, lp::kInf, 0.0);
        if (m.peak == PeakKind::op && hp.X3_1 < 0) hp.X3_1 = lp.add_variable("X3_1", x0.x3, lp::kInf, 0.0);
      }
    }
  }

  // grid limits on u2 = u1 - c
  if (!sk.tracking)
    for (int k = 0; k < N; ++k) {
      const bool lo_red = -B - hp.c[k] >= P.grid_lo - kRedundancyMargin;
      const bool hi_red = B - hp.c[k] <= P.grid_hi + kRedundancyMargin;
      if (lo_red && hi_red) continue;
      lp.add_row(nm("grid", k), power[k], lo_red ? -lp::kInf : hp.c[k] + P.grid_lo,
                 hi_red ? lp::kInf : hp.c[k] + P.grid_hi);
    }

  // SOC after k+1 steps, scaled by 1/g so the row is a plain power sum
  double term_lo = -lp::kInf, term_hi = lp::kInf;
  if (sk.terminal == TerminalSocKind::equal) term_lo = term_hi = (sk.terminal_soc - x0.x1) / g;
  if (sk.terminal == TerminalSocKind::at_least) term_lo = (sk.terminal_soc - x0.x1) / g;
  std::vector<lp::Term> cum;
  for (int k = 0; k < N; ++k) {
    cum.insert(cum.end(), power[k].begin(), power[k].end());
    const double reach = B * (k + 1);
    const double lo = (P.soc_min - x0.x1) / g, hi = (P.soc_max - x0.x1) / g;
    const bool lo_red = -reach >= lo + kRedundancyMargin;
    const bool hi_red = reach <= hi - kRedundancyMargin;
    const bool last = k == N - 1;
    if (last && sk.terminal != TerminalSocKind::none) {
      const double L = std::max(lo, term_lo), U = std::min(hi, term_hi);
      if (L <= U) {
        lp.add_row("soc_terminal", cum, L, U);
      } else {
        lp.add_row(nm("soc", k), cum, lo, hi);
        lp.add_row("terminal", cum, term_lo, term_hi);
      }
      continue;
    }
    if (lo_red && hi_red) continue;
    lp.add_row(nm("soc", k), cum, lo_red ? -lp::kInf : lo, hi_red ? lp::kInf : hi);
  }

  if (!sk.tracking) {
    // peak epigraphs: u_k - X <= c_k, skipped when u2 can never exceed the floor
    auto peak_rows = [&](int X, double floor, const char* tag, int upto, bool op) {
      for (int k = 0; k < upto; ++k) {
        if (op && !hp.onpeak[k]) continue;
        if (B - hp.c[k] <= floor + kRedundancyMargin) continue;
        std::vector<lp::Term> t = power[k];
        t.push_back({X, -1.0});
        lp.add_row(nm(tag, k), std::move(t), -lp::kInf, hp.c[k]);
      }
    };
    peak_rows(hp.X2, x0.x2, "nc", N, false);
    if (hp.with_op) peak_rows(hp.X3, x0.x3, "op", N, true);
    if (hp.X2_1 >= 0) peak_rows(hp.X2_1, x0.x2, "nc1_", 1, false);
    if (hp.X3_1 >= 0) peak_rows(hp.X3_1, x0.x3, "op1_", 1, true);
    int q = 0;
    for (const MaxTerm& m : sk.max_terms) {
      if (m.peak == PeakKind::op && !hp.with_op) continue;
      int X = m.peak == PeakKind::nc ? hp.X2 : hp.X3;
      if (m.step == 1 && N > 1) X = m.peak == PeakKind::nc ? hp.X2_1 : hp.X3_1;
      const int w = lp.add_variable(nm("W", q), m.floor, lp::kInf, m.weight);
      hp.W.push_back(w);
      lp.add_row(nm("max", q), {{w, 1.0}, {X, -m.scale}}, 0.0, lp::kInf);
      ++q;
    }
  }
  return hp;
}

/// Predicted states x(t0+k|t0), k = 0..N, for a BESS power sequence.
inline std::vector<AugmentedState> predict_states(const HorizonProblem& hp,
                                                  std::span<const double> u1) {
  std::vector<AugmentedState> xs{hp.x0};
  const double g = hp.params.soc_gain(hp.dt);
  for (int k = 0; k < hp.N; ++k) {
    AugmentedState y = xs.back();
    const double u2 = u1[k] - hp.c[k];
    y.x1 += g * u1[k];
    y.x2 = std::max(y.x2, u2);
    if (hp.onpeak[k]) y.x3 = std::max(y.x3, u2);
    xs.push_back(y);
  }
  return xs;
}

/// Controller objective evaluated directly (no epigraph variables).
inline double evaluate_objective(const HorizonProblem& hp, std::span<const double> u1) {
  const HorizonSkeleton& sk = hp.skeleton;
  if (sk.tracking) {
    double v = 0.0;
    for (int k = 0; k < hp.N; ++k) {
      const double e = sk.track_weight[k] * (u1[k] - hp.c[k] - sk.track_target[k]);
      v += e * e;
    }
    return v;
  }
  const double lam = loss_factor(hp.params.eta);
  double v = 0.0;
  for (int k = 0; k < hp.N; ++k) v += hp.rate_dt[k] * (u1[k] - hp.c[k] + lam * std::abs(u1[k]));
  const auto xs = predict_states(hp, u1);
  v += sk.nc_terminal_coef * xs.back().x2;
  if (hp.with_op) v += sk.op_terminal_coef * xs.back().x3;
  for (const MaxTerm& m : sk.max_terms) {
    if (m.peak == PeakKind::op && !hp.with_op) continue;
    const AugmentedState& x = xs[m.step];
    const double peak = m.peak == PeakKind::nc ? x.x2 : x.x3;
    v += m.weight * std::max(m.scale * peak, m.floor);
  }
  return v;
}

struct SolveResult {
  lp::Status status = lp::Status::numerical_failure;
  std::vector<ControlInput> inputs;      // N entries
  std::vector<AugmentedState> states;    // N+1 predicted states
  double objective = 0.0;         // direct evaluation at the returned inputs
  double solver_objective = 0.0;  // solver's value, tie-break removed
  double max_residual = 0.0;
  int iterations = 0;
  std::vector<double> x;  // raw solver vector
};

struct SolverOptions {
  lp::SimplexOptions simplex;
  lp::ActiveSetOptions active_set;
};

inline SolveResult solve(const HorizonProblem& hp, const SolverOptions& opt = {}) {
  SolveResult r;
  lp::Solution s = hp.quadratic() ? lp::solve_qp(hp.program, opt.active_set)
                                  : lp::solve_simplex(hp.program.lp, opt.simplex);
  r.status = s.status;
  r.iterations = s.iterations;
  r.max_residual = s.max_primal_residual;
  if (s.status != lp::Status::optimal) return r;
  r.x = s.x;
  std::vector<double> u1(hp.N);
  double tb = 0.0;
  for (int k = 0; k < hp.N; ++k) {
    if (hp.quadratic()) {
      u1[k] = s.x[hp.v[k]];
    } else {
      u1[k] = s.x[hp.p[k]] - s.x[hp.n[k]];
      tb += hp.tie_break * (s.x[hp.p[k]] + s.x[hp.n[k]]);
    }
  }
  for (int k = 0; k < hp.N; ++k) r.inputs.push_back({u1[k], u1[k] - hp.c[k]});
  r.states = predict_states(hp, u1);
  r.objective = evaluate_objective(hp, u1);
  r.solver_objective = s.objective - tb;
  if (r.max_residual > 1e-6) r.status = lp::Status::numerical_failure;
  return r;
}

/// |direct objective - solver objective| relative to max(1, |direct|).
inline double verify_epigraph_tightness(const HorizonProblem& hp, const SolveResult& r) {
  (void)hp;
  return std::abs(r.objective - r.solver_objective) / std::max(1.0, std::abs(r.objective));
}

/// Human-readable dump of the assembled program (used for golden tests).
inline void write_problem(std::ostream& os, const HorizonProblem& hp) {
  const lp::LinearProgram& lp = hp.program.lp;
  os << "problem " << hp.skeleton.label << " t0=" << hp.t0 << " N=" << hp.N
     << (hp.quadratic() ? " quadratic" : " linear") << "\n";
  os << "vars " << lp.num_vars() << " rows " << lp.num_rows() << "\n";
  for (int j = 0; j < lp.num_vars(); ++j) {
    const lp::Column& c = lp.columns()[j];
    os << "  " << c.name << " [" << c.lower << ", " << c.upper << "] cost " << c.cost;
    if (hp.quadratic()) os << " quad " << hp.program.hessian_diag[j];
    os << "\n";
  }
  for (const lp::Row& r : lp.rows()) {
    os << "  " << r.name << ": " << r.lower << " <=";
    for (const lp::Term& t : r.terms) os << " " << (t.coef < 0 ? "-" : "+") << std::abs(t.coef) << "*" << lp.columns()[t.var].name;
    os << " <= " << r.upper << "\n";
  }
  os << "constant " << lp.cost_constant() << "\n";
}

}  // namespace mgempc
