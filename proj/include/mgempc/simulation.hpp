#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mgempc/billing.hpp"
#include "mgempc/controllers.hpp"
#include "mgempc/dynamics.hpp"
#include "mgempc/error.hpp"
#include "mgempc/horizon.hpp"
#include "mgempc/ipm.hpp"
#include "mgempc/tariff.hpp"

namespace mgempc {

struct ScenarioSpec {
  MicrogridParams params;
  TariffSchedule tariff;
  ExogenousSeries series;
  std::vector<std::string> timestamps;  // optional, one per series row
  std::size_t start_step = 0;
  std::size_t T = 0;
  ControllerConfig reference;
  std::optional<ControllerConfig> proposed;
  std::string scaling_kind = "constant";  // constant | ramp
  SolverOptions solver;
  double tie_break = 0.0;

  int horizon() const { return proposed ? proposed->horizon_N : reference.horizon_N; }

  PeakScaling scaling() const {
    if (scaling_kind == "constant") return PeakScaling::constant();
    if (scaling_kind == "ramp") return PeakScaling::ramp(start_step, T);
    throw ConfigError("unknown peak scaling '" + scaling_kind + "'");
  }

  void validate() const {
    params.validate();
    tariff.validate();
    series.validate();
    if (T == 0) throw WindowError("billing window is empty");
    if (proposed && proposed->horizon_N != reference.horizon_N)
      throw ConfigError("reference and proposed horizons differ");
    if (proposed && is_reference(proposed->method))
      throw ConfigError("proposed controller must be choice1, choice2 or choice3");
    if (!is_reference(reference.method))
      throw ConfigError("reference controller must be std_ref or track_ref");
    reference.validate(params);
    if (proposed) proposed->validate(params);
    const std::size_t need = start_step + T + static_cast<std::size_t>(horizon());
    if (series.size() < need)
      throw WindowError("data covers " + std::to_string(series.size()) + " steps, need " +
                        std::to_string(need) + " (window plus one horizon of lookahead)");
    if (tariff.energy_rate.size() > 1 && tariff.energy_rate.size() < need)
      throw WindowError("energy rate series shorter than window plus lookahead");
    scaling().validate(start_step, start_step + T);
  }
};

struct SolveDiag {
  lp::Status status = lp::Status::optimal;
  int iterations = 0;
  double residual = 0.0;
  double epigraph_gap = 0.0;
};

/// Closed-loop record. Index k refers to global step start_step + k.
struct SimulationLog {
  std::size_t start_step = 0;
  std::size_t T = 0;
  int N = 0;
  ControllerConfig reference;
  std::optional<ControllerConfig> proposed;

  std::vector<AugmentedState> ref_x;  // T+2: includes x^r(T+1) from the final solve
  std::vector<ControlInput> ref_u;    // T+1: entry T from the final solve, not billed
  std::vector<double> ref_V;          // T+1
  std::vector<double> ref_stage;      // T
  std::vector<SolveDiag> ref_diag;

  std::vector<AugmentedState> x;  // T+1
  std::vector<ControlInput> u;    // T+1
  std::vector<double> V;          // T+1
  std::vector<double> stage;      // T
  std::vector<std::vector<double>> plan_u1;  // T+1 open-loop BESS power sequences
  std::vector<SolveDiag> diag;

  CostBreakdown ref_cost;
  CostBreakdown cost;

  bool has_proposed() const { return proposed.has_value(); }
};

namespace detail {

inline SolveResult solve_or_throw(const HorizonProblem& hp, const SolverOptions& opt,
                                  std::size_t t, const char* who, SolveDiag& diag) {
  SolveResult r = solve(hp, opt);
  diag.status = r.status;
  diag.iterations = r.iterations;
  diag.residual = r.max_residual;
  if (r.status != lp::Status::optimal)
    throw InfeasibleError(std::string(who) + " problem " + lp::to_string(r.status) + " at step " +
                              std::to_string(t),
                          static_cast<long>(t));
  diag.epigraph_gap = verify_epigraph_tightness(hp, r);
  return r;
}

inline SimulationLog simulate(const ScenarioSpec& spec, bool with_proposed) {
  spec.validate();
  const PeakScaling scaling = spec.scaling();
  const ControllerContext ctx{spec.params, spec.tariff, spec.series, scaling};
  SimulationLog log;
  log.start_step = spec.start_step;
  log.T = spec.T;
  log.N = spec.horizon();
  log.reference = spec.reference;
  if (with_proposed) log.proposed = spec.proposed;

  const AugmentedState x_init{spec.params.soc_init, 0.0, 0.0};
  AugmentedState xr = x_init, x = x_init;
  log.ref_x.push_back(xr);
  if (with_proposed) log.x.push_back(x);
  for (std::size_t k = 0; k <= spec.T; ++k) {
    const std::size_t t = spec.start_step + k;
    SolveDiag rd;
    const HorizonProblem rp = build_controller_problem(spec.reference, xr, t, ctx, nullptr, spec.tie_break);
    const SolveResult rr = solve_or_throw(rp, spec.solver, t, "reference", rd);
    const ControlInput ur = rr.inputs.front();
    const AugmentedState xr_next = advance_augmented(xr, ur, t, spec.params, spec.tariff);
    log.ref_u.push_back(ur);
    log.ref_V.push_back(rr.objective);
    log.ref_diag.push_back(rd);
    log.ref_x.push_back(xr_next);
    if (k < spec.T)
      log.ref_stage.push_back(stage_cost(xr, xr_next, ur, t, spec.tariff, scaling, spec.params.eta));

    if (with_proposed) {
      const ReferenceInfo info{xr, ur, xr_next};
      SolveDiag pd;
      const HorizonProblem pp = build_controller_problem(*spec.proposed, x, t, ctx, &info, spec.tie_break);
      const SolveResult pr = solve_or_throw(pp, spec.solver, t, "proposed", pd);
      const ControlInput u = pr.inputs.front();
      log.u.push_back(u);
      log.V.push_back(pr.objective);
      log.diag.push_back(pd);
      std::vector<double> plan(pr.inputs.size());
      for (std::size_t j = 0; j < plan.size(); ++j) plan[j] = pr.inputs[j].u1;
      log.plan_u1.push_back(std::move(plan));
      if (k < spec.T) {
        const AugmentedState x_next = advance_augmented(x, u, t, spec.params, spec.tariff);
        log.stage.push_back(stage_cost(x, x_next, u, t, spec.tariff, scaling, spec.params.eta));
        log.x.push_back(x_next);
        x = x_next;
      }
    }
    xr = xr_next;
  }

  const BillingWindow w = make_billing_window(spec.tariff, spec.start_step, spec.T);
  auto bill = [&](const std::vector<ControlInput>& us) {
    std::vector<double> u1(spec.T), u2(spec.T);
    for (std::size_t k = 0; k < spec.T; ++k) {
      u1[k] = us[k].u1;
      u2[k] = us[k].u2;
    }
    return monthly_cost(u1, u2, w, spec.tariff, spec.params.eta);
  };
  log.ref_cost = bill(log.ref_u);
  if (with_proposed) log.cost = bill(log.u);
  return log;
}

}  // namespace detail

/// Reference and proposed controllers side by side; the reference is solved
/// and advanced first at every step. One extra solve at the end of the window
/// records V(T) for both.
inline SimulationLog run_closed_loop(const ScenarioSpec& spec) {
  if (!spec.proposed) throw ConfigError("closed-loop comparison needs a proposed controller");
  return detail::simulate(spec, true);
}

/// Runs only the configured reference controller.
inline SimulationLog run_single_method(const ScenarioSpec& spec) {
  return detail::simulate(spec, false);
}

struct OracleResult {
  CostBreakdown cost;
  std::vector<ControlInput> inputs;
  std::vector<AugmentedState> states;
  lp::Status status = lp::Status::numerical_failure;
  int iterations = 0;
  double residual = 0.0;
};

/// Full-window LP: SOC and running peaks as per-step chain variables so the
/// constraint matrix stays banded.
inline lp::LinearProgram oracle_program(const ScenarioSpec& spec) {
  const MicrogridParams& P = spec.params;
  const double dt = spec.tariff.dt_hours;
  const double g = P.soc_gain(dt);
  const double lam = loss_factor(P.eta);
  const double B = P.bess_power_kw;
  const double x1 = P.soc_init;
  lp::LinearProgram lp;
  int s_prev = -1, y_prev = -1, z_prev = -1;
  int y_last = -1, z_last = -1;
  double c0 = 0.0;
  const bool with_op = spec.tariff.opdc_rate > 0.0;
  for (std::size_t k = 0; k < spec.T; ++k) {
    const std::size_t t = spec.start_step + k;
    const double c = spec.series.net(t);
    const double r = spec.tariff.rate(t) * dt;
    if (r < 0.0) throw BuildError("negative energy rate");
    const std::string id = std::to_string(k);
    const int p = lp.add_variable("p" + id, 0.0, B, r * (1.0 + lam));
    const int n = lp.add_variable("n" + id, 0.0, B, r * (lam - 1.0));
    c0 -= r * c;
    const int s = lp.add_variable("s" + id, (P.soc_min - x1) / g, (P.soc_max - x1) / g);
    std::vector<lp::Term> dyn{{s, 1.0}, {p, -1.0}, {n, 1.0}};
    if (s_prev >= 0) dyn.push_back({s_prev, -1.0});
    lp.add_row("dyn" + id, dyn, 0.0, 0.0);
    s_prev = s;
    const bool lo_red = -B - c >= P.grid_lo, hi_red = B - c <= P.grid_hi;
    if (!(lo_red && hi_red))
      lp.add_row("grid" + id, {{p, 1.0}, {n, -1.0}}, lo_red ? -lp::kInf : c + P.grid_lo,
                 hi_red ? lp::kInf : c + P.grid_hi);
    const int y = lp.add_variable("y" + id, 0.0, lp::kInf);
    lp.add_row("peak" + id, {{y, 1.0}, {p, -1.0}, {n, 1.0}}, -c, lp::kInf);
    if (y_prev >= 0) lp.add_row("ychain" + id, {{y, 1.0}, {y_prev, -1.0}}, 0.0, lp::kInf);
    y_prev = y_last = y;
    if (with_op && onpeak_indicator(t, spec.tariff)) {
      const int z = lp.add_variable("z" + id, 0.0, lp::kInf);
      lp.add_row("onpeak" + id, {{z, 1.0}, {p, -1.0}, {n, 1.0}}, -c, lp::kInf);
      if (z_prev >= 0) lp.add_row("zchain" + id, {{z, 1.0}, {z_prev, -1.0}}, 0.0, lp::kInf);
      z_prev = z_last = z;
    }
  }
  lp.add_cost(y_last, spec.tariff.ncdc_rate);
  if (z_last >= 0) lp.add_cost(z_last, spec.tariff.opdc_rate);
  lp.set_cost_constant(c0);
  return lp;
}

/// Perfect-foresight optimum of the window's bill (lower bound for any controller).
inline OracleResult oracle_full_window(const ScenarioSpec& spec,
                                       const lp::InteriorPointOptions& opt = {}) {
  spec.params.validate();
  spec.tariff.validate();
  spec.series.validate();
  if (spec.T == 0) throw WindowError("billing window is empty");
  if (spec.series.size() < spec.start_step + spec.T) throw WindowError("data does not cover the window");
  const lp::LinearProgram prog = oracle_program(spec);
  const lp::Solution s = lp::solve_interior_point(prog, opt);
  OracleResult out;
  out.status = s.status;
  out.iterations = s.iterations;
  out.residual = s.max_primal_residual;
  if (s.status != lp::Status::optimal)
    throw InfeasibleError(std::string("oracle LP ") + lp::to_string(s.status));
  // variable layout per step: p, n, s, y [, z]
  std::vector<double> u1(spec.T), u2(spec.T);
  AugmentedState x{spec.params.soc_init, 0.0, 0.0};
  out.states.push_back(x);
  int col = 0;
  for (std::size_t k = 0; k < spec.T; ++k) {
    const std::size_t t = spec.start_step + k;
    u1[k] = s.x[col] - s.x[col + 1];
    u2[k] = u1[k] - spec.series.net(t);
    col += 4;
    if (spec.tariff.opdc_rate > 0.0 && onpeak_indicator(t, spec.tariff)) col += 1;
    out.inputs.push_back({u1[k], u2[k]});
    x = next_state(x, out.inputs.back(), t, spec.params, spec.tariff);
    out.states.push_back(x);
  }
  const BillingWindow w = make_billing_window(spec.tariff, spec.start_step, spec.T);
  out.cost = monthly_cost(u1, u2, w, spec.tariff, spec.params.eta);
  return out;
}

/// Repeats the billing window `times` times; the lookahead tail is appended once.
inline ScenarioSpec tile_scenario(const ScenarioSpec& spec, int times) {
  if (times < 1) throw InputError("tile count must be positive");
  ScenarioSpec out = spec;
  const std::size_t s0 = spec.start_step, T = spec.T;
  const std::size_t tail = spec.series.size() - (s0 + T);
  auto tile = [&](const std::vector<double>& v) {
    if (v.empty()) return v;
    std::vector<double> r(v.begin(), v.begin() + s0);
    for (int i = 0; i < times; ++i) r.insert(r.end(), v.begin() + s0, v.begin() + s0 + T);
    r.insert(r.end(), v.begin() + s0 + T, v.begin() + s0 + T + tail);
    return r;
  };
  out.series.pv_kw = tile(spec.series.pv_kw);
  out.series.load_kw = tile(spec.series.load_kw);
  out.series.energy_rate = tile(spec.series.energy_rate);
  if (spec.tariff.energy_rate.size() > 1) out.tariff.energy_rate = tile(spec.tariff.energy_rate);
  out.timestamps.clear();
  out.T = T * times;
  return out;
}

}  // namespace mgempc
