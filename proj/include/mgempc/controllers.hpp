#pragma once

#include <string>
#include <vector>

#include "mgempc/dynamics.hpp"
#include "mgempc/error.hpp"
#include "mgempc/horizon.hpp"
#include "mgempc/tariff.hpp"

namespace mgempc {

enum class Method { std_ref, track_ref, choice1, choice2, choice3 };
enum class TerminalCase { i, ii, iii };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::std_ref: return "std_ref";
    case Method::track_ref: return "track_ref";
    case Method::choice1: return "choice1";
    case Method::choice2: return "choice2";
    case Method::choice3: return "choice3";
  }
  return "?";
}

inline std::string to_string(TerminalCase c) {
  return c == TerminalCase::i ? "i" : c == TerminalCase::ii ? "ii" : "iii";
}

inline Method parse_method(const std::string& s) {
  if (s == "std_ref") return Method::std_ref;
  if (s == "track_ref") return Method::track_ref;
  if (s == "choice1") return Method::choice1;
  if (s == "choice2") return Method::choice2;
  if (s == "choice3") return Method::choice3;
  throw ConfigError("unknown method '" + s + "'");
}

inline TerminalCase parse_case(const std::string& s) {
  if (s == "i") return TerminalCase::i;
  if (s == "ii") return TerminalCase::ii;
  if (s == "iii") return TerminalCase::iii;
  throw ConfigError("unknown terminal case '" + s + "'");
}

inline bool is_reference(Method m) { return m == Method::std_ref || m == Method::track_ref; }

struct ControllerConfig {
  Method method = Method::std_ref;
  int horizon_N = 96;
  TerminalCase terminal_case = TerminalCase::i;  // reference methods only
  bool track_opdp_floor = false;
  double case3_soc_floor = 0.5;

  void validate(const MicrogridParams& p) const {
    if (horizon_N < 1) throw ConfigError("horizon must be at least one step");
    if (terminal_case == TerminalCase::iii && is_reference(method) &&
        (case3_soc_floor < p.soc_min || case3_soc_floor > p.soc_max))
      throw ConfigError("case (iii) SOC floor outside the SOC bounds");
  }
};

/// Reference quantities consumed by the proposed controllers at step t:
/// x^r(t), the reference's applied input u^r(t), and x^r(t+1).
struct ReferenceInfo {
  AugmentedState x_ref_now;
  ControlInput u_ref_prev;
  AugmentedState x_ref_next;
};

struct ControllerContext {
  const MicrogridParams& params;
  const TariffSchedule& tariff;
  const ExogenousSeries& series;
  const PeakScaling& scaling;
};

inline void apply_terminal_case(HorizonSkeleton& sk, const ControllerConfig& cfg,
                                const AugmentedState& x0) {
  switch (cfg.terminal_case) {
    case TerminalCase::i: break;
    case TerminalCase::ii:
      sk.terminal = TerminalSocKind::equal;
      sk.terminal_soc = x0.x1;
      break;
    case TerminalCase::iii:
      sk.terminal = TerminalSocKind::at_least;
      sk.terminal_soc = cfg.case3_soc_floor;
      break;
  }
}

inline HorizonSkeleton std_ref_skeleton(const ControllerConfig& cfg, const AugmentedState& x0,
                                        std::size_t t0, const ControllerContext& ctx) {
  HorizonSkeleton sk;
  sk.label = "std_ref/" + to_string(cfg.terminal_case);
  const std::size_t tN = t0 + cfg.horizon_N;
  sk.nc_terminal_coef = ctx.tariff.ncdc_rate * ctx.scaling.a(tN);
  sk.op_terminal_coef = ctx.tariff.opdc_rate * ctx.scaling.b(tN);
  apply_terminal_case(sk, cfg, x0);
  return sk;
}

/// Ideal grid import: zero on-peak, the larger of the running peak and the
/// off-peak spread of the horizon's net load elsewhere.
inline std::vector<double> ideal_import_profile(std::span<const double> c,
                                                std::span<const int> onpeak, double x2_ref,
                                                bool opdp_floor = false, double x3_ref = 0.0) {
  int n_off = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    sum += c[k];
    if (!onpeak[k]) ++n_off;
  }
  if (n_off == 0) throw ConfigError("tracking profile needs at least one off-peak step in the horizon");
  const double spread = std::max(x2_ref, -sum / n_off);
  std::vector<double> u(c.size());
  for (std::size_t k = 0; k < c.size(); ++k)
    u[k] = onpeak[k] ? (opdp_floor ? std::max(0.0, x3_ref) : 0.0) : spread;
  return u;
}

inline HorizonSkeleton track_ref_skeleton(const ControllerConfig& cfg, const AugmentedState& x0,
                                          std::size_t t0, const ControllerContext& ctx) {
  HorizonSkeleton sk;
  sk.label = "track_ref/" + to_string(cfg.terminal_case);
  sk.tracking = true;
  const int N = cfg.horizon_N;
  std::vector<double> c(N);
  std::vector<int> on(N);
  const bool with_op = ctx.tariff.opdc_rate > 0.0;
  for (int k = 0; k < N; ++k) {
    c[k] = ctx.series.net(t0 + k);
    on[k] = with_op ? onpeak_indicator(t0 + k, ctx.tariff) : 0;
  }
  if (with_op && !(ctx.tariff.ncdc_rate > 0.0))
    throw ConfigError("tracking weights need a positive NCDC rate");
  const double w_on = with_op ? (ctx.tariff.ncdc_rate + ctx.tariff.opdc_rate) / ctx.tariff.ncdc_rate : 1.0;
  sk.track_target = ideal_import_profile(c, on, x0.x2, cfg.track_opdp_floor, x0.x3);
  for (int k = 0; k < N; ++k) sk.track_weight.push_back(on[k] ? w_on : 1.0);
  apply_terminal_case(sk, cfg, x0);
  return sk;
}

/// Terminal peak penalty plus the reference-anchored max terms.
inline HorizonSkeleton proposed_skeleton(const ControllerConfig& cfg, std::size_t t0,
                                         const ReferenceInfo& ref, const ControllerContext& ctx) {
  HorizonSkeleton sk;
  sk.label = to_string(cfg.method);
  const int N = cfg.horizon_N;
  const std::size_t tN = t0 + N;
  const double a1 = ctx.scaling.a(t0 + 1), b1 = ctx.scaling.b(t0 + 1);
  sk.nc_terminal_coef = ctx.tariff.ncdc_rate * ctx.scaling.a(tN);
  sk.op_terminal_coef = ctx.tariff.opdc_rate * ctx.scaling.b(tN);
  if (cfg.method == Method::choice3) {
    sk.max_terms.push_back({PeakKind::nc, 1, ctx.tariff.ncdc_rate, a1, a1 * ref.x_ref_next.x2});
    sk.max_terms.push_back({PeakKind::op, 1, ctx.tariff.opdc_rate, b1, b1 * ref.x_ref_next.x3});
  } else {
    sk.max_terms.push_back(
        {PeakKind::nc, N, ctx.tariff.ncdc_rate, ctx.scaling.a(tN), a1 * ref.x_ref_next.x2});
    sk.max_terms.push_back(
        {PeakKind::op, N, ctx.tariff.opdc_rate, ctx.scaling.b(tN), b1 * ref.x_ref_next.x3});
  }
  if (cfg.method == Method::choice1) {
    sk.terminal = TerminalSocKind::equal;
    sk.terminal_soc = ref.x_ref_now.x1;
  }
  return sk;
}

inline HorizonSkeleton controller_skeleton(const ControllerConfig& cfg, const AugmentedState& x0,
                                           std::size_t t0, const ControllerContext& ctx,
                                           const ReferenceInfo* ref) {
  switch (cfg.method) {
    case Method::std_ref: return std_ref_skeleton(cfg, x0, t0, ctx);
    case Method::track_ref: return track_ref_skeleton(cfg, x0, t0, ctx);
    default:
      if (!ref) throw ConfigError(to_string(cfg.method) + " needs reference information");
      return proposed_skeleton(cfg, t0, *ref, ctx);
  }
}

inline HorizonProblem build_controller_problem(const ControllerConfig& cfg,
                                               const AugmentedState& x0, std::size_t t0,
                                               const ControllerContext& ctx,
                                               const ReferenceInfo* ref, double tie_break = 0.0) {
  const HorizonSkeleton sk = controller_skeleton(cfg, x0, t0, ctx, ref);
  return build_horizon(sk, x0, t0, cfg.horizon_N, {ctx.params, ctx.tariff, ctx.series}, tie_break);
}

}  // namespace mgempc
