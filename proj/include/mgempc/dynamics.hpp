#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mgempc/error.hpp"
#include "mgempc/tariff.hpp"

namespace mgempc {

struct MicrogridParams {
  double bess_energy_kwh = 2500.0;
  double bess_power_kw = 700.0;
  double soc_min = 0.2;
  double soc_max = 0.8;
  double soc_init = 0.5;
  double eta = 0.8;
  double grid_lo = -10000.0;  // kW, most negative admissible grid power (export)
  double grid_hi = 10000.0;   // kW, largest admissible import

  /// SOC change per kW of charging power over one step.
  double soc_gain(double dt_hours) const { return dt_hours / bess_energy_kwh; }

  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(bess_energy_kwh) || bess_energy_kwh <= 0.0)
      throw InputError("BESS energy capacity must be positive");
    if (!finite(bess_power_kw) || bess_power_kw < 0.0)
      throw InputError("BESS power rating must be non-negative");
    if (!(soc_min >= 0.0 && soc_min <= soc_max && soc_max <= 1.0))
      throw InputError("SOC bounds must satisfy 0 <= min <= max <= 1");
    if (!(soc_init >= soc_min && soc_init <= soc_max))
      throw InputError("initial SOC outside the SOC bounds");
    if (!(eta > 0.0 && eta <= 1.0)) throw InputError("round-trip efficiency must lie in (0, 1]");
    if (!finite(grid_lo) || !finite(grid_hi) || grid_lo > grid_hi)
      throw InputError("grid limits must be finite with lo <= hi");
  }
};

/// PV and load power per step (kW). c(t) = pv - load is the net generation.
struct ExogenousSeries {
  std::vector<double> pv_kw;
  std::vector<double> load_kw;
  std::vector<double> energy_rate;  // optional per-step $/kWh, empty when absent

  std::size_t size() const { return pv_kw.size(); }

  double net(std::size_t t) const {
    if (t >= pv_kw.size()) throw InputError("exogenous series too short: step " + std::to_string(t));
    return pv_kw[t] - load_kw[t];
  }

  void validate() const {
    if (pv_kw.size() != load_kw.size()) throw InputError("pv and load series differ in length");
    if (!energy_rate.empty() && energy_rate.size() != pv_kw.size())
      throw InputError("energy rate series length differs from pv/load");
    for (std::size_t t = 0; t < pv_kw.size(); ++t)
      if (!std::isfinite(pv_kw[t]) || !std::isfinite(load_kw[t]))
        throw InputError("non-finite pv/load value at step " + std::to_string(t));
  }
};

/// x1: SOC, x2: running peak grid import, x3: running on-peak import.
struct AugmentedState {
  double x1 = 0.5;
  double x2 = 0.0;
  double x3 = 0.0;
  bool operator==(const AugmentedState&) const = default;
};

/// u1: BESS power (positive charging), u2: grid import.
struct ControlInput {
  double u1 = 0.0;
  double u2 = 0.0;
  bool operator==(const ControlInput&) const = default;
};

inline constexpr double kSocTol = 1e-9;
inline constexpr double kPowerTol = 1e-6;

/// Pure state update, no admissibility checks.
inline AugmentedState next_state(const AugmentedState& x, const ControlInput& u, std::size_t t,
                                 const MicrogridParams& p, const TariffSchedule& tariff) {
  AugmentedState y;
  y.x1 = x.x1 + p.soc_gain(tariff.dt_hours) * u.u1;
  y.x2 = std::max(x.x2, u.u2);
  y.x3 = std::max(x.x3, onpeak_indicator(t, tariff) ? u.u2 : 0.0);
  return y;
}

/// State update that rejects inputs or successors outside the admissible set.
inline AugmentedState advance_augmented(const AugmentedState& x, const ControlInput& u,
                                        std::size_t t, const MicrogridParams& p,
                                        const TariffSchedule& tariff) {
  const std::string at = " at step " + std::to_string(t);
  if (!std::isfinite(u.u1) || !std::isfinite(u.u2)) throw DynamicsError("non-finite input" + at);
  if (std::abs(u.u1) > p.bess_power_kw + kPowerTol)
    throw DynamicsError("BESS power bound violated" + at);
  if (u.u2 < p.grid_lo - kPowerTol || u.u2 > p.grid_hi + kPowerTol)
    throw DynamicsError("grid power bound violated" + at);
  AugmentedState y = next_state(x, u, t, p, tariff);
  if (y.x1 < p.soc_min - kSocTol) throw DynamicsError("SOC lower bound violated" + at);
  if (y.x1 > p.soc_max + kSocTol) throw DynamicsError("SOC upper bound violated" + at);
  return y;
}

/// |u2 - (u1 - c(t))|
inline double power_balance_residual(const ControlInput& u, std::size_t t,
                                     const ExogenousSeries& s) {
  return std::abs(u.u2 - (u.u1 - s.net(t)));
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Admissible BESS power at (x, t); the grid power follows as u1 - c(t).
inline Interval feasible_input_set(const AugmentedState& x, std::size_t t,
                                   const MicrogridParams& p, const ExogenousSeries& s,
                                   double dt_hours) {
  const double c = s.net(t);
  const double g = p.soc_gain(dt_hours);
  Interval I;
  I.lo = std::max({-p.bess_power_kw, c + p.grid_lo, (p.soc_min - x.x1) / g});
  I.hi = std::min({p.bess_power_kw, c + p.grid_hi, (p.soc_max - x.x1) / g});
  if (I.lo > I.hi + kPowerTol)
    throw InfeasibleError("empty admissible input set", static_cast<long>(t));
  if (I.lo > I.hi) I.lo = I.hi = 0.5 * (I.lo + I.hi);
  return I;
}

enum class TerminalLaw { reference_replay, relaxed };

/// Input applied at the end of a shifted horizon. reference_replay repeats the
/// reference BESS power (paired with the SOC equality terminal constraint);
/// relaxed applies a fixed BESS power, zero by default.
inline ControlInput terminal_control_law(const AugmentedState& x, std::size_t t, TerminalLaw law,
                                         double ref_u1, const ExogenousSeries& s,
                                         const MicrogridParams& p, double dt_hours,
                                         double relaxed_u1 = 0.0) {
  (void)x;
  (void)dt_hours;
  const double u1 = law == TerminalLaw::reference_replay ? ref_u1 : relaxed_u1;
  ControlInput u{u1, u1 - s.net(t)};
  if (u.u2 < p.grid_lo - kPowerTol || u.u2 > p.grid_hi + kPowerTol)
    throw DynamicsError("terminal law leaves the grid power bounds at step " + std::to_string(t));
  if (std::abs(u.u1) > p.bess_power_kw + kPowerTol)
    throw DynamicsError("terminal law exceeds the BESS power rating at step " + std::to_string(t));
  return u;
}

}  // namespace mgempc
