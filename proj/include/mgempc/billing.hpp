#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mgempc/dynamics.hpp"
#include "mgempc/error.hpp"
#include "mgempc/tariff.hpp"

namespace mgempc {

/// Per-step cost whose sum over a window reproduces the bill: energy and loss
/// terms plus the scaled increments of the two running peaks.
inline double stage_cost(const AugmentedState& x, const AugmentedState& x_next,
                         const ControlInput& u, std::size_t t, const TariffSchedule& tariff,
                         const PeakScaling& scaling, double eta) {
  const double r = tariff.rate(t) * tariff.dt_hours;
  return r * (u.u2 + loss_factor(eta) * std::abs(u.u1)) +
         tariff.ncdc_rate * (scaling.a(t + 1) * x_next.x2 - scaling.a(t) * x.x2) +
         tariff.opdc_rate * (scaling.b(t + 1) * x_next.x3 - scaling.b(t) * x.x3);
}

/// |sum of stage costs - monthly_cost| for a consistent trajectory that starts
/// with zero running peaks. states has T+1 entries, inputs T.
inline double decompose_check(std::span<const AugmentedState> states,
                              std::span<const ControlInput> inputs, const BillingWindow& window,
                              const TariffSchedule& tariff, const PeakScaling& scaling,
                              const MicrogridParams& params) {
  const std::size_t T = window.length;
  if (inputs.size() != T || states.size() != T + 1)
    throw InputError("decompose_check: need T inputs and T+1 states");
  if (states[0].x2 != 0.0 || states[0].x3 != 0.0)
    throw InputError("decompose_check: running peaks must start at zero");
  const std::size_t end = window.start_step + T;
  if (scaling.a(end) != 1.0 || scaling.b(end) != 1.0)
    throw InputError("decompose_check: peak scaling must equal 1 at the end of the window");
  std::vector<double> u1(T), u2(T);
  double sum = 0.0;
  for (std::size_t k = 0; k < T; ++k) {
    const std::size_t t = window.start_step + k;
    const AugmentedState y = next_state(states[k], inputs[k], t, params, tariff);
    const double scale = 1.0 + std::abs(states[k + 1].x2) + std::abs(states[k + 1].x3);
    if (std::abs(y.x1 - states[k + 1].x1) > 1e-9 || std::abs(y.x2 - states[k + 1].x2) > 1e-9 * scale ||
        std::abs(y.x3 - states[k + 1].x3) > 1e-9 * scale)
      throw InputError("decompose_check: states inconsistent with inputs at step " +
                       std::to_string(t));
    sum += stage_cost(states[k], states[k + 1], inputs[k], t, tariff, scaling, params.eta);
    u1[k] = inputs[k].u1;
    u2[k] = inputs[k].u2;
  }
  return std::abs(sum - monthly_cost(u1, u2, window, tariff, params.eta).total);
}

}  // namespace mgempc
