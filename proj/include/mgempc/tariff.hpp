#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mgempc/error.hpp"

namespace mgempc {

/// Energy rate plus non-coincident (NCDC) and on-peak (OPDC) demand charges.
/// Step t covers [start + t*dt, start + (t+1)*dt); all step indices are global.
struct TariffSchedule {
  std::vector<double> energy_rate{0.1};  // $/kWh, a single entry means a flat rate
  double ncdc_rate = 24.48;              // $/kW
  double opdc_rate = 19.19;              // $/kW
  double onpeak_start_hour = 16.0;       // on-peak window is [start, end) local time
  double onpeak_end_hour = 21.0;
  double dt_hours = 0.25;
  long start_second_of_day = 0;  // local time of step 0

  double rate(std::size_t t) const {
    if (energy_rate.size() == 1) return energy_rate.front();
    if (t >= energy_rate.size())
      throw InputError("energy rate series too short: step " + std::to_string(t));
    return energy_rate[t];
  }

  long dt_seconds() const { return std::lround(dt_hours * 3600.0); }

  void validate() const {
    if (energy_rate.empty()) throw InputError("energy rate is empty");
    for (double r : energy_rate)
      if (!std::isfinite(r)) throw InputError("energy rate is not finite");
    if (!(ncdc_rate >= 0.0) || !(opdc_rate >= 0.0) || !std::isfinite(ncdc_rate) ||
        !std::isfinite(opdc_rate))
      throw InputError("demand charge rates must be finite and non-negative");
    if (!(dt_hours > 0.0) || !std::isfinite(dt_hours)) throw InputError("dt must be positive");
    if (std::abs(dt_hours * 3600.0 - static_cast<double>(dt_seconds())) > 1e-6)
      throw InputError("dt must be a whole number of seconds");
    if (!(onpeak_start_hour >= 0.0 && onpeak_start_hour <= onpeak_end_hour &&
          onpeak_end_hour <= 24.0))
      throw InputError("on-peak window must satisfy 0 <= start <= end <= 24");
    if (start_second_of_day < 0 || start_second_of_day >= 86400)
      throw InputError("start time of day out of range");
  }
};

/// beta(t): 1 when step t starts inside the on-peak window.
inline int onpeak_indicator(std::size_t t, const TariffSchedule& tariff) {
  const long long dt = tariff.dt_seconds();
  const long long sod =
      (static_cast<long long>(tariff.start_second_of_day) + static_cast<long long>(t) * dt) % 86400;
  const long long lo = std::llround(tariff.onpeak_start_hour * 3600.0);
  const long long hi = std::llround(tariff.onpeak_end_hour * 3600.0);
  return (sod >= lo && sod < hi) ? 1 : 0;
}

/// Peak-charge weights a(t), b(t). The billing identity needs a(T) = b(T) = 1.
struct PeakScaling {
  std::function<double(std::size_t)> a;
  std::function<double(std::size_t)> b;
  std::string kind = "constant";

  static PeakScaling constant() {
    return {[](std::size_t) { return 1.0; }, [](std::size_t) { return 1.0; }, "constant"};
  }

  /// a(t) = b(t) = (t - start)/T inside the window, 1 afterwards.
  static PeakScaling ramp(std::size_t start, std::size_t T) {
    auto f = [start, T](std::size_t t) {
      if (t <= start) return 0.0;
      if (t >= start + T) return 1.0;
      return static_cast<double>(t - start) / static_cast<double>(T);
    };
    return {f, f, "ramp"};
  }

  /// Checks a(end) = b(end) = 1 and non-negativity over [start, end].
  void validate(std::size_t start, std::size_t end) const {
    if (!a || !b) throw InputError("peak scaling functions are unset");
    for (std::size_t t = start; t <= end; ++t)
      if (!(a(t) >= 0.0) || !(b(t) >= 0.0) || !std::isfinite(a(t)) || !std::isfinite(b(t)))
        throw InputError("peak scaling must be finite and non-negative");
    if (a(end) != 1.0 || b(end) != 1.0)
      throw InputError("peak scaling must equal 1 at the end of the billing window");
  }
};

struct BillingWindow {
  std::size_t start_step = 0;
  std::size_t length = 0;           // T
  std::vector<int> onpeak_mask;     // beta over the window, size T
};

inline BillingWindow make_billing_window(const TariffSchedule& tariff, std::size_t start,
                                         std::size_t length) {
  if (length == 0) throw WindowError("billing window must contain at least one step");
  BillingWindow w{start, length, {}};
  w.onpeak_mask.resize(length);
  for (std::size_t k = 0; k < length; ++k) w.onpeak_mask[k] = onpeak_indicator(start + k, tariff);
  return w;
}

struct CostBreakdown {
  double energy_cost = 0.0;
  double bess_loss_cost = 0.0;
  double ncdc = 0.0;
  double opdc = 0.0;
  double total = 0.0;
};

/// loss factor (1 - eta)/2 applied to |u1|
inline double loss_factor(double eta) { return 0.5 * (1.0 - eta); }

/// Bill of a window. u1 is BESS power (positive charging), u2 grid import.
inline CostBreakdown monthly_cost(std::span<const double> u1, std::span<const double> u2,
                                  const BillingWindow& window, const TariffSchedule& tariff,
                                  double eta) {
  if (u1.size() != window.length || u2.size() != window.length)
    throw InputError("monthly_cost: trajectory length does not match the window");
  if (window.onpeak_mask.size() != window.length)
    throw InputError("monthly_cost: on-peak mask length does not match the window");
  CostBreakdown c;
  const double lf = loss_factor(eta);
  double peak = 0.0;
  double onpeak = 0.0;
  for (std::size_t k = 0; k < window.length; ++k) {
    const double r = tariff.rate(window.start_step + k) * tariff.dt_hours;
    c.energy_cost += r * u2[k];
    c.bess_loss_cost += r * lf * std::abs(u1[k]);
    peak = std::max(peak, u2[k]);
    if (window.onpeak_mask[k]) onpeak = std::max(onpeak, u2[k]);
  }
  c.ncdc = tariff.ncdc_rate * peak;
  c.opdc = tariff.opdc_rate * onpeak;
  c.total = c.energy_cost + c.bess_loss_cost + c.ncdc + c.opdc;
  return c;
}

}  // namespace mgempc
