#pragma once

#include <random>
#include <vector>

#include "mgempc/io.hpp"

namespace mgempc::test_util {

inline ExogenousSeries flat_series(std::size_t n, double pv, double load) {
  ExogenousSeries s;
  s.pv_kw.assign(n, pv);
  s.load_kw.assign(n, load);
  return s;
}

inline ExogenousSeries random_series(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pv(0.0, 500.0), load(100.0, 800.0);
  ExogenousSeries s;
  for (std::size_t t = 0; t < n; ++t) {
    s.pv_kw.push_back(pv(rng));
    s.load_kw.push_back(load(rng));
  }
  return s;
}

/// Synthetic scenario of `days` days with a horizon of N steps.
inline ScenarioSpec short_scenario(int days, int N, Method reference, std::optional<Method> proposed,
                                   TerminalCase tc = TerminalCase::i) {
  io::AppConfig cfg;
  cfg.window_days = days;
  cfg.horizon_N = N;
  cfg.reference.method = reference;
  cfg.reference.terminal_case = tc;
  const io::DataSet d = io::synth_month(days, cfg.tariff.dt_hours, static_cast<std::size_t>(N));
  return io::make_scenario(cfg, d, proposed);
}

inline ReferenceInfo reference_at(const AugmentedState& xr, double ur1, std::size_t t,
                                  const ControllerContext& ctx) {
  const ControlInput u{ur1, ur1 - ctx.series.net(t)};
  return {xr, u, advance_augmented(xr, u, t, ctx.params, ctx.tariff)};
}

}  // namespace mgempc::test_util
