#include <gtest/gtest.h>

#include "mgempc/dynamics.hpp"
#include "test_util.hpp"

using namespace mgempc;
using mgempc::test_util::flat_series;

TEST(Dynamics, DefaultsMatchDesignTable) {
  const MicrogridParams p;
  EXPECT_EQ(p.bess_energy_kwh, 2500.0);
  EXPECT_EQ(p.bess_power_kw, 700.0);
  EXPECT_EQ(p.soc_min, 0.2);
  EXPECT_EQ(p.soc_max, 0.8);
  EXPECT_EQ(p.soc_init, 0.5);
  EXPECT_EQ(p.eta, 0.8);
}

TEST(Dynamics, NextStateUpdatesSocAndPeaks) {
  const MicrogridParams p;
  const TariffSchedule t;
  const AugmentedState x{0.5, 100.0, 40.0};
  // 700 kW for 15 min into 2500 kWh
  AugmentedState y = next_state(x, {700.0, 150.0}, 10, p, t);
  EXPECT_NEAR(y.x1, 0.5 + 175.0 / 2500.0, 1e-15);
  EXPECT_EQ(y.x2, 150.0);
  EXPECT_EQ(y.x3, 40.0);  // off-peak step
  y = next_state(x, {0.0, 80.0}, 70, p, t);
  EXPECT_EQ(y.x2, 100.0);
  EXPECT_EQ(y.x3, 80.0);  // on-peak step
}

TEST(Dynamics, AdvanceRejectsInadmissibleInputs) {
  const MicrogridParams p;
  const TariffSchedule t;
  const AugmentedState x{0.79, 0.0, 0.0};
  EXPECT_THROW(advance_augmented(x, {800.0, 0.0}, 0, p, t), DynamicsError);
  EXPECT_THROW(advance_augmented(x, {200.0, 0.0}, 0, p, t), DynamicsError);  // SOC above 0.8
  EXPECT_THROW(advance_augmented({0.2, 0, 0}, {-10.0, 0.0}, 0, p, t), DynamicsError);
  EXPECT_THROW(advance_augmented(x, {0.0, 2e4}, 0, p, t), DynamicsError);
  EXPECT_NO_THROW(advance_augmented(x, {100.0, 0.0}, 0, p, t));
}

TEST(Dynamics, FeasibleSetMidSoc) {
  const MicrogridParams p;
  const ExogenousSeries s = flat_series(4, 0.0, 0.0);
  const Interval I = feasible_input_set({0.5, 0, 0}, 0, p, s, 0.25);
  EXPECT_EQ(I.lo, -700.0);
  EXPECT_EQ(I.hi, 700.0);
}

TEST(Dynamics, FeasibleSetNearSocCeiling) {
  const MicrogridParams p;
  const ExogenousSeries s = flat_series(4, 0.0, 0.0);
  // 0.01 of 2500 kWh in a quarter hour
  const Interval I = feasible_input_set({0.79, 0, 0}, 0, p, s, 0.25);
  EXPECT_NEAR(I.hi, 100.0, 1e-9);
  EXPECT_EQ(I.lo, -700.0);
}

TEST(Dynamics, FeasibleSetEmptyThrows) {
  MicrogridParams p;
  p.grid_hi = 100.0;
  p.grid_lo = -100.0;
  const ExogenousSeries s = flat_series(2, 0.0, 1000.0);  // needs 1000 kW of supply
  EXPECT_THROW(feasible_input_set({0.5, 0, 0}, 0, p, s, 0.25), InfeasibleError);
}

TEST(Dynamics, PowerBalanceResidual) {
  const ExogenousSeries s = flat_series(1, 100.0, 300.0);
  EXPECT_EQ(power_balance_residual({50.0, 250.0}, 0, s), 0.0);
  EXPECT_EQ(power_balance_residual({50.0, 240.0}, 0, s), 10.0);
}

TEST(Dynamics, TerminalLawReplaysReferencePower) {
  const MicrogridParams p;
  const ExogenousSeries s = flat_series(2, 0.0, 50.0);  // c = -50
  const ControlInput u = terminal_control_law({0.5, 0, 0}, 0, TerminalLaw::reference_replay, 150.0, s, p, 0.25);
  EXPECT_EQ(u.u1, 150.0);
  EXPECT_EQ(u.u2, 200.0);
  const ControlInput r = terminal_control_law({0.5, 0, 0}, 0, TerminalLaw::relaxed, 150.0, s, p, 0.25);
  EXPECT_EQ(r.u1, 0.0);
  EXPECT_EQ(r.u2, 50.0);
  EXPECT_THROW(terminal_control_law({0.5, 0, 0}, 0, TerminalLaw::reference_replay, 900.0, s, p, 0.25),
               DynamicsError);
}

TEST(Dynamics, ParamsValidate) {
  MicrogridParams p;
  p.soc_init = 0.9;
  EXPECT_THROW(p.validate(), InputError);
  p = {};
  p.eta = 0.0;
  EXPECT_THROW(p.validate(), InputError);
  p = {};
  p.bess_power_kw = 0.0;
  EXPECT_NO_THROW(p.validate());
}
