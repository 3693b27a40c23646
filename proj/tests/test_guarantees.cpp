#include <gtest/gtest.h>

#include <random>

#include "mgempc/guarantees.hpp"
#include "test_util.hpp"

using namespace mgempc;

namespace {

// Second, independent transcription of the terminal-condition RHS.
double req_oracle(bool choice3, double ef, double er, const double A1[4], const double A2[3],
                  const double B1[4], const double B2[3], double rnc, double rop) {
  // A1: tau, tau+1, tau-N+1, tau-N+2; A2: tau-N, tau-N+1, tau-N+2
  auto part = [&](const double* X1, const double* X2) {
    const double up = choice3 ? X1[3] : X1[1];
    const double dn = choice3 ? X1[2] : X1[0];
    double v = X1[1] - X1[0];
    v += (up > X2[2] ? up : X2[2]);
    v -= (dn > X2[1] ? dn : X2[1]);
    v += X2[0] - X2[2];
    return v;
  };
  return (ef - er) + rnc * part(A1, A2) + rop * part(B1, B2);
}

}  // namespace

TEST(Guarantees, RequiredIncrementZeroCases) {
  const PeakTerms z;
  EXPECT_EQ(required_h_increment(TerminalAssumption::assum7, 0.0, 0.0, z, z, 0.0, 0.0), 0.0);
  // constant peaks everywhere and equal energy terms cancel term by term
  const PeakTerms c{50, 50, 50, 50, 50, 50, 50};
  for (auto m : {TerminalAssumption::assum6, TerminalAssumption::assum7, TerminalAssumption::b1})
    EXPECT_EQ(required_h_increment(m, 3.5, 3.5, c, c, 24.48, 19.19), 0.0);
}

TEST(Guarantees, RequiredIncrementMatchesIndependentFormula) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 500.0);
  for (int trial = 0; trial < 200; ++trial) {
    double A1[4], A2[3], B1[4], B2[3];
    for (double* p : {A1, B1})
      for (int i = 0; i < 4; ++i) p[i] = u(rng);
    for (double* p : {A2, B2})
      for (int i = 0; i < 3; ++i) p[i] = u(rng);
    const double ef = u(rng) / 10.0, er = u(rng) / 10.0;
    const PeakTerms nc{A1[0], A1[1], A1[2], A1[3], A2[0], A2[1], A2[2]};
    const PeakTerms op{B1[0], B1[1], B1[2], B1[3], B2[0], B2[1], B2[2]};
    for (bool c3 : {false, true}) {
      const auto mode = c3 ? TerminalAssumption::b1 : TerminalAssumption::assum7;
      EXPECT_NEAR(required_h_increment(mode, ef, er, nc, op, 24.48, 19.19),
                  req_oracle(c3, ef, er, A1, A2, B1, B2, 24.48, 19.19), 1e-9);
    }
  }
}

TEST(Guarantees, AssumptionPerMethod) {
  EXPECT_EQ(assumption_for(Method::choice1), TerminalAssumption::assum6);
  EXPECT_EQ(assumption_for(Method::choice2), TerminalAssumption::assum7);
  EXPECT_EQ(assumption_for(Method::choice3), TerminalAssumption::b1);
}

TEST(Guarantees, ReferenceOnlyLogIsRejected) {
  const ScenarioSpec spec = test_util::short_scenario(1, 8, Method::std_ref, std::nullopt);
  const SimulationLog log = run_single_method(spec);
  EXPECT_THROW(check_guarantees(log, spec), LogError);
}

class ShortClosedLoop : public ::testing::TestWithParam<Method> {};

TEST_P(ShortClosedLoop, DecreaseBoundAndShiftedFeasibility) {
  const Method m = GetParam();
  const Method ref = m == Method::choice3 ? Method::track_ref : Method::std_ref;
  const ScenarioSpec spec = test_util::short_scenario(1, 24, ref, m);
  const SimulationLog log = run_closed_loop(spec);
  ASSERT_EQ(log.x.size(), spec.T + 1);
  ASSERT_EQ(log.ref_x.size(), spec.T + 2);
  const GuaranteeReport rep = check_guarantees(log, spec);
  EXPECT_TRUE(rep.decrease_ok) << rep.max_r;
  EXPECT_LE(rep.max_r, kDecreaseTol);
  // the summed decrease certifies the bound that carries the h increments
  EXPECT_TRUE(rep.bound_h_ok);
  EXPECT_LE(rep.g, rep.eps_h + kBoundTol);
  EXPECT_TRUE(std::isfinite(rep.H));
  EXPECT_TRUE(rep.warnings.empty());
  std::vector<std::size_t> steps;
  for (std::size_t k = 0; k < log.T; k += 7) steps.push_back(k);
  for (double v : check_shifted_feasibility(log, spec, steps)) EXPECT_LE(v, 1e-6);
  for (const SolveDiag& d : log.diag) EXPECT_LE(d.epigraph_gap, 1e-6);
}

INSTANTIATE_TEST_SUITE_P(Choices, ShortClosedLoop,
                         ::testing::Values(Method::choice1, Method::choice2, Method::choice3),
                         [](const auto& info) { return to_string(info.param); });

TEST(Guarantees, MismatchedAssumptionWarns) {
  const ScenarioSpec spec = test_util::short_scenario(1, 12, Method::std_ref, Method::choice2);
  const SimulationLog log = run_closed_loop(spec);
  const GuaranteeReport rep = check_guarantees(log, spec, TerminalAssumption::b1);
  EXPECT_FALSE(rep.warnings.empty());
}

TEST(Guarantees, TilingHalvesEpsilon) {
  const ScenarioSpec spec = test_util::short_scenario(1, 24, Method::std_ref, Method::choice2);
  const ScenarioSpec twice = tile_scenario(spec, 2);
  ASSERT_EQ(twice.T, 2 * spec.T);
  const GuaranteeReport a = check_guarantees(run_closed_loop(spec), spec);
  const GuaranteeReport b = check_guarantees(run_closed_loop(twice), twice);
  EXPECT_NEAR(b.eps / a.eps, 0.5, 0.005);
}
