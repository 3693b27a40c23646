#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "mgempc/controllers.hpp"
#include "test_util.hpp"

using namespace mgempc;
using mgempc::test_util::flat_series;
using mgempc::test_util::random_series;

namespace {

struct Instance {
  MicrogridParams params;
  TariffSchedule tariff;
  ExogenousSeries series;
  PeakScaling scaling = PeakScaling::constant();
  AugmentedState x0;
  ReferenceInfo ref;
  std::size_t t0 = 0;

  ControllerContext ctx() const { return {params, tariff, series, scaling}; }
};

Instance random_instance(std::mt19937_64& rng, std::size_t t0_base = 50, std::size_t t0_span = 40) {
  Instance in;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  in.series = random_series(200, rng);
  in.t0 = t0_base + rng() % t0_span;  // by default horizons straddle the on-peak window
  in.x0 = {0.3 + 0.4 * u(rng), 400.0 * u(rng), 300.0 * u(rng)};
  const AugmentedState xr{0.3 + 0.4 * u(rng), 400.0 * u(rng), 300.0 * u(rng)};
  in.ref = test_util::reference_at(xr, 600.0 * (u(rng) - 0.5), in.t0, in.ctx());
  return in;
}

ControllerConfig config(Method m, int N, TerminalCase tc = TerminalCase::i) {
  ControllerConfig c;
  c.method = m;
  c.horizon_N = N;
  c.terminal_case = tc;
  return c;
}

const Method kAll[] = {Method::std_ref, Method::track_ref, Method::choice1, Method::choice2,
                       Method::choice3};

}  // namespace

TEST(Controllers, ParseNames) {
  EXPECT_EQ(parse_method("choice2"), Method::choice2);
  EXPECT_EQ(parse_case("iii"), TerminalCase::iii);
  EXPECT_THROW(parse_method("mpc"), ConfigError);
  EXPECT_THROW(parse_case("iv"), ConfigError);
}

TEST(Controllers, IdealImportSpreadsNetLoadOverOffPeak) {
  const std::vector<double> c(4, -100.0);
  const std::vector<int> on{0, 0, 1, 1};
  EXPECT_EQ(ideal_import_profile(c, on, 0.0), (std::vector<double>{200, 200, 0, 0}));
  EXPECT_EQ(ideal_import_profile(c, on, 300.0), (std::vector<double>{300, 300, 0, 0}));
  const std::vector<double> z(4, 0.0);
  EXPECT_EQ(ideal_import_profile(z, on, 0.0), (std::vector<double>{0, 0, 0, 0}));
  EXPECT_EQ(ideal_import_profile(c, on, 0.0, true, 50.0), (std::vector<double>{200, 200, 50, 50}));
  const std::vector<int> all_on(4, 1);
  EXPECT_THROW(ideal_import_profile(c, all_on, 0.0), ConfigError);
}

TEST(Controllers, TrackingWeights) {
  Instance in;
  in.series = flat_series(200, 0.0, 100.0);
  const HorizonSkeleton sk = track_ref_skeleton(config(Method::track_ref, 96), in.x0, 0, in.ctx());
  EXPECT_EQ(sk.track_weight[0], 1.0);
  EXPECT_NEAR(sk.track_weight[64], (24.48 + 19.19) / 24.48, 1e-15);
  EXPECT_EQ(sk.track_weight[84], 1.0);
  // the NCDC-only tariff has no on-peak steps
  in.tariff.opdc_rate = 0.0;
  const HorizonSkeleton nc = track_ref_skeleton(config(Method::track_ref, 96), in.x0, 0, in.ctx());
  for (double w : nc.track_weight) EXPECT_EQ(w, 1.0);
  EXPECT_NEAR(nc.track_target[64], 100.0, 1e-12);
}

TEST(Controllers, TerminalCaseRows) {
  Instance in;
  in.series = flat_series(50, 0.0, 100.0);
  in.x0 = {0.6, 0.0, 0.0};
  auto has_row = [&](TerminalCase tc, const char* name, double lo, double hi) {
    const HorizonProblem hp = build_controller_problem(config(Method::std_ref, 8, tc), in.x0, 0, in.ctx(), nullptr);
    for (const lp::Row& r : hp.program.lp.rows())
      if (r.name == name) return r.lower == lo && r.upper == hi;
    return false;
  };
  const double g = 0.25 / 2500.0;
  EXPECT_FALSE(has_row(TerminalCase::i, "soc_terminal", 0.0, 0.0));
  EXPECT_TRUE(has_row(TerminalCase::ii, "soc_terminal", 0.0, 0.0));
  EXPECT_TRUE(has_row(TerminalCase::iii, "soc_terminal", (0.5 - 0.6) / g, (0.8 - 0.6) / g));
}

TEST(Controllers, ZeroNetLoadTracksZeroImport) {
  Instance in;
  in.series = flat_series(50, 0.0, 0.0);
  const HorizonProblem hp = build_controller_problem(config(Method::track_ref, 8), {0.5, 0, 0}, 0, in.ctx(), nullptr);
  const SolveResult r = solve(hp);
  ASSERT_EQ(r.status, lp::Status::optimal);
  for (const ControlInput& u : r.inputs) EXPECT_NEAR(u.u2, 0.0, 1e-9);
}

TEST(Controllers, StdAndTrackAgreeOnFlatOffPeakHorizon) {
  Instance in;
  in.series = flat_series(50, 0.0, 300.0);
  const AugmentedState x0{0.5, 0.0, 0.0};
  const SolveResult s = solve(build_controller_problem(config(Method::std_ref, 16, TerminalCase::ii), x0, 0, in.ctx(), nullptr));
  const SolveResult t = solve(build_controller_problem(config(Method::track_ref, 16, TerminalCase::ii), x0, 0, in.ctx(), nullptr));
  ASSERT_EQ(s.status, lp::Status::optimal);
  ASSERT_EQ(t.status, lp::Status::optimal);
  EXPECT_NEAR(s.inputs[0].u1, t.inputs[0].u1, 1e-9);
  EXPECT_NEAR(s.inputs[0].u2, 300.0, 1e-9);
}

TEST(Controllers, ProposedNeedsReference) {
  Instance in;
  in.series = flat_series(50, 0.0, 0.0);
  EXPECT_THROW(build_controller_problem(config(Method::choice2, 8), in.x0, 0, in.ctx(), nullptr), ConfigError);
}

TEST(Horizon, BuildErrors) {
  Instance in;
  in.series = flat_series(10, 0.0, 0.0);
  HorizonSkeleton sk;
  sk.nc_terminal_coef = -1.0;
  EXPECT_THROW(build_horizon(sk, {}, 0, 4, {in.params, in.tariff, in.series}), BuildError);
  sk = {};
  sk.max_terms.push_back({PeakKind::nc, 1, 1.0, 1.0, std::nan("")});
  EXPECT_THROW(build_horizon(sk, {}, 0, 4, {in.params, in.tariff, in.series}), BuildError);
  sk = {};
  EXPECT_THROW(build_horizon(sk, {}, 8, 4, {in.params, in.tariff, in.series}), InputError);
  in.tariff.energy_rate = std::vector<double>(10, -0.1);
  EXPECT_THROW(build_horizon(sk, {}, 0, 4, {in.params, in.tariff, in.series}), BuildError);
}

TEST(Horizon, EpigraphExactOnRandomInstances) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const Instance in = random_instance(rng);
    for (Method m : kAll) {
      for (TerminalCase tc : {TerminalCase::i, TerminalCase::ii, TerminalCase::iii}) {
        if (!is_reference(m) && tc != TerminalCase::i) continue;
        const HorizonProblem hp = build_controller_problem(config(m, 24, tc), in.x0, in.t0, in.ctx(), &in.ref);
        const SolveResult r = solve(hp);
        ASSERT_EQ(r.status, lp::Status::optimal) << to_string(m) << " trial " << trial;
        EXPECT_LE(verify_epigraph_tightness(hp, r), 1e-6) << to_string(m) << " trial " << trial;
        EXPECT_LE(r.max_residual, 1e-6);
        EXPECT_EQ(r.states.size(), 25u);
      }
    }
  }
}

TEST(Horizon, Choice2NeverWorseThanChoice1) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    Instance in = random_instance(rng);
    in.x0.x1 = in.ref.x_ref_now.x1 + 0.02 * ((rng() % 3) - 1.0);
    const SolveResult a = solve(build_controller_problem(config(Method::choice1, 24), in.x0, in.t0, in.ctx(), &in.ref));
    const SolveResult b = solve(build_controller_problem(config(Method::choice2, 24), in.x0, in.t0, in.ctx(), &in.ref));
    ASSERT_EQ(a.status, lp::Status::optimal);
    ASSERT_EQ(b.status, lp::Status::optimal);
    EXPECT_LE(b.objective, a.objective + 1e-9 * (1.0 + std::abs(a.objective)));
  }
}

TEST(Horizon, GridSearchCannotBeatSolver) {
  // two-step horizons ending at or before the first on-peak step
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    Instance in = random_instance(rng, 60, 4);
    const double g = in.params.soc_gain(0.25);
    in.x0.x1 = std::clamp(in.ref.x_ref_now.x1 + 0.05, 0.2, 0.8);  // within two steps of the reference
    for (Method m : kAll) {
      const HorizonProblem hp = build_controller_problem(config(m, 2), in.x0, in.t0, in.ctx(), &in.ref);
      const SolveResult r = solve(hp);
      ASSERT_EQ(r.status, lp::Status::optimal);
      double best = lp::kInf;
      auto consider = [&](double a, double b) {
        const double u[2] = {a, b};
        const double x1a = in.x0.x1 + g * a, x1 = x1a + g * b;
        if (std::abs(a) > 700.0 || std::abs(b) > 700.0 + 1e-9) return;
        if (x1 < 0.2 || x1 > 0.8 || x1a < 0.2 || x1a > 0.8) return;
        best = std::min(best, evaluate_objective(hp, u));
      };
      const double step = 2.5;
      for (double a = -700.0; a <= 700.0; a += step) {
        if (m == Method::choice1) {
          // terminal SOC equality pins the second input
          consider(a, (in.ref.x_ref_now.x1 - in.x0.x1) / g - a);
          continue;
        }
        for (double b = -700.0; b <= 700.0; b += step) consider(a, b);
      }
      ASSERT_TRUE(std::isfinite(best)) << to_string(m);
      EXPECT_GE(best, r.objective - 1e-9 * (1.0 + std::abs(best))) << to_string(m);
      // the grid comes within one cell of the optimum
      EXPECT_LE(best - r.objective, 1e-3 * std::abs(r.objective) + 50.0) << to_string(m);
    }
  }
}

TEST(Horizon, GoldenProblemDump) {
  Instance in;
  in.series = flat_series(200, 50.0, 400.0);
  const HorizonProblem hp =
      build_controller_problem(config(Method::std_ref, 4, TerminalCase::ii), {0.6, 120.0, 0.0}, 62, in.ctx(), nullptr);
  std::ostringstream os;
  write_problem(os, hp);
  std::ifstream f(std::string(MGEMPC_TEST_DIR) + "/golden/std_ref_ii_N4.txt");
  ASSERT_TRUE(f.good());
  std::stringstream expected;
  expected << f.rdbuf();
  EXPECT_EQ(os.str(), expected.str());
}
