#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mgempc/io.hpp"

using namespace mgempc;

TEST(Synth, ProfileFormula) {
  const io::DataSet d = io::synth_month(1, 0.25);
  ASSERT_EQ(d.series.size(), 96u);
  const double pi = std::acos(-1.0);
  EXPECT_EQ(d.series.pv_kw[0], 0.0);
  EXPECT_NEAR(d.series.pv_kw[48], 400.0, 1e-12);  // noon
  const double load_1830 = 300.0 + 150.0 * std::sin(2.0 * pi * 9.5 / 24.0) + 250.0;
  EXPECT_NEAR(d.series.load_kw[74], load_1830, 1e-9);
  EXPECT_EQ(d.timestamps[74], "2019-01-01T18:30:00");
  // the daily load peak falls inside the on-peak window
  std::size_t arg = 0;
  for (std::size_t t = 0; t < 96; ++t)
    if (d.series.load_kw[t] > d.series.load_kw[arg]) arg = t;
  EXPECT_GE(arg, 64u);
  EXPECT_LT(arg, 84u);
}

TEST(Synth, CsvRoundTripIsBitExact) {
  const io::DataSet d = io::synth_month(3, 0.25, 96);
  std::stringstream ss;
  io::write_data(ss, d);
  const io::DataSet r = io::read_data(ss);
  EXPECT_EQ(r.series.pv_kw, d.series.pv_kw);
  EXPECT_EQ(r.series.load_kw, d.series.load_kw);
  EXPECT_EQ(r.timestamps, d.timestamps);
  EXPECT_EQ(r.dt_hours, 0.25);
}

TEST(Io, FormatRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 12487.67123456789}) {
    double back = 0.0;
    ASSERT_TRUE(io::parse_double(io::fmt(v), back));
    EXPECT_EQ(back, v);
  }
  long long s = 0;
  ASSERT_TRUE(io::parse_timestamp("2019-01-31T23:45:00", s));
  EXPECT_EQ(io::format_timestamp(s), "2019-01-31T23:45:00");
  EXPECT_FALSE(io::parse_timestamp("2019-13-01T00:00:00", s));
}

namespace {

std::string csv(const std::string& rows) { return "timestamp,pv_kw,load_kw\n" + rows; }

int error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    io::read_data(in);
  } catch (const ParseError& e) {
    return static_cast<int>(e.line());
  }
  return -1;
}

}  // namespace

TEST(Io, ReadDataRejectsBadRows) {
  const std::string ok = "2019-01-01T00:00:00,0,100\n2019-01-01T00:15:00,0,110\n";
  std::istringstream in(csv(ok));
  EXPECT_EQ(io::read_data(in).series.size(), 2u);
  EXPECT_EQ(error_line(csv(ok + "2019-01-01T00:15:00,0,100\n")), 4);  // duplicate
  EXPECT_EQ(error_line(csv(ok + "2019-01-01T00:45:00,0,100\n")), 4);  // gap
  EXPECT_EQ(error_line(csv(ok + "2019-01-01T00:30:00,-1,100\n")), 4);  // negative pv
  EXPECT_EQ(error_line(csv(ok + "2019-01-01T00:30:00,abc,100\n")), 4);
  EXPECT_EQ(error_line(csv(ok + "2019-01-01T00:30:00,0\n")), 4);
  EXPECT_EQ(error_line("time,pv,load\n" + ok), 1);
}

TEST(Io, OptionalEnergyRateColumn) {
  std::istringstream in(
      "timestamp,pv_kw,load_kw,energy_rate\n2019-01-01T00:00:00,0,100,0.2\n2019-01-01T00:15:00,0,100,0.3\n");
  const io::DataSet d = io::read_data(in);
  EXPECT_EQ(d.series.energy_rate, (std::vector<double>{0.2, 0.3}));
}

TEST(Config, DefaultsMatchDesignTable) {
  std::istringstream in("");
  const io::AppConfig c = io::parse_config(in);
  EXPECT_EQ(c.tariff.ncdc_rate, 24.48);
  EXPECT_EQ(c.tariff.opdc_rate, 19.19);
  EXPECT_EQ(c.tariff.energy_rate, std::vector<double>{0.1});
  EXPECT_EQ(c.params.eta, 0.8);
  EXPECT_EQ(c.params.bess_energy_kwh, 2500.0);
  EXPECT_EQ(c.params.bess_power_kw, 700.0);
  EXPECT_EQ(c.params.soc_min, 0.2);
  EXPECT_EQ(c.params.soc_max, 0.8);
  EXPECT_EQ(c.params.soc_init, 0.5);
  EXPECT_EQ(c.horizon_N, 96);
  EXPECT_EQ(c.window_days, 31);
}

TEST(Config, ParsesKeys) {
  std::istringstream in(
      "[tariff]\nopdc_rate = 0\n[bess]\npower_kw = 500\n[horizon]\nsteps_N = 48\n"
      "[reference]\nmethod = track_ref\ncase = iii\n[proposed]\nmethod = choice3\n");
  const io::AppConfig c = io::parse_config(in);
  EXPECT_EQ(c.tariff.opdc_rate, 0.0);
  EXPECT_EQ(c.params.bess_power_kw, 500.0);
  EXPECT_EQ(c.horizon_N, 48);
  EXPECT_EQ(c.reference.method, Method::track_ref);
  EXPECT_EQ(c.reference.terminal_case, TerminalCase::iii);
  EXPECT_EQ(c.proposed, Method::choice3);
}

TEST(Config, RejectsBadInput) {
  auto bad = [](const std::string& text) {
    std::istringstream in(text);
    EXPECT_THROW(io::parse_config(in), ConfigError) << text;
  };
  bad("[tariff]\nncdc = 3\n");
  bad("[colour]\nx = 1\n");
  bad("[bess]\neta = fast\n");
  bad("[bess]\nsoc_init = 0.95\n");
  bad("[reference]\nmethod = choice2\n");
  bad("[proposed]\nmethod = std_ref\n");
  bad("[horizon]\nsteps_N = 9.5\n");
  bad("[reference]\ncase = iv\n");
}

TEST(Scenario, WindowNeedsLookahead) {
  io::AppConfig cfg;
  cfg.window_days = 2;
  const io::DataSet short_data = io::synth_month(2, 0.25, 10);
  EXPECT_THROW(io::make_scenario(cfg, short_data, Method::choice2), WindowError);
  const io::DataSet data = io::synth_month(2, 0.25, 96);
  const ScenarioSpec s = io::make_scenario(cfg, data, Method::choice2);
  EXPECT_EQ(s.T, 192u);
  cfg.window_start = "2019-01-01T00:07:00";
  EXPECT_THROW(io::make_scenario(cfg, data, Method::choice2), WindowError);
}

TEST(Scenario, LogHasOneRowPerStep) {
  io::AppConfig cfg;
  cfg.window_days = 1;
  cfg.horizon_N = 8;
  const io::DataSet data = io::synth_month(1, 0.25, 8);
  const ScenarioSpec spec = io::make_scenario(cfg, data, Method::choice2);
  const SimulationLog log = run_closed_loop(spec);
  std::ostringstream os;
  io::write_log(os, log, spec);
  const std::string s = os.str();
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 97);
  EXPECT_EQ(s.rfind("timestamp,pv,load,ref_u1", 0), 0u);
}
