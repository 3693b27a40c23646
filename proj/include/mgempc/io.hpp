#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mgempc/controllers.hpp"
#include "mgempc/error.hpp"
#include "mgempc/guarantees.hpp"
#include "mgempc/simulation.hpp"

namespace mgempc::io {

/// Shortest decimal text that round-trips to the same double.
inline std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(*b))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(e[-1]))) --e;
  if (b == e) return false;
  if (*b == '+') ++b;
  auto r = std::from_chars(b, e, out);
  return r.ec == std::errc() && r.ptr == e;
}

/// Naive local ISO-8601 timestamp ("YYYY-MM-DDTHH:MM[:SS]") to seconds since 1970-01-01.
inline bool parse_timestamp(const std::string& s, long long& seconds) {
  int y, mo, d, h, mi, sec = 0;
  char sep;
  int n = std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d", &y, &mo, &d, &sep, &h, &mi, &sec);
  if (n < 6 || (sep != 'T' && sep != ' ')) return false;
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec > 59) return false;
  seconds = static_cast<long long>(sys_days{ymd}.time_since_epoch().count()) * 86400 + h * 3600 +
            mi * 60 + sec;
  return true;
}

inline std::string format_timestamp(long long seconds) {
  using namespace std::chrono;
  const long long days = seconds >= 0 ? seconds / 86400 : -((-seconds + 86399) / 86400);
  const long long sod = seconds - days * 86400;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()), int(sod / 3600), int((sod / 60) % 60),
                int(sod % 60));
  return buf;
}

struct DataSet {
  std::vector<std::string> timestamps;
  std::vector<long long> epoch;
  ExogenousSeries series;
  double dt_hours = 0.0;
  long start_second_of_day() const { return epoch.empty() ? 0 : static_cast<long>(((epoch[0] % 86400) + 86400) % 86400); }
};

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

/// Reads `timestamp,pv_kw,load_kw[,energy_rate]` with uniform spacing.
inline DataSet read_data(std::istream& in) {
  DataSet d;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty data file", 1);
  ++lineno;
  std::vector<std::string> head = split_csv(line);
  for (auto& h : head) h = trim(h);
  const bool with_rate = head.size() == 4 && head[3] == "energy_rate";
  if (head.size() < 3 || head[0] != "timestamp" || head[1] != "pv_kw" || head[2] != "load_kw" ||
      (head.size() == 4 && !with_rate) || head.size() > 4)
    throw ParseError("header must be timestamp,pv_kw,load_kw[,energy_rate]", lineno);
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> f = split_csv(line);
    if (f.size() != head.size()) throw ParseError("wrong number of columns", lineno);
    long long ts;
    if (!parse_timestamp(trim(f[0]), ts)) throw ParseError("bad timestamp '" + f[0] + "'", lineno);
    double pv, load, rate = 0.0;
    if (!parse_double(f[1], pv) || !parse_double(f[2], load) ||
        (with_rate && !parse_double(f[3], rate)))
      throw ParseError("non-numeric value", lineno);
    if (!std::isfinite(pv) || !std::isfinite(load) || !std::isfinite(rate))
      throw ParseError("non-finite value", lineno);
    if (pv < 0.0 || load < 0.0) throw ParseError("pv_kw and load_kw must be non-negative", lineno);
    if (d.epoch.size() >= 2 && ts - d.epoch.back() != d.epoch[1] - d.epoch[0])
      throw ParseError("non-uniform timestamp spacing", lineno);
    if (!d.epoch.empty() && ts <= d.epoch.back()) throw ParseError("timestamps must increase", lineno);
    d.timestamps.push_back(trim(f[0]));
    d.epoch.push_back(ts);
    d.series.pv_kw.push_back(pv);
    d.series.load_kw.push_back(load);
    if (with_rate) d.series.energy_rate.push_back(rate);
  }
  if (d.epoch.size() < 2) throw ParseError("need at least two data rows", lineno);
  d.dt_hours = static_cast<double>(d.epoch[1] - d.epoch[0]) / 3600.0;
  return d;
}

inline DataSet load_data(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open data file " + path);
  return read_data(in);
}

inline void write_data(std::ostream& os, const DataSet& d) {
  const bool with_rate = !d.series.energy_rate.empty();
  os << "timestamp,pv_kw,load_kw" << (with_rate ? ",energy_rate" : "") << "\n";
  for (std::size_t t = 0; t < d.series.size(); ++t) {
    os << d.timestamps[t] << "," << fmt(d.series.pv_kw[t]) << "," << fmt(d.series.load_kw[t]);
    if (with_rate) os << "," << fmt(d.series.energy_rate[t]);
    os << "\n";
  }
}

/// Deterministic synthetic profile: a daily load with an evening bump and a
/// cubed-sine PV curve. `extra_steps` rows are appended for lookahead.
inline DataSet synth_month(int days, double dt_hours, std::size_t extra_steps = 0,
                           const std::string& start = "2019-01-01T00:00:00") {
  if (days < 1) throw InputError("synth_month needs at least one day");
  if (!(dt_hours > 0.0) || std::abs(24.0 / dt_hours - std::round(24.0 / dt_hours)) > 1e-9)
    throw InputError("dt must divide a day");
  long long t0;
  if (!parse_timestamp(start, t0)) throw InputError("bad start timestamp " + start);
  const long long step = std::llround(dt_hours * 3600.0);
  const std::size_t n = static_cast<std::size_t>(std::llround(days * 24.0 / dt_hours)) + extra_steps;
  DataSet d;
  d.dt_hours = dt_hours;
  const double pi = std::acos(-1.0);
  for (std::size_t t = 0; t < n; ++t) {
    const long long ts = t0 + static_cast<long long>(t) * step;
    const double h = static_cast<double>(((ts % 86400) + 86400) % 86400) / 3600.0;
    const double load = 300.0 + 150.0 * std::sin(2.0 * pi * (h - 9.0) / 24.0) +
                        250.0 * std::exp(-std::pow((h - 18.5) / 1.5, 2));
    const double pv = 400.0 * std::pow(std::max(0.0, std::sin(pi * (h - 6.0) / 12.0)), 3);
    d.epoch.push_back(ts);
    d.timestamps.push_back(format_timestamp(ts));
    d.series.pv_kw.push_back(pv);
    d.series.load_kw.push_back(load);
  }
  return d;
}

/// Every configurable quantity with its default.
struct AppConfig {
  MicrogridParams params;
  TariffSchedule tariff;
  int horizon_N = 96;
  std::string scaling = "constant";
  std::string window_start;  // empty: first data row
  int window_days = 31;
  ControllerConfig reference;
  Method proposed = Method::choice2;
  SolverOptions solver;
  double tie_break = 0.0;
};

inline AppConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  AppConfig c;
  const std::map<std::string, std::set<std::string>> known{
      {"tariff", {"energy_rate", "ncdc_rate", "opdc_rate", "onpeak_start", "onpeak_end"}},
      {"bess", {"energy_kwh", "power_kw", "soc_min", "soc_max", "eta", "soc_init"}},
      {"grid", {"import_max", "export_max"}},
      {"horizon", {"dt_hours", "steps_N", "scaling"}},
      {"window", {"start", "days"}},
      {"reference", {"method", "case", "track_opdp_floor", "case3_soc_floor"}},
      {"proposed", {"method"}},
      {"solver", {"feasibility_tol", "optimality_tol", "max_iterations", "tie_break"}}};
  for (const auto& [sec, body] : tree) {
    auto it = known.find(sec);
    if (it == known.end()) throw ConfigError("unknown config section [" + sec + "]");
    for (const auto& [key, v] : body)
      if (!it->second.count(key)) throw ConfigError("unknown config key " + sec + "." + key);
  }
  auto num = [&](const char* path, double& dst) {
    if (auto v = tree.get_optional<std::string>(path)) {
      if (!parse_double(*v, dst)) throw ConfigError(std::string("config value ") + path + " is not a number");
    }
  };
  auto integer = [&](const char* path, int& dst) {
    double v = dst;
    num(path, v);
    if (v != std::floor(v)) throw ConfigError(std::string("config value ") + path + " must be an integer");
    dst = static_cast<int>(v);
  };
  auto text = [&](const char* path, std::string& dst) {
    if (auto v = tree.get_optional<std::string>(path)) dst = trim(*v);
  };
  double rate = c.tariff.energy_rate.front();
  num("tariff.energy_rate", rate);
  c.tariff.energy_rate = {rate};
  num("tariff.ncdc_rate", c.tariff.ncdc_rate);
  num("tariff.opdc_rate", c.tariff.opdc_rate);
  num("tariff.onpeak_start", c.tariff.onpeak_start_hour);
  num("tariff.onpeak_end", c.tariff.onpeak_end_hour);
  num("bess.energy_kwh", c.params.bess_energy_kwh);
  num("bess.power_kw", c.params.bess_power_kw);
  num("bess.soc_min", c.params.soc_min);
  num("bess.soc_max", c.params.soc_max);
  num("bess.eta", c.params.eta);
  num("bess.soc_init", c.params.soc_init);
  double imp = c.params.grid_hi, exp = -c.params.grid_lo;
  num("grid.import_max", imp);
  num("grid.export_max", exp);
  c.params.grid_hi = imp;
  c.params.grid_lo = -exp;
  num("horizon.dt_hours", c.tariff.dt_hours);
  integer("horizon.steps_N", c.horizon_N);
  text("horizon.scaling", c.scaling);
  text("window.start", c.window_start);
  integer("window.days", c.window_days);
  auto opt_text = [&](const char* path) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(path)) return trim(*v);
    return std::nullopt;
  };
  if (auto v = opt_text("reference.method")) c.reference.method = parse_method(*v);
  if (auto v = opt_text("reference.case")) c.reference.terminal_case = parse_case(*v);
  if (auto v = opt_text("reference.track_opdp_floor")) {
    if (*v == "true" || *v == "1") c.reference.track_opdp_floor = true;
    else if (*v == "false" || *v == "0") c.reference.track_opdp_floor = false;
    else throw ConfigError("reference.track_opdp_floor must be true or false");
  }
  num("reference.case3_soc_floor", c.reference.case3_soc_floor);
  if (auto v = opt_text("proposed.method")) c.proposed = parse_method(*v);
  num("solver.feasibility_tol", c.solver.simplex.feasibility_tol);
  num("solver.optimality_tol", c.solver.simplex.optimality_tol);
  integer("solver.max_iterations", c.solver.simplex.max_iterations);
  num("solver.tie_break", c.tie_break);
  if (!(c.tie_break >= 0.0)) throw ConfigError("solver.tie_break must be non-negative");
  if (c.scaling != "constant" && c.scaling != "ramp") throw ConfigError("horizon.scaling must be constant or ramp");
  if (!is_reference(c.reference.method)) throw ConfigError("reference.method must be std_ref or track_ref");
  if (is_reference(c.proposed)) throw ConfigError("proposed.method must be choice1, choice2 or choice3");
  if (c.window_days < 1) throw ConfigError("window.days must be positive");
  try {
    c.params.validate();
    c.tariff.validate();
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in);
}

/// Scenario from config + data. `proposed` empty runs the reference alone.
inline ScenarioSpec make_scenario(const AppConfig& cfg, const DataSet& data,
                                  std::optional<Method> proposed) {
  ScenarioSpec s;
  s.params = cfg.params;
  s.tariff = cfg.tariff;
  if (std::abs(data.dt_hours - cfg.tariff.dt_hours) > 1e-9)
    throw ConfigError("data spacing " + fmt(data.dt_hours) + " h differs from horizon.dt_hours");
  s.tariff.start_second_of_day = data.start_second_of_day();
  if (!data.series.energy_rate.empty()) s.tariff.energy_rate = data.series.energy_rate;
  s.series = data.series;
  s.timestamps = data.timestamps;
  s.start_step = 0;
  if (!cfg.window_start.empty()) {
    long long ts;
    if (!parse_timestamp(cfg.window_start, ts)) throw ConfigError("bad window.start timestamp");
    const long long step = data.epoch[1] - data.epoch[0];
    if (ts < data.epoch[0] || (ts - data.epoch[0]) % step != 0)
      throw WindowError("window.start is not a data timestamp");
    s.start_step = static_cast<std::size_t>((ts - data.epoch[0]) / step);
  }
  s.T = static_cast<std::size_t>(std::llround(cfg.window_days * 24.0 / cfg.tariff.dt_hours));
  s.reference = cfg.reference;
  s.reference.horizon_N = cfg.horizon_N;
  if (proposed) {
    ControllerConfig p;
    p.method = *proposed;
    p.horizon_N = cfg.horizon_N;
    s.proposed = p;
  }
  s.scaling_kind = cfg.scaling;
  s.solver = cfg.solver;
  s.tie_break = cfg.tie_break;
  s.validate();
  return s;
}

/// One row per step of the window. Without a proposed controller the
/// reference occupies the main columns and the ref_* columns are empty.
inline void write_log(std::ostream& os, const SimulationLog& log, const ScenarioSpec& spec) {
  os << "timestamp,pv,load,ref_u1,ref_u2,ref_soc,ref_x2,ref_x3,u1,u2,soc,x2,x3,V_opt,stage_cost,"
        "ref_stage_cost\n";
  const bool both = log.has_proposed();
  for (std::size_t k = 0; k < log.T; ++k) {
    const std::size_t t = log.start_step + k;
    os << (t < spec.timestamps.size() ? spec.timestamps[t] : std::to_string(t)) << ","
       << fmt(spec.series.pv_kw[t]) << "," << fmt(spec.series.load_kw[t]) << ",";
    const ControlInput& ur = log.ref_u[k];
    const AugmentedState& xr = log.ref_x[k];
    if (both) {
      os << fmt(ur.u1) << "," << fmt(ur.u2) << "," << fmt(xr.x1) << "," << fmt(xr.x2) << ","
         << fmt(xr.x3) << ",";
      os << fmt(log.u[k].u1) << "," << fmt(log.u[k].u2) << "," << fmt(log.x[k].x1) << ","
         << fmt(log.x[k].x2) << "," << fmt(log.x[k].x3) << "," << fmt(log.V[k]) << ","
         << fmt(log.stage[k]) << "," << fmt(log.ref_stage[k]) << "\n";
    } else {
      os << ",,,,,";
      os << fmt(ur.u1) << "," << fmt(ur.u2) << "," << fmt(xr.x1) << "," << fmt(xr.x2) << ","
         << fmt(xr.x3) << "," << fmt(log.ref_V[k]) << "," << fmt(log.ref_stage[k]) << ",\n";
    }
  }
}

inline void write_guarantees(std::ostream& os, const GuaranteeReport& rep) {
  os << "step,W,K,req,dh,r\n";
  for (const StepGuarantee& s : rep.steps)
    os << s.step << "," << fmt(s.W) << "," << fmt(s.K) << "," << fmt(s.req) << "," << fmt(s.dh)
       << "," << fmt(s.r) << "\n";
}

}  // namespace mgempc::io
