#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mgempc/io.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace mgempc;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::string data;
  std::string out;
  bool ncdc_only = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "scenario INI file");
  sub->add_option("--data", c.data, "CSV with timestamp,pv_kw,load_kw[,energy_rate]");
  sub->add_option("--out", c.out, "output directory");
  sub->add_flag("--ncdc-only", c.ncdc_only, "drop the on-peak demand charge");
}

io::AppConfig load(const Common& c) {
  io::AppConfig cfg = c.config.empty() ? io::AppConfig{} : io::load_config(c.config);
  if (c.ncdc_only) cfg.tariff.opdc_rate = 0.0;
  return cfg;
}

io::DataSet data_for(const Common& c, const io::AppConfig& cfg) {
  if (!c.data.empty()) return io::load_data(c.data);
  return io::synth_month(cfg.window_days, cfg.tariff.dt_hours, static_cast<std::size_t>(cfg.horizon_N));
}

Method method_arg(const std::string& s) {
  try {
    return parse_method(s);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
}

TerminalCase case_arg(const std::string& s) {
  try {
    return parse_case(s);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
}

ordered_json cost_json(const CostBreakdown& c) {
  return {{"energy_cost", c.energy_cost},
          {"bess_loss_cost", c.bess_loss_cost},
          {"ncdc", c.ncdc},
          {"opdc", c.opdc},
          {"total", c.total}};
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream f(fs::path(dir) / name);
  if (!f) throw Error("cannot write " + (fs::path(dir) / name).string());
  return f;
}

void emit(const ordered_json& j, const std::string& out, const std::string& name) {
  std::cout << j.dump(2) << "\n";
  if (!out.empty()) open_out(out, name) << j.dump(2) << "\n";
}

// choice1/2 are compared against std_ref, choice3 against track_ref
Method paired_reference(Method m) { return m == Method::choice3 ? Method::track_ref : Method::std_ref; }

int cmd_run(const Common& c, const std::string& method, const std::string& tcase) {
  io::AppConfig cfg = load(c);
  const Method m = method.empty() ? cfg.proposed : method_arg(method);
  if (!tcase.empty()) cfg.reference.terminal_case = case_arg(tcase);
  std::optional<Method> proposed;
  if (is_reference(m)) cfg.reference.method = m;
  else proposed = m;
  const io::DataSet data = data_for(c, cfg);
  const ScenarioSpec spec = io::make_scenario(cfg, data, proposed);
  const SimulationLog log = proposed ? run_closed_loop(spec) : run_single_method(spec);

  ordered_json j;
  j["method"] = to_string(m);
  j["reference"] = to_string(cfg.reference.method);
  j["case"] = to_string(cfg.reference.terminal_case);
  j["steps"] = spec.T;
  j["horizon_N"] = spec.horizon();
  j["cost"] = cost_json(proposed ? log.cost : log.ref_cost);
  if (proposed) j["reference_cost"] = cost_json(log.ref_cost);
  if (!c.out.empty()) {
    auto f = open_out(c.out, "log.csv");
    io::write_log(f, log, spec);
  }
  emit(j, c.out, "summary.json");
  return 0;
}

int cmd_compare(const Common& c, const std::vector<std::string>& methods,
                const std::vector<std::string>& cases) {
  const io::AppConfig base = load(c);
  std::vector<Method> ms;
  for (const auto& s : methods) ms.push_back(method_arg(s));
  std::vector<TerminalCase> cs;
  for (const auto& s : cases) cs.push_back(case_arg(s));
  if (ms.empty() || cs.empty()) throw UsageError("compare needs at least one method and one case");
  const io::DataSet data = data_for(c, base);

  struct Cell {
    std::string method, tcase;
    CostBreakdown cost;
  };
  std::vector<Cell> cells;
  for (TerminalCase tc : cs) {
    io::AppConfig cfg = base;
    cfg.reference.terminal_case = tc;
    std::map<Method, CostBreakdown> ref_cost;
    auto reference_cost = [&](Method r) {
      if (!ref_cost.count(r)) {
        io::AppConfig rc = cfg;
        rc.reference.method = r;
        ref_cost[r] = run_single_method(io::make_scenario(rc, data, std::nullopt)).ref_cost;
      }
      return ref_cost[r];
    };
    for (Method m : ms) {
      CostBreakdown cost;
      if (is_reference(m)) {
        cost = reference_cost(m);
      } else {
        io::AppConfig pc = cfg;
        pc.reference.method = paired_reference(m);
        const SimulationLog log = run_closed_loop(io::make_scenario(pc, data, m));
        ref_cost.emplace(pc.reference.method, log.ref_cost);
        cost = log.cost;
      }
      cells.push_back({to_string(m), to_string(tc), cost});
    }
  }

  std::ostringstream table;
  table << std::fixed << std::setprecision(2);
  table << std::left << std::setw(16) << "cost";
  for (const Cell& k : cells) table << std::right << std::setw(14) << (k.method + "/" + k.tcase);
  table << "\n";
  auto row = [&](const char* name, double CostBreakdown::*f) {
    table << std::left << std::setw(16) << name;
    for (const Cell& k : cells) table << std::right << std::setw(14) << k.cost.*f;
    table << "\n";
  };
  row("ncdc", &CostBreakdown::ncdc);
  row("opdc", &CostBreakdown::opdc);
  row("energy_cost", &CostBreakdown::energy_cost);
  row("bess_loss_cost", &CostBreakdown::bess_loss_cost);
  row("total", &CostBreakdown::total);
  std::cout << table.str();
  if (!c.out.empty()) {
    auto f = open_out(c.out, "compare.csv");
    f << "method,case,energy_cost,bess_loss_cost,ncdc,opdc,total\n";
    for (const Cell& k : cells)
      f << k.method << "," << k.tcase << "," << io::fmt(k.cost.energy_cost) << ","
        << io::fmt(k.cost.bess_loss_cost) << "," << io::fmt(k.cost.ncdc) << ","
        << io::fmt(k.cost.opdc) << "," << io::fmt(k.cost.total) << "\n";
  }
  return 0;
}

int cmd_oracle(const Common& c) {
  const io::AppConfig cfg = load(c);
  const io::DataSet data = data_for(c, cfg);
  const ScenarioSpec spec = io::make_scenario(cfg, data, std::nullopt);
  const OracleResult o = oracle_full_window(spec);
  if (o.status != lp::Status::optimal)
    throw InfeasibleError(std::string("oracle solve failed: ") + lp::to_string(o.status), spec.start_step);
  ordered_json j;
  j["steps"] = spec.T;
  j["status"] = lp::to_string(o.status);
  j["iterations"] = o.iterations;
  j["max_residual"] = o.residual;
  j["cost"] = cost_json(o.cost);
  emit(j, c.out, "oracle.json");
  return 0;
}

int cmd_check(const Common& c, const std::string& method, const std::string& tcase, int samples) {
  io::AppConfig cfg = load(c);
  const Method m = method.empty() ? cfg.proposed : method_arg(method);
  if (is_reference(m)) throw UsageError("check needs choice1, choice2 or choice3");
  if (!tcase.empty()) cfg.reference.terminal_case = case_arg(tcase);
  const io::DataSet data = data_for(c, cfg);
  const ScenarioSpec spec = io::make_scenario(cfg, data, m);
  const SimulationLog log = run_closed_loop(spec);
  const GuaranteeReport rep = check_guarantees(log, spec);
  std::vector<std::size_t> steps;
  const std::size_t stride = std::max<std::size_t>(1, log.T / std::max(1, samples));
  for (std::size_t k = 0; k < log.T && steps.size() < static_cast<std::size_t>(samples); k += stride)
    steps.push_back(k);
  const std::vector<double> viol = check_shifted_feasibility(log, spec, steps);
  double max_viol = 0.0;
  for (double v : viol) max_viol = std::max(max_viol, v);
  double max_gap = 0.0;
  for (const SolveDiag& d : log.diag) max_gap = std::max(max_gap, d.epigraph_gap);

  ordered_json j;
  j["method"] = to_string(m);
  j["reference"] = to_string(cfg.reference.method);
  j["case"] = to_string(cfg.reference.terminal_case);
  j["steps"] = spec.T;
  j["max_r"] = rep.max_r;
  j["g"] = rep.g;
  j["eps"] = rep.eps;
  j["C"] = rep.C;
  j["W0"] = rep.W0;
  j["H"] = rep.H;
  j["eps_h"] = rep.eps_h;
  j["decrease_ok"] = rep.decrease_ok;
  j["bound_ok"] = rep.bound_ok;
  j["bound_h_ok"] = rep.bound_h_ok;
  j["shifted_max_violation"] = max_viol;
  j["epigraph_max_gap"] = max_gap;
  j["warnings"] = rep.warnings;
  if (!c.out.empty()) {
    auto f = open_out(c.out, "guarantees.csv");
    io::write_guarantees(f, rep);
  }
  emit(j, c.out, "check.json");
  const bool ok = rep.decrease_ok && rep.bound_ok && max_viol <= 1e-6;
  if (!ok) std::cerr << "guarantee check failed\n";
  return ok ? 0 : 1;
}

int cmd_synth(int days, double dt, int extra, const std::string& start, const std::string& out) {
  if (days < 1 || extra < 0) throw UsageError("synth needs days >= 1 and extra >= 0");
  const io::DataSet d = io::synth_month(days, dt, static_cast<std::size_t>(extra), start);
  if (out.empty() || out == "-") {
    io::write_data(std::cout, d);
  } else {
    std::ofstream f(out);
    if (!f) throw Error("cannot write " + out);
    io::write_data(f, d);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Economic MPC dispatch for a behind-the-meter battery"};
  app.require_subcommand(1);

  Common run_c, cmp_c, orc_c, chk_c;
  std::string run_method, run_case, chk_method, chk_case;
  std::vector<std::string> cmp_methods{"std_ref", "choice1", "choice2"}, cmp_cases{"i", "ii", "iii"};
  int chk_samples = 50;
  int syn_days = 31, syn_extra = 96;
  double syn_dt = 0.25;
  std::string syn_start = "2019-01-01T00:00:00", syn_out;

  auto* run = app.add_subcommand("run", "closed-loop simulation of one controller");
  add_common(run, run_c);
  run->add_option("--method", run_method, "std_ref|track_ref|choice1|choice2|choice3");
  run->add_option("--case", run_case, "reference terminal case i|ii|iii");

  auto* cmp = app.add_subcommand("compare", "cost table across methods and cases");
  add_common(cmp, cmp_c);
  cmp->add_option("--methods", cmp_methods)->delimiter(',');
  cmp->add_option("--cases", cmp_cases)->delimiter(',');

  auto* orc = app.add_subcommand("oracle", "perfect-foresight full-window benchmark");
  add_common(orc, orc_c);

  auto* chk = app.add_subcommand("check", "per-step decrease, average bound and shifted feasibility");
  add_common(chk, chk_c);
  chk->add_option("--method", chk_method, "choice1|choice2|choice3");
  chk->add_option("--case", chk_case, "reference terminal case i|ii|iii");
  chk->add_option("--samples", chk_samples, "steps sampled for the shifted-candidate check");

  auto* syn = app.add_subcommand("synth", "write the deterministic synthetic data set");
  syn->add_option("--days", syn_days);
  syn->add_option("--dt-hours", syn_dt);
  syn->add_option("--extra", syn_extra, "lookahead rows appended after the window");
  syn->add_option("--start", syn_start);
  syn->add_option("--out", syn_out, "CSV path, '-' for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run) return cmd_run(run_c, run_method, run_case);
    if (*cmp) return cmd_compare(cmp_c, cmp_methods, cmp_cases);
    if (*orc) return cmd_oracle(orc_c);
    if (*chk) return cmd_check(chk_c, chk_method, chk_case, chk_samples);
    if (*syn) return cmd_synth(syn_days, syn_dt, syn_extra, syn_start, syn_out);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
