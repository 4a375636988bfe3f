// coevo: solve, simulate, sweep and validate the individualism-collectivism
// co-evolution model from the command line.
//
// Exit codes: 0 success, 1 internal error, 2 usage/parameter error,
// 3 assertion or validation failure.

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "coevo/format.hpp"
#include "coevo/metrics.hpp"
#include "coevo/simulator.hpp"
#include "coevo/society.hpp"
#include "coevo/steady_state.hpp"
#include "coevo/validation.hpp"
#include "coevo/version.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

// Flat JSON config: keys are long option names without the leading dashes
// (e.g. {"lambda-b": 2, "w": 0.3, "seed": 7}). The file's entries are injected
// as flags right after the subcommand, so explicit command-line flags override
// them via the take-last policy.
std::vector<std::string> config_to_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config file not found: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::invalid_argument("config parse failure in " + path + ": " + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object: " + path);
  std::vector<std::string> args;
  for (const auto& [key, value] : j.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back("--" + key);
      continue;
    }
    args.push_back("--" + key);
    args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
  }
  return args;
}

struct ParamFlags {
  double lambda_b = 1.0;
  double lambda_d = 1.0;
  double r = 1.0;
  double w = 0.3;
};

struct OutputFlags {
  std::string format = "csv";
  std::string out_dir;
};

void add_param_flags(CLI::App* cmd, ParamFlags& p) {
  cmd->add_option("--lambda-b", p.lambda_b, "birth mass-rate (> 0)")->capture_default_str();
  cmd->add_option("--lambda-d", p.lambda_d, "natural death hazard (> 0)")
      ->capture_default_str();
  cmd->add_option("--r", p.r, "death-boundary magnitude (> 0); boundary sits at -r")
      ->capture_default_str();
  cmd->add_option("--w", p.w, "collectivism weight in [0, 1]")->capture_default_str();
}

void add_output_flags(CLI::App* cmd, OutputFlags& o) {
  cmd->add_option("--format", o.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  cmd->add_option("--out", o.out_dir, "directory for output files");
}

void finish_subcommand(CLI::App* cmd, std::string& config_path) {
  cmd->add_option("--config", config_path,
                  "JSON config file supplying any flag of this command; explicit flags win");
  for (auto* opt : cmd->get_options()) {
    if (opt->get_expected_min() > 0) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }
}

// Ordered key/value record; the CSV form is a two-line wide table.
struct Record {
  std::vector<std::pair<std::string, ordered_json>> fields;

  void add(const std::string& name, double v) { fields.emplace_back(name, v); }
  void add(const std::string& name, bool v) { fields.emplace_back(name, v); }
  void add_optional(const std::string& name, const std::optional<double>& v) {
    if (v) {
      fields.emplace_back(name, *v);
    } else {
      fields.emplace_back(name, nullptr);
    }
  }

  static std::string cell(const ordered_json& v) {
    if (v.is_null()) return "";
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_float()) return coevo::num17(v.get<double>());
    return v.get<std::string>();
  }

  std::string to_csv() const {
    std::string head;
    std::string row;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) {
        head += ',';
        row += ',';
      }
      head += fields[i].first;
      row += cell(fields[i].second);
    }
    return head + "\n" + row + "\n";
  }

  ordered_json to_json() const {
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : fields) j[k] = v;
    return j;
  }
};

std::string dump_json(const ordered_json& j) { return j.dump(2) + "\n"; }

ordered_json params_json(const coevo::SocietyParams& p) {
  return ordered_json{
      {"lambda_b", p.lambda_b}, {"lambda_d", p.lambda_d}, {"r", p.r}, {"w", p.w}};
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
}

// Writes manifest.json next to the data files. The manifest is the rerun
// recipe (command, params, config echo) plus a wall-clock stamp; the data
// files themselves stay byte-deterministic.
void write_manifest(const fs::path& dir, const std::string& command,
                    const coevo::SocietyParams& p, ordered_json config,
                    const std::vector<std::string>& outputs) {
  ordered_json m;
  m["artifact_version"] = coevo::artifact_version;
  m["command"] = command;
  m["params"] = params_json(p);
  m["config"] = std::move(config);
  m["outputs"] = outputs;
  m["generated_unix"] = static_cast<std::int64_t>(std::time(nullptr));
  write_file(dir / "manifest.json", dump_json(m));
}

fs::path ensure_out_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

int emit_record(const Record& rec, const OutputFlags& out, const std::string& command,
                const coevo::SocietyParams& p, const ordered_json& config_echo,
                const std::string& file_stem) {
  const std::string text = out.format == "json" ? dump_json(rec.to_json()) : rec.to_csv();
  std::cout << text;
  if (!out.out_dir.empty()) {
    const fs::path dir = ensure_out_dir(out.out_dir);
    const std::string fname = file_stem + (out.format == "json" ? ".json" : ".csv");
    write_file(dir / fname, text);
    write_manifest(dir, command, p, config_echo, {fname});
  }
  return 0;
}

// ---------------------------------------------------------------------------
// solve

int run_solve(const ParamFlags& pf, const OutputFlags& out) {
  const coevo::SocietyParams p = coevo::validate_params(pf.lambda_b, pf.lambda_d, pf.r, pf.w);
  const coevo::SteadyState ss = coevo::solve_steady_state(p);
  const coevo::SocietyMetrics m = coevo::compute_metrics(p, ss);

  Record rec;
  rec.add("q_bar", ss.q_bar);
  rec.add("rate_good", ss.rate_good);
  rec.add("rate_bad", ss.rate_bad);
  rec.add_optional("lambda1", ss.lambda1);
  rec.add_optional("lambda2", ss.lambda2);
  rec.add("mass_good", ss.mass_good);
  rec.add("mass_bad", ss.mass_bad);
  rec.add("degenerate", ss.degenerate);
  rec.add("pop", m.pop);
  rec.add("x_bar", m.x_bar);
  rec.add("t_bar", m.t_bar);
  rec.add("t_bar_newborn", m.t_bar_newborn);
  rec.add("var_x", m.var_x);
  rec.add("cf", m.cf);
  rec.add("x_bar_good", m.x_bar_good);
  rec.add("x_bar_bad", m.x_bar_bad);
  rec.add("t_good", m.t_good);
  rec.add("t_bad", m.t_bad);
  rec.add_optional("t2", m.t2);
  rec.add("rate_natural", m.rate_natural);
  rec.add("rate_boundary", m.rate_boundary);
  return emit_record(rec, out, "solve", p, ordered_json::object(), "solve");
}

// ---------------------------------------------------------------------------
// density

int run_density(const ParamFlags& pf, const OutputFlags& out, double x_max, int n) {
  const coevo::SocietyParams p = coevo::validate_params(pf.lambda_b, pf.lambda_d, pf.r, pf.w);
  const coevo::SteadyState ss = coevo::solve_steady_state(p);
  const coevo::DensityProfile prof = coevo::density_profile(p, ss, x_max, n);

  std::string text;
  if (out.format == "json") {
    ordered_json j;
    j["params"] = params_json(p);
    j["x_max"] = prof.x_max;
    j["x"] = prof.grid;
    j["p"] = prof.values;
    text = dump_json(j);
  } else {
    std::string csv = "x,p\n";
    for (std::size_t i = 0; i < prof.grid.size(); ++i) {
      csv += coevo::num17(prof.grid[i]);
      csv += ',';
      csv += coevo::num17(prof.values[i]);
      csv += '\n';
    }
    text = std::move(csv);
  }
  std::cout << text;
  if (!out.out_dir.empty()) {
    const fs::path dir = ensure_out_dir(out.out_dir);
    const std::string fname = out.format == "json" ? "density.json" : "density.csv";
    write_file(dir / fname, text);
    write_manifest(dir, "density", p, ordered_json{{"x_max", prof.x_max}, {"n", n}}, {fname});
  }
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

std::string series_csv(const coevo::SimResult& res) {
  std::string csv = "t,q_bar,pop\n";
  for (std::size_t i = 0; i < res.q_bar_series.size(); ++i) {
    csv += coevo::num17(res.q_bar_series[i].first);
    csv += ',';
    csv += coevo::num17(res.q_bar_series[i].second);
    csv += ',';
    csv += coevo::num17(res.pop_series[i].second);
    csv += '\n';
  }
  return csv;
}

std::string hist_csv(const coevo::SocietyParams& p, const coevo::SteadyState& ss,
                     const coevo::SocietyMetrics& m, const coevo::SimResult& res) {
  const auto bins = static_cast<int>(res.hist_mass.size());
  std::vector<double> analytic;
  if (!ss.degenerate) {
    analytic = coevo::analytic_bin_masses(p, ss, res.hist_lo, res.hist_hi, bins);
  } else {
    // point mass at welfare 0: all analytic mass sits in the bin holding 0
    analytic.assign(res.hist_mass.size(), 0.0);
    const double width = (res.hist_hi - res.hist_lo) / bins;
    const auto bin = static_cast<std::size_t>((0.0 - res.hist_lo) / width);
    if (bin < analytic.size()) analytic[bin] = m.pop;
  }
  std::string csv = "bin_lo,bin_hi,mass_empirical,mass_analytical\n";
  const double width = (res.hist_hi - res.hist_lo) / bins;
  for (std::size_t b = 0; b < res.hist_mass.size(); ++b) {
    csv += coevo::num17(res.hist_lo + width * static_cast<double>(b));
    csv += ',';
    csv += coevo::num17(res.hist_lo + width * static_cast<double>(b + 1));
    csv += ',';
    csv += coevo::num17(res.hist_mass[b]);
    csv += ',';
    csv += coevo::num17(analytic[b]);
    csv += '\n';
  }
  return csv;
}

std::string ztable_csv(const coevo::ComparisonReport& rep) {
  std::string csv = "metric,analytical,empirical,stderr,z,pass\n";
  for (const auto& row : rep.rows) {
    csv += row.metric;
    csv += ',';
    csv += coevo::num17(row.analytical);
    csv += ',';
    csv += coevo::num17(row.empirical);
    csv += ',';
    csv += coevo::num17(row.se);
    csv += ',';
    csv += coevo::num17(row.z);
    csv += ',';
    csv += row.pass ? "true" : "false";
    csv += '\n';
  }
  return csv;
}

int run_simulate(const ParamFlags& pf, const OutputFlags& out, const coevo::SimConfig& cfg,
                 bool assert_z) {
  const coevo::SocietyParams p = coevo::validate_params(pf.lambda_b, pf.lambda_d, pf.r, pf.w);
  const coevo::SteadyState ss = coevo::solve_steady_state(p);
  const coevo::SocietyMetrics m = coevo::compute_metrics(p, ss);

  const coevo::SimResult res = coevo::run_simulation(p, cfg);
  const coevo::EmpiricalMetrics emp = coevo::estimate_steady(res);
  const coevo::ComparisonReport rep = coevo::compare(ss, m, emp);

  const bool conserved =
      res.births == res.deaths_natural + res.deaths_boundary + res.alive_end;

  ordered_json summary;
  summary["params"] = params_json(p);
  summary["config"] = ordered_json{{"n_scale", cfg.n_scale},
                                   {"t_end", cfg.t_end},
                                   {"burn_in", coevo::resolved_burn_in(p, cfg)},
                                   {"seed", cfg.seed},
                                   {"replicates", cfg.replicates},
                                   {"hist_bins", cfg.hist_bins},
                                   {"sample_dt", coevo::resolved_sample_dt(p, cfg)},
                                   {"x_hist_max", coevo::resolved_x_hist_max(p, cfg)}};
  summary["births"] = res.births;
  summary["deaths_natural"] = res.deaths_natural;
  summary["deaths_boundary"] = res.deaths_boundary;
  summary["alive_end"] = res.alive_end;
  summary["conserved"] = conserved;
  summary["post_burn_events"] = emp.post_burn_events;
  ordered_json table = ordered_json::array();
  for (const auto& row : rep.rows) {
    table.push_back(ordered_json{{"metric", row.metric},
                                 {"analytical", row.analytical},
                                 {"empirical", row.empirical},
                                 {"stderr", row.se},
                                 {"z", row.z},
                                 {"pass", row.pass}});
  }
  summary["comparison"] = table;
  summary["all_pass"] = rep.all_pass;

  if (out.format == "json") {
    std::cout << dump_json(summary);
  } else {
    std::cout << ztable_csv(rep);
  }

  if (!out.out_dir.empty()) {
    const fs::path dir = ensure_out_dir(out.out_dir);
    write_file(dir / "series.csv", series_csv(res));
    write_file(dir / "hist.csv", hist_csv(p, ss, m, res));
    write_file(dir / "ztable.csv", ztable_csv(rep));
    write_file(dir / "summary.json", dump_json(summary));
    write_manifest(dir, "simulate", p, summary["config"],
                   {"series.csv", "hist.csv", "ztable.csv", "summary.json"});
  }

  if (!conserved) {
    std::cerr << "conservation identity violated\n";
    return 1;
  }
  if (assert_z && !rep.all_pass) {
    std::cerr << "assertion failed: some |z| > 3\n";
    return 3;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad grid value: " + item);
    grid.push_back(v);
  }
  if (grid.size() < 3) {
    throw std::invalid_argument("grid needs at least 3 comma-separated values");
  }
  return grid;
}

int run_sweep(const ParamFlags& pf, const OutputFlags& out, const std::string& param,
              const std::string& metric, const std::string& grid_text, int jobs) {
  const coevo::SocietyParams base =
      coevo::validate_params(pf.lambda_b, pf.lambda_d, pf.r, pf.w);
  coevo::SweepSpec spec;
  spec.base = base;
  spec.param = param;
  spec.metric = metric;
  spec.grid = parse_grid(grid_text);
  const coevo::SweepReport rep = coevo::sweep(spec, 1e-10, jobs);

  std::string text;
  if (out.format == "json") {
    ordered_json j;
    j["base"] = params_json(base);
    j["param"] = param;
    j["metric"] = metric;
    ordered_json pts = ordered_json::array();
    for (const auto& pt : rep.points) {
      ordered_json pj{{"value", pt.value}};
      if (pt.ok) {
        pj["metric_value"] = pt.metric;
      } else {
        pj["error"] = pt.error;
      }
      pts.push_back(std::move(pj));
    }
    j["points"] = pts;
    j["verdict"] = coevo::to_string(rep.verdict);
    j["zero_slope"] = rep.zero_slope;
    if (rep.turning_point) j["turning_point"] = *rep.turning_point;
    text = dump_json(j);
  } else {
    std::string csv = "param,value,metric,metric_value\n";
    for (const auto& pt : rep.points) {
      if (!pt.ok) continue;
      csv += param;
      csv += ',';
      csv += coevo::num17(pt.value);
      csv += ',';
      csv += metric;
      csv += ',';
      csv += coevo::num17(pt.metric);
      csv += '\n';
    }
    text = std::move(csv);
  }
  std::cout << text;
  std::cerr << "sweep verdict: " << coevo::to_string(rep.verdict)
            << (rep.zero_slope ? " (zero slope)" : "") << "\n";

  if (!out.out_dir.empty()) {
    const fs::path dir = ensure_out_dir(out.out_dir);
    const std::string fname = out.format == "json" ? "sweep.json" : "sweep.csv";
    write_file(dir / fname, text);
    write_manifest(dir, "sweep", base,
                   ordered_json{{"param", param}, {"metric", metric}, {"grid", spec.grid}},
                   {fname});
  }
  return 0;
}

// ---------------------------------------------------------------------------
// validate

int run_validate(const ParamFlags& pf, const OutputFlags& out, double eps, int jobs) {
  const coevo::SocietyParams base =
      coevo::validate_params(pf.lambda_b, pf.lambda_d, pf.r, pf.w);
  const coevo::SuiteReport suite = coevo::run_theorem_suite(base, eps, jobs);

  std::string text;
  if (out.format == "json") {
    ordered_json j;
    j["base"] = params_json(base);
    j["eps"] = eps;
    ordered_json checks = ordered_json::array();
    for (const auto& c : suite.checks) {
      checks.push_back(ordered_json{{"check", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    }
    j["checks"] = checks;
    j["all_pass"] = suite.all_pass;
    text = dump_json(j);
  } else {
    std::string csv = "check,pass,detail\n";
    for (const auto& c : suite.checks) {
      std::string detail = c.detail;
      for (char& ch : detail) {
        if (ch == ',') ch = ';';
      }
      csv += c.name;
      csv += ',';
      csv += c.pass ? "true" : "false";
      csv += ',';
      csv += detail;
      csv += '\n';
    }
    text = std::move(csv);
  }
  std::cout << text;
  for (const auto& c : suite.checks) {
    std::cerr << (c.pass ? "PASS " : "FAIL ") << c.name << "\n";
  }

  if (!out.out_dir.empty()) {
    const fs::path dir = ensure_out_dir(out.out_dir);
    const std::string fname = out.format == "json" ? "validate.json" : "validate.csv";
    write_file(dir / fname, text);
    write_manifest(dir, "validate", base, ordered_json{{"eps", eps}, {"jobs", jobs}}, {fname});
  }
  return suite.all_pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "solver, simulator and validation harness for the individualism-collectivism "
      "co-evolution model"};
  app.require_subcommand(1);

  const int default_jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::string config_path;  // bound on every subcommand; only one of them parses

  auto* solve_cmd = app.add_subcommand("solve", "solve the steady state and print all metrics");
  ParamFlags solve_params;
  OutputFlags solve_out;
  add_param_flags(solve_cmd, solve_params);
  add_output_flags(solve_cmd, solve_out);
  finish_subcommand(solve_cmd, config_path);

  auto* density_cmd =
      app.add_subcommand("density", "emit the stationary welfare density as a table");
  ParamFlags density_params;
  OutputFlags density_out;
  double density_x_max = 0.0;
  int density_n = 513;
  add_param_flags(density_cmd, density_params);
  add_output_flags(density_cmd, density_out);
  density_cmd->add_option("--x-max", density_x_max, "positive-side cutoff (0 = 40/lambda1)")
      ->capture_default_str();
  density_cmd->add_option("--bins,--n", density_n, "number of grid points")
      ->check(CLI::Range(2, 10000000))
      ->capture_default_str();
  finish_subcommand(density_cmd, config_path);

  auto* sim_cmd = app.add_subcommand(
      "simulate", "run the finite-agent oracle and compare against the analytics");
  ParamFlags sim_params;
  OutputFlags sim_out;
  coevo::SimConfig sim_cfg;
  sim_cfg.replicates = 4;  // replicate spread is the only error-bar source
  sim_cfg.jobs = default_jobs;
  bool sim_assert = false;
  add_param_flags(sim_cmd, sim_params);
  add_output_flags(sim_cmd, sim_out);
  sim_cmd->add_option("--n-scale", sim_cfg.n_scale, "agents per unit population mass")
      ->capture_default_str();
  sim_cmd->add_option("--t-end", sim_cfg.t_end, "simulated horizon")->capture_default_str();
  sim_cmd->add_option("--burn-in", sim_cfg.burn_in, "time before statistics collection (< 0 = 20/lambda_d)")
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim_cfg.seed, "base RNG seed (replicate i uses seed + i)")
      ->envname("COEVO_SEED")
      ->capture_default_str();
  sim_cmd->add_option("--replicates", sim_cfg.replicates, "independent replicates")
      ->capture_default_str();
  sim_cmd->add_option("--hist-bins", sim_cfg.hist_bins, "welfare histogram bins")
      ->capture_default_str();
  sim_cmd
      ->add_option("--x-hist-max", sim_cfg.x_hist_max, "histogram upper edge (0 = 25/lambda_d)")
      ->capture_default_str();
  sim_cmd->add_option("--sample-dt", sim_cfg.sample_dt, "snapshot spacing (0 = 0.1/lambda_d)")
      ->capture_default_str();
  sim_cmd->add_option("--jobs", sim_cfg.jobs, "replicate parallelism")->capture_default_str();
  sim_cmd->add_flag("--assert", sim_assert, "exit 3 if any metric lands outside 3 sigma");
  finish_subcommand(sim_cmd, config_path);

  auto* sweep_cmd =
      app.add_subcommand("sweep", "evaluate a metric over a parameter grid (long-format table)");
  ParamFlags sweep_params;
  OutputFlags sweep_out;
  std::string sweep_param = "w";
  std::string sweep_metric = "x_bar";
  std::string sweep_grid;
  int sweep_jobs = default_jobs;
  add_param_flags(sweep_cmd, sweep_params);
  add_output_flags(sweep_cmd, sweep_out);
  sweep_cmd->add_option("--param", sweep_param, "swept parameter")
      ->check(CLI::IsMember({"lambda_b", "lambda_d", "r", "w"}))
      ->capture_default_str();
  sweep_cmd->add_option("--metric", sweep_metric, "metric name")->capture_default_str();
  sweep_cmd->add_option("--grid", sweep_grid, "comma-separated strictly increasing values")
      ->required();
  sweep_cmd->add_option("--jobs", sweep_jobs, "grid-point parallelism")->capture_default_str();
  finish_subcommand(sweep_cmd, config_path);

  auto* validate_cmd =
      app.add_subcommand("validate", "run the full lemma/theorem suite on default grids");
  ParamFlags validate_flags;
  validate_flags.w = 0.25;  // keeps the theorem-3c guard w < 1/2 - eps satisfiable
  OutputFlags validate_out;
  double validate_eps = 0.2;
  int validate_jobs = default_jobs;
  add_param_flags(validate_cmd, validate_flags);
  add_output_flags(validate_cmd, validate_out);
  validate_cmd->add_option("--eps", validate_eps, "theorem 3c epsilon (0 < eps < 1/2)")
      ->capture_default_str();
  validate_cmd->add_option("--jobs", validate_jobs, "sweep parallelism")->capture_default_str();
  finish_subcommand(validate_cmd, config_path);

  // Pre-scan for --config so its entries can be injected before the explicit
  // flags; the take-last policy then makes the command line override the file.
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    std::string pre_config;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config") {
        if (i + 1 >= args.size()) throw std::invalid_argument("--config needs a file path");
        pre_config = args[i + 1];
        ++i;
      } else if (args[i].rfind("--config=", 0) == 0) {
        pre_config = args[i].substr(9);
      }
    }
    if (!pre_config.empty() && !args.empty()) {
      const std::vector<std::string> injected = config_to_args(pre_config);
      args.insert(args.begin() + 1, injected.begin(), injected.end());
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*solve_cmd) return run_solve(solve_params, solve_out);
    if (*density_cmd) return run_density(density_params, density_out, density_x_max, density_n);
    if (*sim_cmd) return run_simulate(sim_params, sim_out, sim_cfg, sim_assert);
    if (*sweep_cmd) {
      return run_sweep(sweep_params, sweep_out, sweep_param, sweep_metric, sweep_grid,
                       sweep_jobs);
    }
    if (*validate_cmd) return run_validate(validate_flags, validate_out, validate_eps,
                                           validate_jobs);
    std::cerr << "no command\n";
    return 2;
  } catch (const coevo::param_error& e) {
    std::cerr << "parameter error [" << e.field() << "]: " << e.what() << "\n";
    return 2;
  } catch (const coevo::degenerate_error& e) {
    std::cerr << "degenerate state: " << e.what() << "\n";
    return 2;
  } catch (const coevo::guard_violation& e) {
    std::cerr << "guard violation: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
