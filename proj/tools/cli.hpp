#pragma once

// Command-line front end. Exit codes: 0 success, 1 configuration or usage
// error, 2 runtime failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lracma/harness.hpp"
#include "lracma/io.hpp"
#include "lracma/objectives.hpp"
#include "lracma/ode.hpp"

namespace lracma::cli {

inline std::vector<std::string> split(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    auto t = detail::trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

inline std::vector<double> parse_list(std::string_view key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text)) out.push_back(detail::parse_double(key, item));
  if (out.empty()) throw Error(ErrorCode::InvalidConfig, std::string(key) + " list is empty");
  return out;
}

/// "lra", "fixed:<eta>" or "fixed:<eta_m>:<eta_sigma>".
inline RunConfig with_algorithm(RunConfig cfg, const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.size() == 1 && parts[0] == "lra") {
    cfg.algorithm = Algorithm::Lra;
    return cfg;
  }
  if (!parts.empty() && parts[0] == "fixed" && parts.size() <= 3) {
    cfg.algorithm = Algorithm::FixedEta;
    if (parts.size() >= 2) cfg.eta_m = cfg.eta_sigma = detail::parse_double("eta", parts[1]);
    if (parts.size() == 3) cfg.eta_sigma = detail::parse_double("eta_sigma", parts[2]);
    return cfg;
  }
  throw Error(ErrorCode::InvalidConfig, "invalid algorithm spec: '" + spec + "'");
}

inline std::string describe(const RunConfig& cfg) {
  std::ostringstream s;
  s << "objective=" << cfg.objective << " dim=" << cfg.dim
    << " noise_variance=" << io::format_double(cfg.noise_variance) << " algorithm=" << to_string(cfg.algorithm);
  if (cfg.algorithm == Algorithm::FixedEta) {
    s << " eta_m=" << io::format_double(cfg.eta_m) << " eta_sigma=" << io::format_double(cfg.eta_sigma);
  }
  return s.str();
}

inline std::string summarize(const RunConfig& cfg, std::span<const TrialRecord> records) {
  std::ostringstream s;
  const auto p = sp1(records);
  s << describe(cfg) << " trials=" << records.size()
    << " success_rate=" << io::format_double(success_rate(records))
    << " sp1=" << (p ? io::format_double(*p) : std::string("nan"));
  return s.str();
}

/// Options shared by run, ecdf and sweep: a config file plus one flag per
/// config key. Flags are applied after the file, so they win.
struct ConfigOptions {
  std::string config_file;
  std::map<std::string, std::string> values;
  bool rotate = false;
  int jobs = 1;
  std::string out_dir = "out";

  void attach(CLI::App& app) {
    app.add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);
    for (auto key : kConfigKeys) {
      std::string name(key);
      if (name == "rotate") continue;
      std::string flag = "--" + name;
      std::replace(flag.begin(), flag.end(), '_', '-');
      app.add_option(flag, values[name], "set " + name);
    }
    app.add_flag("--rotate", rotate, "evaluate f(Rx) with a random rotation R per trial");
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out-dir", out_dir, "output directory");
  }

  RunConfig build(const CLI::App& app) const {
    RunConfig cfg;
    if (!config_file.empty()) io::load_config_file(cfg, config_file);
    for (const auto& [key, value] : values) {
      std::string flag = "--" + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      if (app.count(flag) > 0) set_field(cfg, key, value);
    }
    if (rotate) cfg.rotate = true;
    validate(cfg);
    return cfg;
  }
};

inline int cmd_run(const CLI::App& app, const ConfigOptions& opts, std::ostream& out) {
  const RunConfig cfg = opts.build(app);
  const auto records = run_trials(cfg, opts.jobs);
  const std::filesystem::path dir(opts.out_dir);
  io::write_file(dir / "trials.csv", [&](std::ostream& o) { io::write_trials(o, records); });
  io::write_file(dir / "history.csv", [&](std::ostream& o) { io::write_history(o, records); });
  const auto grid = ecdf_grid(cfg.effective_budget());
  const std::vector<std::string> labels{std::string(to_string(cfg.algorithm))};
  const std::vector<std::vector<double>> curves{ecdf_curve(records, grid)};
  io::write_file(dir / "ecdf.csv", [&](std::ostream& o) { io::write_ecdf(o, grid, labels, curves); });
  out << summarize(cfg, records) << '\n';
  return 0;
}

inline int cmd_ecdf(const CLI::App& app, const ConfigOptions& opts, const std::string& algorithms,
                    std::ostream& out) {
  const RunConfig base = opts.build(app);
  const auto specs = split(algorithms);
  if (specs.empty()) throw Error(ErrorCode::InvalidConfig, "no algorithms given");
  std::vector<RunConfig> cfgs;
  for (const auto& spec : specs) {
    cfgs.push_back(with_algorithm(base, spec));
    validate(cfgs.back());
  }
  const auto grid = ecdf_grid(base.effective_budget());
  std::vector<std::vector<double>> curves;
  for (const auto& cfg : cfgs) {
    const auto records = run_trials(cfg, opts.jobs);
    curves.push_back(ecdf_curve(records, grid));
    out << summarize(cfg, records) << '\n';
  }
  io::write_file(std::filesystem::path(opts.out_dir) / "ecdf.csv",
                 [&](std::ostream& o) { io::write_ecdf(o, grid, specs, curves); });
  return 0;
}

inline int cmd_sweep(const CLI::App& app, const ConfigOptions& opts, const std::string& param,
                     const std::string& values, std::ostream& out) {
  static constexpr std::array<std::string_view, 9> kSweepable = {
      "alpha", "beta_m", "beta_sigma", "gamma", "lambda", "eta_m", "eta_sigma", "dim",
      "noise_variance"};
  if (std::find(kSweepable.begin(), kSweepable.end(), param) == kSweepable.end()) {
    throw Error(ErrorCode::InvalidConfig, "parameter cannot be swept: " + param);
  }
  const RunConfig base = opts.build(app);
  const auto vals = parse_list("values", values);
  const auto rows = sweep(base, param, vals, opts.jobs);
  io::write_file(std::filesystem::path(opts.out_dir) / "sweep.csv",
                 [&](std::ostream& o) { io::write_sweep(o, rows); });
  for (const auto& r : rows) {
    out << describe(base) << ' ' << param << '=' << io::format_double(r.value)
        << " success_rate=" << io::format_double(r.success_rate)
        << " sp1=" << (r.sp1 ? io::format_double(*r.sp1) : std::string("nan")) << '\n';
  }
  return 0;
}

struct OdeOptions {
  std::string etas = "1e-2,1e-5";
  double m0 = 3.0;
  double v0 = 2.0;
  double steps = 1e7;
  long stride = 1000;
  std::string out_dir = "out";
};

inline std::string_view to_string(ode::Stop s) {
  switch (s) {
    case ode::Stop::Steps: return "steps";
    case ode::Stop::Stationary: return "stationary";
    case ode::Stop::DegenerateVariance: return "degenerate_variance";
  }
  return "unknown";
}

/// One file per (eta, initial state) pair, e.g. ode_eta1e-05_m3_v2.csv.
inline std::string ode_file_name(double eta, double m0, double v0) {
  return "ode_eta" + io::format_double(eta) + "_m" + io::format_double(m0) + "_v" +
         io::format_double(v0) + ".csv";
}

inline int cmd_ode(const OdeOptions& opts, std::ostream& out) {
  if (!(opts.steps >= 1.0)) throw Error(ErrorCode::InvalidConfig, "steps must be >= 1");
  const auto etas = parse_list("eta", opts.etas);
  ode::IntegrateOptions io_opts;
  io_opts.steps = static_cast<long>(opts.steps);
  io_opts.stride = opts.stride;
  for (double eta : etas) {
    const auto traj = ode::euler_integrate({opts.m0, opts.v0, 0}, eta, io_opts);
    const std::string name = ode_file_name(eta, opts.m0, opts.v0);
    io::write_file(std::filesystem::path(opts.out_dir) / name,
                   [&](std::ostream& o) { io::write_ode(o, traj); });
    out << "eta=" << io::format_double(eta) << " steps=" << traj.final.step
        << " m=" << io::format_double(traj.final.m) << " v=" << io::format_double(traj.final.v)
        << " stop=" << to_string(traj.stop) << '\n';
  }
  return 0;
}

inline int cmd_list(std::ostream& out) {
  for (auto name : kObjectiveNames) {
    const auto init = init_spec(name, 1);
    out << name << " m0=" << io::format_double(init.m0[0])
        << " sigma0=" << io::format_double(init.sigma0) << '\n';
  }
  return 0;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"CMA-ES with signal-to-noise-ratio based learning rate adaptation"};
  app.require_subcommand(1);

  ConfigOptions run_opts, ecdf_opts, sweep_opts;
  auto* run = app.add_subcommand("run", "run trials; writes trials.csv, history.csv, ecdf.csv");
  run_opts.attach(*run);

  auto* ecdf = app.add_subcommand("ecdf", "compare algorithms; writes ecdf.csv");
  ecdf_opts.attach(*ecdf);
  std::string algorithms = "lra,fixed:1:1";
  ecdf->add_option("--algorithms", algorithms, "comma list of lra | fixed:<eta_m>:<eta_sigma>");

  auto* sw = app.add_subcommand("sweep", "sweep one parameter; writes sweep.csv");
  sweep_opts.attach(*sw);
  std::string param, values;
  sw->add_option("--param", param, "parameter to vary")->required();
  sw->add_option("--values", values, "comma list of values")->required();

  OdeOptions ode_opts;
  auto* od = app.add_subcommand("ode", "Euler-integrate the 1-D Rastrigin Gaussian flow");
  od->add_option("--eta", ode_opts.etas, "comma list of step sizes");
  od->add_option("--m0", ode_opts.m0, "initial mean");
  od->add_option("--v0", ode_opts.v0, "initial variance");
  od->add_option("--steps", ode_opts.steps, "maximum Euler steps");
  od->add_option("--stride", ode_opts.stride, "keep every stride-th state")->check(CLI::PositiveNumber);
  od->add_option("--out-dir", ode_opts.out_dir, "output directory");

  auto* list = app.add_subcommand("list-objectives", "print objective names and initial distributions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (run->parsed()) return cmd_run(*run, run_opts, out);
    if (ecdf->parsed()) return cmd_ecdf(*ecdf, ecdf_opts, algorithms, out);
    if (sw->parsed()) return cmd_sweep(*sw, sweep_opts, param, values, out);
    if (od->parsed()) return cmd_ode(ode_opts, out);
    if (list->parsed()) return cmd_list(out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::InvalidConfig ? 1 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace lracma::cli
