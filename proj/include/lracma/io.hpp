#pragma once

// CSV output for trial results, per-iteration histories, ECDF curves, sweeps
// and ODE trajectories, plus a key=value config reader. Doubles are written in
// shortest round-trip form so identical runs produce identical bytes.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lracma/error.hpp"
#include "lracma/harness.hpp"
#include "lracma/ode.hpp"

namespace lracma::io {

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

inline std::string format_optional(const std::optional<long>& v) {
  return v ? std::to_string(*v) : std::string();
}

inline void write_trials(std::ostream& out, std::span<const TrialRecord> records) {
  out << "trial,seed,success,evals_to_target,termination,reason,evaluations,iterations,"
         "final_f_m,final_eta_m,final_eta_sigma,final_sigma,eta_bound_violations,"
         "eta_floor_hits,clamped_candidates\n";
  for (const auto& r : records) {
    out << r.trial << ',' << r.seed << ',' << (r.success ? 1 : 0) << ','
        << format_optional(r.evals_to_target) << ',' << to_string(r.termination) << ','
        << r.reason << ',' << r.evaluations << ',' << r.iterations << ','
        << format_double(r.final_f_m) << ',' << format_double(r.final_eta_m) << ','
        << format_double(r.final_eta_sigma) << ',' << format_double(r.final_sigma) << ','
        << r.eta_bound_violations << ',' << r.eta_floor_hits << ',' << r.clamped_candidates
        << '\n';
  }
}

inline void write_history(std::ostream& out, std::span<const TrialRecord> records) {
  out << "trial,t,evals,f_m,f_best,eta_m,eta_sigma,snr_m,snr_sigma,sigma,eig_min,eig_max\n";
  for (const auto& r : records) {
    for (const auto& h : r.history) {
      out << r.trial << ',' << h.t << ',' << h.evals << ',' << format_double(h.f_m) << ','
          << format_double(h.f_best) << ',' << format_double(h.eta_m) << ','
          << format_double(h.eta_sigma) << ',' << format_double(h.snr_m) << ','
          << format_double(h.snr_sigma) << ',' << format_double(h.sigma) << ','
          << format_double(h.eig_min) << ',' << format_double(h.eig_max) << '\n';
    }
  }
}

/// One row per grid point, one column per labelled curve.
inline void write_ecdf(std::ostream& out, std::span<const double> grid,
                       std::span<const std::string> labels,
                       std::span<const std::vector<double>> curves) {
  if (labels.size() != curves.size()) {
    throw Error(ErrorCode::InvalidInput, "ecdf labels and curves differ in count");
  }
  out << "evals";
  for (const auto& l : labels) out << ',' << l;
  out << '\n';
  for (std::size_t g = 0; g < grid.size(); ++g) {
    out << format_double(grid[g]);
    for (const auto& c : curves) {
      if (c.size() != grid.size()) {
        throw Error(ErrorCode::InvalidInput, "ecdf curve length does not match grid");
      }
      out << ',' << format_double(c[g]);
    }
    out << '\n';
  }
}

inline void write_sweep(std::ostream& out, std::span<const SweepRow> rows) {
  out << "value,success_rate,sp1\n";
  for (const auto& r : rows) {
    out << format_double(r.value) << ',' << format_double(r.success_rate) << ','
        << format_optional(r.sp1) << '\n';
  }
}

inline void write_ode(std::ostream& out, const ode::Trajectory& traj) {
  out << "step,m,v\n";
  for (const auto& s : traj.states) {
    out << s.step << ',' << format_double(s.m) << ',' << format_double(s.v) << '\n';
  }
}

/// Opens `path` for writing, creating parent directories.
inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot open for writing: " + path.string());
  return out;
}

template <class Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  auto out = open_output(path);
  writer(out);
  out.flush();
  if (!out) throw Error(ErrorCode::InvalidInput, "write failed: " + path.string());
}

/// Reads `key = value` lines. Blank lines and lines starting with '#' are
/// skipped. Keys are not checked here.
inline std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidConfig,
                  "line " + std::to_string(lineno) + ": expected key = value");
    }
    const auto key = detail::trim(text.substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": empty key");
    }
    out.emplace_back(std::string(key), std::string(detail::trim(text.substr(eq + 1))));
  }
  return out;
}

inline void apply_config(RunConfig& cfg, std::istream& in) {
  for (const auto& [k, v] : parse_key_values(in)) set_field(cfg, k, v);
}

inline void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read config file: " + path.string());
  apply_config(cfg, in);
}

}  // namespace lracma::io
