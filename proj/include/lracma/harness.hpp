#pragma once

// Trial execution and aggregate metrics: success rate, SP1, ECDF of
// first-hit evaluation counts, and one-parameter sweeps.

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "lracma/cma.hpp"
#include "lracma/error.hpp"
#include "lracma/lra.hpp"
#include "lracma/objectives.hpp"
#include "lracma/random.hpp"

namespace lracma {

enum class Algorithm { Lra, FixedEta };

inline std::string_view to_string(Algorithm a) { return a == Algorithm::Lra ? "lra" : "fixed"; }

struct RunConfig {
  std::string objective = "sphere";
  int dim = 10;
  double noise_variance = 0.0;
  bool rotate = false;
  Algorithm algorithm = Algorithm::Lra;
  double eta_m = 1.0;  // used by FixedEta
  double eta_sigma = 1.0;
  std::optional<int> lambda;
  LraHyperParams lra;
  std::optional<double> budget;  // default 1e7 noiseless, 1e8 noisy
  double target = 1e-8;
  std::uint64_t seed = 1;
  std::optional<int> trials;  // default 30 noiseless, 20 noisy
  int history_stride = 10;
  int ecdf_targets = 30;

  bool noisy() const { return noise_variance > 0.0; }
  double effective_budget() const { return budget.value_or(noisy() ? 1e8 : 1e7); }
  int effective_trials() const { return trials.value_or(noisy() ? 20 : 30); }
};

/// Every key accepted by set_field, in canonical order.
inline constexpr std::array<std::string_view, 18> kConfigKeys = {
    "objective", "dim",    "noise_variance", "rotate", "algorithm",      "eta_m",
    "eta_sigma", "lambda", "alpha",          "beta_m", "beta_sigma",     "gamma",
    "budget",    "target", "seed",           "trials", "history_stride", "ecdf_targets"};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view key, std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::InvalidConfig,
                "invalid value for " + std::string(key) + ": '" + std::string(text) + "'");
  }
  return v;
}

inline long long parse_integer(std::string_view key, std::string_view text) {
  const double v = parse_double(key, text);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) {
    throw Error(ErrorCode::InvalidConfig,
                "expected an integer for " + std::string(key) + ": '" + std::string(text) + "'");
  }
  return static_cast<long long>(v);
}

inline std::uint64_t parse_seed(std::string_view text) {
  text = trim(text);
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::InvalidConfig, "invalid value for seed: '" + std::string(text) + "'");
  }
  return v;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error(ErrorCode::InvalidConfig,
              "invalid value for " + std::string(key) + ": '" + std::string(text) + "'");
}

}  // namespace detail

/// Sets one RunConfig field from its textual form. Unknown keys and
/// unparsable values raise InvalidConfig naming the key.
inline void set_field(RunConfig& cfg, std::string_view key, std::string_view value) {
  using namespace detail;
  if (key == "objective") {
    cfg.objective = std::string(trim(value));
  } else if (key == "dim") {
    cfg.dim = static_cast<int>(parse_integer(key, value));
  } else if (key == "noise_variance") {
    cfg.noise_variance = parse_double(key, value);
  } else if (key == "rotate") {
    cfg.rotate = parse_bool(key, value);
  } else if (key == "algorithm") {
    const auto v = trim(value);
    if (v == "lra") {
      cfg.algorithm = Algorithm::Lra;
    } else if (v == "fixed" || v == "fixed-eta") {
      cfg.algorithm = Algorithm::FixedEta;
    } else {
      throw Error(ErrorCode::InvalidConfig, "invalid value for algorithm: '" + std::string(v) +
                                                "' (expected lra or fixed)");
    }
  } else if (key == "eta_m") {
    cfg.eta_m = parse_double(key, value);
  } else if (key == "eta_sigma") {
    cfg.eta_sigma = parse_double(key, value);
  } else if (key == "lambda") {
    cfg.lambda = static_cast<int>(parse_integer(key, value));
  } else if (key == "alpha") {
    cfg.lra.alpha = parse_double(key, value);
  } else if (key == "beta_m") {
    cfg.lra.beta_m = parse_double(key, value);
  } else if (key == "beta_sigma") {
    cfg.lra.beta_sigma = parse_double(key, value);
  } else if (key == "gamma") {
    cfg.lra.gamma = parse_double(key, value);
  } else if (key == "budget") {
    cfg.budget = parse_double(key, value);
  } else if (key == "target") {
    cfg.target = parse_double(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_seed(value);
  } else if (key == "trials") {
    cfg.trials = static_cast<int>(parse_integer(key, value));
  } else if (key == "history_stride") {
    cfg.history_stride = static_cast<int>(parse_integer(key, value));
  } else if (key == "ecdf_targets") {
    cfg.ecdf_targets = static_cast<int>(parse_integer(key, value));
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown key: " + std::string(key));
  }
}

inline void validate(const RunConfig& cfg) {
  require_function(cfg.objective);
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (cfg.dim < 1) fail("dim must be >= 1");
  if (!(cfg.noise_variance >= 0.0) || !std::isfinite(cfg.noise_variance)) {
    fail("noise_variance must be finite and >= 0");
  }
  if (!(cfg.eta_m > 0.0 && cfg.eta_m <= 1.0)) fail("eta_m must be in (0, 1]");
  if (!(cfg.eta_sigma > 0.0 && cfg.eta_sigma <= 1.0)) fail("eta_sigma must be in (0, 1]");
  if (cfg.lambda && *cfg.lambda < 2) fail("lambda must be >= 2");
  cfg.lra.validate();
  if (!(cfg.effective_budget() > 0.0)) fail("budget must be > 0");
  if (!std::isfinite(cfg.target)) fail("target must be finite");
  if (cfg.effective_trials() < 1) fail("trials must be >= 1");
  if (cfg.history_stride < 1) fail("history_stride must be >= 1");
  if (cfg.ecdf_targets < 1) fail("ecdf_targets must be >= 1");
}

enum class Termination { Target, Budget, Numerical };

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Target: return "target";
    case Termination::Budget: return "budget";
    case Termination::Numerical: return "numerical";
  }
  return "unknown";
}

struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;  // sampling-stream seed
  bool success = false;
  std::optional<long> evals_to_target;
  Termination termination = Termination::Budget;
  std::string reason;  // detail for numerical terminations
  long evaluations = 0;
  long iterations = 0;
  double final_f_m = 0.0;
  double final_eta_m = 1.0;
  double final_eta_sigma = 1.0;
  double final_sigma = 1.0;
  long eta_bound_violations = 0;
  long eta_floor_hits = 0;
  long clamped_candidates = 0;
  std::vector<IterationReport> history;
  std::vector<std::optional<long>> target_hits;  // aligned with ecdf_targets()
};

/// 10^(6 - 9(i-1)/(n-1)) for i = 1..n.
inline std::vector<double> ecdf_targets(int n) {
  if (n < 1) throw Error(ErrorCode::InvalidConfig, "ecdf_targets must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double exponent = n == 1 ? 6.0 : 6.0 - 9.0 * i / static_cast<double>(n - 1);
    out[static_cast<std::size_t>(i)] = std::pow(10.0, exponent);
  }
  return out;
}

/// `points` log-spaced evaluation counts from 1e2 to `budget`.
inline std::vector<double> ecdf_grid(double budget, int points = 101) {
  std::vector<double> out(static_cast<std::size_t>(points));
  const double lo = 2.0;
  const double hi = std::log10(std::max(budget, 100.0));
  for (int i = 0; i < points; ++i) {
    const double u = points == 1 ? 1.0 : i / static_cast<double>(points - 1);
    out[static_cast<std::size_t>(i)] = std::pow(10.0, lo + u * (hi - lo));
  }
  return out;
}

/// Step-size, or spread sqrt(eig_max(sigma² C)), at or below which a trial
/// stops as numerically degenerate.
inline constexpr double kSigmaUnderflow = 1e-300;
/// Population f range, relative to |f|, below which candidates are
/// indistinguishable.
inline constexpr double kFlatFitnessTol = 1e-12;

/// Runs one trial; deterministic in (cfg, trial_index). Never throws for
/// optimizer failures: those end the trial with Termination::Numerical.
inline TrialRecord run_trial(const RunConfig& cfg, int trial_index) {
  validate(cfg);
  const auto trial = static_cast<std::uint64_t>(trial_index);
  TrialRecord rec;
  rec.trial = trial_index;
  rec.seed = derive_seed(cfg.seed, trial, StreamRole::Sampling);

  std::optional<Matrix> rotation;
  if (cfg.rotate) {
    Rng rot_rng(derive_seed(cfg.seed, trial, StreamRole::Rotation));
    rotation = random_rotation(cfg.dim, rot_rng);
  }
  const Objective obj = make_objective(cfg.objective, cfg.dim, cfg.noise_variance, rotation);
  const InitSpec init = init_spec(obj.function(), cfg.dim);
  const CmaParams params = default_params(cfg.dim, cfg.lambda);

  LraOptions options;
  options.hp = cfg.lra;
  options.adapt = cfg.algorithm == Algorithm::Lra;
  const double eta_m0 = options.adapt ? 1.0 : cfg.eta_m;
  const double eta_s0 = options.adapt ? 1.0 : cfg.eta_sigma;
  LraCmaes opt(SearchDistribution::isotropic(init.m0, init.sigma0), params, options, eta_m0, eta_s0);

  Rng sampling(rec.seed);
  Rng noise(derive_seed(cfg.seed, trial, StreamRole::Noise));
  auto f = [&](const Vector& x) { return obj.evaluate(x, noise); };
  const Box* box = obj.bounds() ? &*obj.bounds() : nullptr;

  const std::vector<double> targets = ecdf_targets(cfg.ecdf_targets);
  rec.target_hits.assign(targets.size(), std::nullopt);
  const double budget = cfg.effective_budget();

  long evals = 0;
  IterationReport report;
  report.f_m = obj.noiseless_value(opt.distribution().mean);
  report.f_best = report.f_m;
  report.eta_m = eta_m0;
  report.eta_sigma = eta_s0;
  report.sigma = init.sigma0;
  report.eig_min = report.eig_max = init.sigma0 * init.sigma0;

  auto record_hits = [&](double f_m) {
    for (std::size_t k = 0; k < targets.size(); ++k) {
      if (!rec.target_hits[k] && f_m <= targets[k]) rec.target_hits[k] = evals;
    }
  };
  record_hits(report.f_m);
  rec.history.push_back(report);

  if (report.f_m <= cfg.target) {
    rec.termination = Termination::Target;
    rec.evals_to_target = 0;
  } else {
    for (;;) {
      if (static_cast<double>(evals + params.lambda) > budget) {
        rec.termination = Termination::Budget;
        break;
      }
      try {
        opt.step(sampling, f, box);
      } catch (const Error& e) {
        rec.termination = Termination::Numerical;
        rec.reason = std::string(to_string(e.code()));
        break;
      }
      evals += params.lambda;
      const Population& pop = opt.last_population();
      rec.clamped_candidates += pop.clamped;

      report = opt.last_report();
      report.evals = evals;
      report.f_m = obj.noiseless_value(opt.distribution().mean);
      record_hits(report.f_m);

      if (options.adapt) {
        const LraState& s = opt.lra_state();
        const double old_m = opt.last_eta_m_old();
        const double old_s = opt.last_eta_sigma_old();
        auto exceeds = [](double before, double after, double gamma, double beta) {
          const double bound = std::min(gamma * before, beta);
          // Allow for rounding in the logarithms themselves.
          const double slack = 1e-15 * std::abs(std::log(before));
          return std::abs(std::log(after) - std::log(before)) > bound * (1.0 + 1e-12) + slack;
        };
        if (exceeds(old_m, s.eta_m, cfg.lra.gamma, cfg.lra.beta_m)) ++rec.eta_bound_violations;
        if (exceeds(old_s, s.eta_sigma, cfg.lra.gamma, cfg.lra.beta_sigma)) {
          ++rec.eta_bound_violations;
        }
      }

      const bool stride_hit = report.t % cfg.history_stride == 0;
      if (stride_hit) rec.history.push_back(report);

      if (report.f_m <= cfg.target) {
        rec.termination = Termination::Target;
        rec.evals_to_target = evals;
        break;
      }
      const double spread = std::sqrt(std::max(report.eig_max, 0.0));
      if (!std::isfinite(report.f_m) || !(report.sigma >= kSigmaUnderflow) ||
          !(spread > kSigmaUnderflow)) {
        rec.termination = Termination::Numerical;
        rec.reason = std::isfinite(report.f_m) ? "sigma_underflow" : "non_finite";
        break;
      }
      const double f_lo = pop.f.minCoeff();
      const double f_hi = pop.f.maxCoeff();
      if (f_hi - f_lo <= kFlatFitnessTol * std::max(std::abs(f_lo), std::abs(f_hi))) {
        rec.termination = Termination::Numerical;
        rec.reason = "flat_fitness";
        break;
      }
    }
  }

  if (rec.history.back().t != report.t) rec.history.push_back(report);
  rec.success = rec.evals_to_target.has_value() && static_cast<double>(*rec.evals_to_target) <= budget;
  rec.evaluations = evals;
  rec.iterations = opt.cma_state().t;
  rec.final_f_m = report.f_m;
  rec.final_eta_m = opt.lra_state().eta_m;
  rec.final_eta_sigma = opt.lra_state().eta_sigma;
  rec.final_sigma = opt.distribution().sigma;
  rec.eta_floor_hits = opt.lra_state().eta_floor_hits;
  return rec;
}

/// Runs all trials on up to `jobs` threads. Results are ordered by trial
/// index regardless of scheduling.
inline std::vector<TrialRecord> run_trials(const RunConfig& cfg, int jobs = 1) {
  validate(cfg);
  const int n = cfg.effective_trials();
  std::vector<TrialRecord> out(static_cast<std::size_t>(n));
  const int workers = std::clamp(jobs, 1, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = run_trial(cfg, i);
    return out;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) {
          try {
            out[static_cast<std::size_t>(i)] = run_trial(cfg, i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

inline double success_rate(std::span<const TrialRecord> records) {
  if (records.empty()) return 0.0;
  const auto wins = std::count_if(records.begin(), records.end(),
                                  [](const TrialRecord& r) { return r.success; });
  return static_cast<double>(wins) / static_cast<double>(records.size());
}

/// Mean evaluations-to-target over successful trials divided by the success
/// rate; empty when no trial succeeded.
inline std::optional<double> sp1(std::span<const TrialRecord> records) {
  double sum = 0.0;
  long wins = 0;
  for (const auto& r : records) {
    if (r.success) {
      sum += static_cast<double>(*r.evals_to_target);
      ++wins;
    }
  }
  if (wins == 0) return std::nullopt;
  return (sum / static_cast<double>(wins)) / success_rate(records);
}

/// Fraction of (trial, target) pairs first hit within each grid budget.
inline std::vector<double> ecdf_curve(std::span<const TrialRecord> records,
                                      std::span<const double> grid) {
  std::vector<long> hits;
  long pairs = 0;
  for (const auto& r : records) {
    pairs += static_cast<long>(r.target_hits.size());
    for (const auto& h : r.target_hits) {
      if (h) hits.push_back(*h);
    }
  }
  std::sort(hits.begin(), hits.end());
  std::vector<double> out(grid.size(), 0.0);
  if (pairs == 0) return out;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto reached = std::upper_bound(hits.begin(), hits.end(), grid[g],
                                          [](double budget, long h) { return budget < static_cast<double>(h); }) -
                         hits.begin();
    out[g] = static_cast<double>(reached) / static_cast<double>(pairs);
  }
  return out;
}

struct SweepRow {
  double value = 0.0;
  double success_rate = 0.0;
  std::optional<double> sp1;
};

inline std::vector<SweepRow> sweep(const RunConfig& base, std::string_view param,
                                   std::span<const double> values, int jobs = 1) {
  std::vector<SweepRow> rows;
  rows.reserve(values.size());
  for (double v : values) {
    RunConfig cfg = base;
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    set_field(cfg, param, std::string_view(buf, static_cast<std::size_t>(ptr - buf)));
    const auto records = run_trials(cfg, jobs);
    rows.push_back({v, success_rate(records), sp1(records)});
  }
  return rows;
}

}  // namespace lracma
