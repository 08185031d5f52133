#pragma once

// Learning-rate adaptation wrapped around one CMA-ES generation.
//
// The raw CMA update of m and Σ = σ²C is measured in the local coordinates in
// which the Fisher metric is the identity, its signal-to-noise ratio is
// estimated from exponential moving averages, and separate learning-rate
// factors for m and Σ are steered so that the estimate tracks alpha * eta.
// The damped updates are then applied, Σ is split back into σ and a
// unit-determinant C, and σ is rescaled by eta_m(old) / eta_m(new).

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "lracma/cma.hpp"
#include "lracma/error.hpp"
#include "lracma/linalg.hpp"
#include "lracma/random.hpp"

namespace lracma {

struct LraHyperParams {
  double alpha = 1.4;
  double beta_m = 0.1;
  double beta_sigma = 0.03;
  double gamma = 0.1;

  void validate() const {
    if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidConfig, "alpha must be > 0");
    if (!(beta_m > 0.0 && beta_m < 1.0)) throw Error(ErrorCode::InvalidConfig, "beta_m must be in (0, 1)");
    if (!(beta_sigma > 0.0 && beta_sigma < 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "beta_sigma must be in (0, 1)");
    }
    if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidConfig, "gamma must be > 0");
  }
};

/// Returned by estimate_snr when V - ||E||² is not positive.
inline constexpr double kSnrMax = 1e6;
inline constexpr double kSnrDenominatorFloor = 1e-300;
/// Lower bound on both learning-rate factors.
inline constexpr double kEtaMin = 1e-10;

struct LraState {
  double eta_m = 1.0;
  double eta_sigma = 1.0;
  Vector e_m;
  double v_m = 0.0;
  Vector e_sigma;  // row-major vec of a d x d matrix
  double v_sigma = 0.0;
  long eta_floor_hits = 0;

  static LraState initial(Eigen::Index d, double eta_m = 1.0, double eta_sigma = 1.0) {
    LraState s;
    s.eta_m = eta_m;
    s.eta_sigma = eta_sigma;
    s.e_m = Vector::Zero(d);
    s.e_sigma = Vector::Zero(d * d);
    return s;
  }
};

/// Full row-major vectorization (d² entries).
inline Vector vec(const Matrix& a) {
  Vector out(a.size());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out[k++] = a(i, j);
  }
  return out;
}

inline Matrix unvec(const Vector& v, Eigen::Index d) {
  if (v.size() != d * d) {
    throw Error(ErrorCode::InvalidInput, "vec length " + std::to_string(v.size()) +
                                             " does not match dim " + std::to_string(d));
  }
  Matrix out(d, d);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) out(i, j) = v[k++];
  }
  return out;
}

/// Raw one-step differences of m and vec(Σ).
struct Deltas {
  Vector mean;
  Vector cov;
};

inline Deltas compute_deltas(const SearchDistribution& old, const SearchDistribution& proposed) {
  if (old.dim() != proposed.dim()) {
    throw Error(ErrorCode::InvalidInput, "distributions differ in dimension");
  }
  return {proposed.mean - old.mean,
          vec(proposed.covariance().matrix() - old.covariance().matrix())};
}

struct LocalDelta {
  Vector mean;
  Vector cov;
};

/// Expresses deltas where the Fisher metric at the old distribution is the
/// identity, given Σ_old^{-1/2}.
inline LocalDelta to_local(const SymMatrix& inv_sqrt_sigma, const Deltas& deltas) {
  const Matrix& w = inv_sqrt_sigma.matrix();
  const Eigen::Index d = w.rows();
  LocalDelta out;
  out.mean = w * deltas.mean;
  const Matrix dsig = unvec(deltas.cov, d);
  out.cov = vec(w * dsig * w) / std::sqrt(2.0);
  return out;
}

inline LocalDelta to_local(const SearchDistribution& old, const Deltas& deltas) {
  return to_local(spd_inv_sqrt(old.covariance()), deltas);
}

struct Averages {
  Vector e;
  double v = 0.0;
};

inline Averages update_averages(const Vector& e, double v, const Vector& delta, double beta) {
  return {(1.0 - beta) * e + beta * delta, (1.0 - beta) * v + beta * delta.squaredNorm()};
}

/// (||E||² - beta/(2-beta) V) / (V - ||E||²), capped at kSnrMax when the
/// denominator is not positive.
inline double estimate_snr(const Vector& e, double v, double beta) {
  const double e2 = e.squaredNorm();
  const double denom = v - e2;
  if (!(denom > kSnrDenominatorFloor)) return kSnrMax;
  return (e2 - (beta / (2.0 - beta)) * v) / denom;
}

/// eta * exp(min(gamma eta, beta) * clip(snr / (alpha eta) - 1, -1, 1)),
/// capped at one and floored at kEtaMin.
inline double update_eta(double eta, double snr_hat, const LraHyperParams& hp, double beta) {
  const double relative = std::clamp(snr_hat / (hp.alpha * eta) - 1.0, -1.0, 1.0);
  double next = eta * std::exp(std::min(hp.gamma * eta, beta) * relative);
  next = std::min(next, 1.0);
  return std::max(next, kEtaMin);
}

/// Mean and full covariance after the damped update, before decomposition.
struct DampedUpdate {
  Vector mean;
  SymMatrix cov;
  EigenDecomposition eig;  // of cov, after repair
};

inline DampedUpdate apply_updates(const SearchDistribution& old, const Deltas& deltas, double eta_m,
                                  double eta_sigma) {
  const Eigen::Index d = old.dim();
  DampedUpdate out;
  out.mean = old.mean + eta_m * deltas.mean;
  const Matrix raw = old.covariance().matrix() + eta_sigma * unvec(deltas.cov, d);
  const Matrix symmetric = 0.5 * (raw + raw.transpose());
  SymMatrix cov(symmetric);
  out.eig = sym_eig(cov);
  out.cov = spd_repair(cov, out.eig);
  out.eig.values = clamped_eigenvalues(out.eig.values);
  return out;
}

struct Decomposition {
  double sigma = 1.0;
  SymMatrix shape;
  EigenDecomposition eig;  // of the input Σ
};

/// σ = det(Σ)^(1/(2d)), C = Σ / σ², reusing an eigensystem of Σ.
inline Decomposition decompose(const SymMatrix& sigma_matrix, EigenDecomposition eig) {
  const auto d = static_cast<double>(sigma_matrix.dim());
  Decomposition out;
  out.eig = std::move(eig);
  out.sigma = std::exp(spd_log_det(out.eig) / (2.0 * d));
  if (!std::isfinite(out.sigma) || !(out.sigma > 0.0)) {
    throw Error(ErrorCode::NumericalRange, "step-size from determinant out of range");
  }
  out.shape = (1.0 / (out.sigma * out.sigma)) * sigma_matrix;
  return out;
}

inline Decomposition decompose(const SymMatrix& sigma_matrix) {
  return decompose(sigma_matrix, sym_eig(sigma_matrix));
}

inline double correct_stepsize(double sigma, double eta_m_old, double eta_m_new) {
  return sigma * (eta_m_old / eta_m_new);
}

struct LraOptions {
  LraHyperParams hp;
  /// When false the factors stay at their initial values. With both factors
  /// exactly one the CMA proposal is then accepted verbatim (plain CMA-ES).
  bool adapt = true;
};

struct IterationReport {
  long t = 0;  // iterations completed
  long evals = 0;
  double f_m = 0.0;  // noiseless f(m), filled by the caller
  double f_best = 0.0;
  double eta_m = 1.0;
  double eta_sigma = 1.0;
  double snr_m = 0.0;
  double snr_sigma = 0.0;
  double sigma = 1.0;
  double eig_min = 1.0;  // eigenvalues of σ²C
  double eig_max = 1.0;
};

struct LraStepResult {
  SearchDistribution dist;
  CmaState cma;
  LraState lra;
  IterationReport report;
  Population population;
  double eta_m_old = 1.0;
  double eta_sigma_old = 1.0;
};

namespace detail {

template <class Fn>
LraStepResult lra_step_on(const SearchDistribution& dist, const CmaParams& params,
                          const CmaState& cma_state, const LraOptions& options,
                          const LraState& lra_state, Population pop,
                          const SymMatrix& inv_sqrt_c, Fn&& f) {
  const long t = cma_state.t;
  try {
    evaluate_and_rank(pop, f);
    Proposal proposal = propose_update(dist, params, cma_state, pop);

    LraStepResult out;
    out.eta_m_old = lra_state.eta_m;
    out.eta_sigma_old = lra_state.eta_sigma;
    out.lra = lra_state;
    out.cma = std::move(proposal.state);
    out.cma.t = t + 1;

    const Deltas deltas = compute_deltas(dist, proposal.dist);
    // Σ^{-1/2} = C^{-1/2} / σ.
    const LocalDelta local = to_local((1.0 / dist.sigma) * inv_sqrt_c, deltas);

    const double beta_m = options.hp.beta_m;
    const double beta_s = options.hp.beta_sigma;
    Averages avg_m = update_averages(lra_state.e_m, lra_state.v_m, local.mean, beta_m);
    Averages avg_s = update_averages(lra_state.e_sigma, lra_state.v_sigma, local.cov, beta_s);
    const double snr_m = estimate_snr(avg_m.e, avg_m.v, beta_m);
    const double snr_s = estimate_snr(avg_s.e, avg_s.v, beta_s);
    out.lra.e_m = std::move(avg_m.e);
    out.lra.v_m = avg_m.v;
    out.lra.e_sigma = std::move(avg_s.e);
    out.lra.v_sigma = avg_s.v;

    if (options.adapt) {
      out.lra.eta_m = update_eta(lra_state.eta_m, snr_m, options.hp, beta_m);
      out.lra.eta_sigma = update_eta(lra_state.eta_sigma, snr_s, options.hp, beta_s);
      if (out.lra.eta_m == kEtaMin) ++out.lra.eta_floor_hits;
      if (out.lra.eta_sigma == kEtaMin) ++out.lra.eta_floor_hits;
    }

    EigenDecomposition eig_new;
    if (!options.adapt && lra_state.eta_m == 1.0 && lra_state.eta_sigma == 1.0) {
      out.dist = std::move(proposal.dist);
      eig_new = sym_eig(out.dist.covariance());
    } else {
      DampedUpdate damped = apply_updates(dist, deltas, out.lra.eta_m, out.lra.eta_sigma);
      Decomposition split = decompose(damped.cov, std::move(damped.eig));
      out.dist.mean = std::move(damped.mean);
      out.dist.sigma = correct_stepsize(split.sigma, out.eta_m_old, out.lra.eta_m);
      out.dist.shape = std::move(split.shape);
      eig_new = std::move(split.eig);
      const double rescale = out.dist.sigma / split.sigma;
      eig_new.values *= rescale * rescale;
    }
    if (!out.dist.all_finite()) {
      throw Error(ErrorCode::NumericalRange, "non-finite distribution after update");
    }

    out.report.t = t + 1;
    out.report.f_best = pop.f[pop.order.front()];
    out.report.eta_m = out.lra.eta_m;
    out.report.eta_sigma = out.lra.eta_sigma;
    out.report.snr_m = snr_m;
    out.report.snr_sigma = snr_s;
    out.report.sigma = out.dist.sigma;
    out.report.eig_min = eig_new.values.minCoeff();
    out.report.eig_max = eig_new.values.maxCoeff();
    out.population = std::move(pop);
    return out;
  } catch (const Error& e) {
    if (e.iteration()) throw;
    throw e.at_iteration(t);
  }
}

}  // namespace detail

/// One generation of the learning-rate-adapted CMA-ES.
template <class Fn>
LraStepResult lra_step(const SearchDistribution& dist, const CmaParams& params,
                       const CmaState& cma_state, const LraOptions& options,
                       const LraState& lra_state, Rng& rng, Fn&& f, const Box* box = nullptr) {
  const EigenDecomposition eig = sym_eig(dist.shape);
  Population pop = sample_population(dist, spd_sqrt(eig), params, rng, box);
  return detail::lra_step_on(dist, params, cma_state, options, lra_state, std::move(pop),
                             spd_inv_sqrt(eig), f);
}

/// Same as above on caller-supplied standard normals (d x lambda).
template <class Fn>
LraStepResult lra_step(const SearchDistribution& dist, const CmaParams& params,
                       const CmaState& cma_state, const LraOptions& options,
                       const LraState& lra_state, Matrix z, Fn&& f) {
  const EigenDecomposition eig = sym_eig(dist.shape);
  Population pop = population_from_normals(dist, spd_sqrt(eig), std::move(z));
  return detail::lra_step_on(dist, params, cma_state, options, lra_state, std::move(pop),
                             spd_inv_sqrt(eig), f);
}

/// Stateful convenience wrapper around lra_step.
class LraCmaes {
 public:
  LraCmaes(SearchDistribution init, CmaParams params, LraOptions options = {},
           double eta_m0 = 1.0, double eta_sigma0 = 1.0)
      : dist_(std::move(init)),
        params_(std::move(params)),
        cma_(CmaState::initial(dist_.dim())),
        options_(options),
        lra_(LraState::initial(dist_.dim(), eta_m0, eta_sigma0)) {
    options_.hp.validate();
  }

  template <class Fn>
  const IterationReport& step(Rng& rng, Fn&& f, const Box* box = nullptr) {
    return absorb(lra_step(dist_, params_, cma_, options_, lra_, rng, f, box));
  }

  template <class Fn>
  const IterationReport& step(Matrix z, Fn&& f) {
    return absorb(lra_step(dist_, params_, cma_, options_, lra_, std::move(z), f));
  }

  const SearchDistribution& distribution() const { return dist_; }
  const CmaParams& params() const { return params_; }
  const LraOptions& options() const { return options_; }
  const CmaState& cma_state() const { return cma_; }
  const LraState& lra_state() const { return lra_; }
  const IterationReport& last_report() const { return report_; }
  const Population& last_population() const { return population_; }
  double last_eta_m_old() const { return eta_m_old_; }
  double last_eta_sigma_old() const { return eta_sigma_old_; }

 private:
  const IterationReport& absorb(LraStepResult r) {
    dist_ = std::move(r.dist);
    cma_ = std::move(r.cma);
    lra_ = std::move(r.lra);
    report_ = r.report;
    population_ = std::move(r.population);
    eta_m_old_ = r.eta_m_old;
    eta_sigma_old_ = r.eta_sigma_old;
    return report_;
  }

  SearchDistribution dist_;
  CmaParams params_;
  CmaState cma_;
  LraOptions options_;
  LraState lra_;
  IterationReport report_;
  Population population_;
  double eta_m_old_ = 1.0;
  double eta_sigma_old_ = 1.0;
};

}  // namespace lracma
