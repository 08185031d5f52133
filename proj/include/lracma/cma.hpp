#pragma once

// Standard CMA-ES (positive recombination weights, CSA, rank-one and rank-mu
// covariance updates) written as a pure transition: one call samples, ranks
// and proposes the next search distribution without mutating its inputs.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lracma/error.hpp"
#include "lracma/linalg.hpp"
#include "lracma/random.hpp"

namespace lracma {

/// Gaussian N(mean, sigma² C).
struct SearchDistribution {
  Vector mean;
  double sigma = 1.0;
  SymMatrix shape;

  static SearchDistribution isotropic(Vector mean, double sigma) {
    const auto d = mean.size();
    return {std::move(mean), sigma, SymMatrix::identity(d)};
  }

  Eigen::Index dim() const noexcept { return mean.size(); }

  /// Σ = σ² C.
  SymMatrix covariance() const { return (sigma * sigma) * shape; }

  bool all_finite() const {
    return mean.allFinite() && std::isfinite(sigma) && shape.all_finite();
  }
};

struct CmaParams {
  int dim = 0;
  int lambda = 0;
  int mu = 0;
  Vector weights;  // length mu, positive, nonincreasing, sums to one
  double mu_w = 0.0;
  double c_sigma = 0.0;
  double d_sigma = 0.0;
  double c_c = 0.0;
  double c_1 = 0.0;
  double c_mu = 0.0;
  double c_m = 1.0;
  double chi_d = 0.0;  // E||N(0, I)||
};

inline int default_lambda(int d) {
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(d))));
}

/// Recommended strategy constants for dimension `d`. Only positive weights
/// on the best floor(lambda/2) samples are used.
inline CmaParams default_params(int d, std::optional<int> lambda = std::nullopt) {
  if (d < 1) throw Error(ErrorCode::InvalidConfig, "dim must be >= 1");
  const int lam = lambda.value_or(default_lambda(d));
  if (lam < 2) {
    throw Error(ErrorCode::InvalidConfig, "lambda must be >= 2, got " + std::to_string(lam));
  }
  CmaParams p;
  p.dim = d;
  p.lambda = lam;
  p.mu = lam / 2;

  p.weights.resize(p.mu);
  for (int i = 0; i < p.mu; ++i) {
    p.weights[i] = std::log(p.mu + 0.5) - std::log(static_cast<double>(i + 1));
  }
  p.weights /= p.weights.sum();
  p.mu_w = 1.0 / p.weights.squaredNorm();

  const double n = d;
  const double mw = p.mu_w;
  p.c_sigma = (mw + 2.0) / (n + mw + 5.0);
  p.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((mw - 1.0) / (n + 1.0)) - 1.0) + p.c_sigma;
  p.c_c = (4.0 + mw / n) / (n + 4.0 + 2.0 * mw / n);
  p.c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + mw);
  p.c_mu = std::min(1.0 - p.c_1, 2.0 * (mw - 2.0 + 1.0 / mw) / ((n + 2.0) * (n + 2.0) + mw));
  p.c_m = 1.0;
  p.chi_d = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
  return p;
}

struct CmaState {
  Vector p_sigma;
  Vector p_c;
  long t = 0;

  static CmaState initial(Eigen::Index d) { return {Vector::Zero(d), Vector::Zero(d), 0}; }
};

/// Axis-aligned feasible region.
struct Box {
  Vector lower;
  Vector upper;

  bool contains(const Vector& x) const {
    return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
  }
  Vector clamp(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
};

/// Maximum redraws of one infeasible candidate before it is clamped.
inline constexpr int kMaxResamples = 100;

/// One generation. Columns of z, y, x are candidates in sample order; `order`
/// lists sample indices best first once ranked.
struct Population {
  Matrix z;
  Matrix y;
  Matrix x;
  Vector f;
  std::vector<int> order;
  int clamped = 0;  // candidates evaluated at a clamped point

  int size() const noexcept { return static_cast<int>(z.cols()); }
};

/// Builds y = sqrt(C) z and x = m + sigma y from given standard normals.
inline Population population_from_normals(const SearchDistribution& dist, const SymMatrix& sqrt_c,
                                          Matrix z) {
  Population pop;
  pop.y = sqrt_c.matrix() * z;
  pop.x = (dist.sigma * pop.y).colwise() + dist.mean;
  pop.z = std::move(z);
  return pop;
}

inline Population population_from_normals(const SearchDistribution& dist, Matrix z) {
  return population_from_normals(dist, spd_sqrt(dist.shape), std::move(z));
}

/// Draws lambda candidates. Normals are consumed candidate by candidate,
/// coordinate ascending. With a box, an infeasible candidate is redrawn
/// immediately (up to kMaxResamples times) before the next one is drawn; if it
/// stays infeasible its x is clamped while z, y keep the last draw.
inline Population sample_population(const SearchDistribution& dist, const SymMatrix& sqrt_c,
                                    const CmaParams& params, Rng& rng, const Box* box = nullptr) {
  const Eigen::Index d = dist.dim();
  Matrix z(d, params.lambda);
  if (box == nullptr) {
    rng.fill_normal(z);
    return population_from_normals(dist, sqrt_c, std::move(z));
  }

  Population pop;
  pop.z.resize(d, params.lambda);
  pop.y.resize(d, params.lambda);
  pop.x.resize(d, params.lambda);
  Vector zi(d);
  for (int i = 0; i < params.lambda; ++i) {
    Vector yi, xi;
    for (int attempt = 0;; ++attempt) {
      rng.fill_normal(zi);
      yi = sqrt_c.matrix() * zi;
      xi = dist.mean + dist.sigma * yi;
      if (box->contains(xi)) break;
      if (attempt + 1 >= kMaxResamples) {
        xi = box->clamp(xi);
        ++pop.clamped;
        break;
      }
    }
    pop.z.col(i) = zi;
    pop.y.col(i) = yi;
    pop.x.col(i) = xi;
  }
  return pop;
}

inline Population sample_population(const SearchDistribution& dist, const CmaParams& params,
                                    Rng& rng, const Box* box = nullptr) {
  return sample_population(dist, spd_sqrt(dist.shape), params, rng, box);
}

/// Stable ascending order of sample indices; ties keep the lower index first.
inline std::vector<int> rank(std::span<const double> f) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (std::isnan(f[i])) {
      throw Error(ErrorCode::ObjectiveNaN, "objective returned NaN for sample " + std::to_string(i));
    }
  }
  std::vector<int> order(f.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
  return order;
}

/// Evaluates every candidate with `f` (in sample order) and ranks them.
template <class Fn>
void evaluate_and_rank(Population& pop, Fn&& f) {
  pop.f.resize(pop.size());
  for (int i = 0; i < pop.size(); ++i) pop.f[i] = f(Vector(pop.x.col(i)));
  pop.order = rank(std::span<const double>(pop.f.data(), static_cast<std::size_t>(pop.f.size())));
}

/// Weighted means of the mu best z and y columns.
inline std::pair<Vector, Vector> weighted_steps(const Population& ranked, const CmaParams& params) {
  Vector dz = Vector::Zero(ranked.z.rows());
  Vector dy = Vector::Zero(ranked.y.rows());
  for (int i = 0; i < params.mu; ++i) {
    const int k = ranked.order[static_cast<std::size_t>(i)];
    dz += params.weights[i] * ranked.z.col(k);
    dy += params.weights[i] * ranked.y.col(k);
  }
  return {dz, dy};
}

struct PathUpdate {
  CmaState state;
  bool h_sigma = true;
};

/// Heaviside threshold on ||p_sigma||² / (1 - (1 - c_sigma)^(2(t+1))).
inline double h_sigma_threshold(int d) { return (2.0 + 4.0 / (d + 1.0)) * d; }

/// Evolution-path update. Leaves `t` untouched.
inline PathUpdate update_paths(const CmaState& state, const CmaParams& params, const Vector& dz,
                               const Vector& dy) {
  PathUpdate out;
  out.state.t = state.t;
  const double cs = params.c_sigma;
  out.state.p_sigma = (1.0 - cs) * state.p_sigma + std::sqrt(cs * (2.0 - cs) * params.mu_w) * dz;

  const double correction = 1.0 - std::pow(1.0 - cs, 2.0 * static_cast<double>(state.t + 1));
  out.h_sigma = out.state.p_sigma.squaredNorm() / correction < h_sigma_threshold(params.dim);

  const double cc = params.c_c;
  out.state.p_c = (1.0 - cc) * state.p_c;
  if (out.h_sigma) out.state.p_c += std::sqrt(cc * (2.0 - cc) * params.mu_w) * dy;
  return out;
}

struct Proposal {
  SearchDistribution dist;
  CmaState state;  // t not yet incremented
  bool h_sigma = true;
};

/// sigma * exp(min(1, (c_sigma / d_sigma)(||p_sigma|| / chi_d - 1))).
inline double csa_sigma(double sigma, const CmaParams& params, double p_sigma_norm) {
  const double exponent = (params.c_sigma / params.d_sigma) * (p_sigma_norm / params.chi_d - 1.0);
  return sigma * std::exp(std::min(1.0, exponent));
}

/// Mean, step-size and covariance update from a ranked population.
inline Proposal propose_update(const SearchDistribution& dist, const CmaParams& params,
                               const CmaState& state, const Population& ranked) {
  const auto [dz, dy] = weighted_steps(ranked, params);
  PathUpdate paths = update_paths(state, params, dz, dy);

  Proposal out;
  out.h_sigma = paths.h_sigma;
  out.state = std::move(paths.state);

  out.dist.mean = dist.mean + params.c_m * dist.sigma * dy;
  out.dist.sigma = csa_sigma(dist.sigma, params, out.state.p_sigma.norm());

  const Matrix& c = dist.shape.matrix();
  const double cc = params.c_c;
  const double stall = out.h_sigma ? 0.0 : params.c_1 * cc * (2.0 - cc);
  Matrix rank_mu = Matrix::Zero(c.rows(), c.cols());
  for (int i = 0; i < params.mu; ++i) {
    const auto yi = ranked.y.col(ranked.order[static_cast<std::size_t>(i)]);
    rank_mu.noalias() += params.weights[i] * (yi * yi.transpose());
  }
  Matrix next = (1.0 + stall) * c + params.c_1 * (out.state.p_c * out.state.p_c.transpose() - c) +
                params.c_mu * (rank_mu - params.weights.sum() * c);
  out.dist.shape = SymMatrix(std::move(next));

  if (!out.dist.all_finite() || !out.state.p_sigma.allFinite() || !out.state.p_c.allFinite()) {
    throw Error(ErrorCode::NumericalRange, "non-finite CMA update", state.t);
  }
  return out;
}

struct CmaStepResult {
  SearchDistribution dist;
  CmaState state;
  Population population;
};

/// One plain CMA-ES generation on given standard normals.
template <class Fn>
CmaStepResult cma_step(const SearchDistribution& dist, const CmaParams& params,
                       const CmaState& state, Matrix z, Fn&& f) {
  Population pop = population_from_normals(dist, std::move(z));
  evaluate_and_rank(pop, f);
  Proposal next = propose_update(dist, params, state, pop);
  next.state.t = state.t + 1;
  return {std::move(next.dist), std::move(next.state), std::move(pop)};
}

template <class Fn>
CmaStepResult cma_step(const SearchDistribution& dist, const CmaParams& params,
                       const CmaState& state, Rng& rng, Fn&& f, const Box* box = nullptr) {
  Population pop = sample_population(dist, params, rng, box);
  evaluate_and_rank(pop, f);
  Proposal next = propose_update(dist, params, state, pop);
  next.state.t = state.t + 1;
  return {std::move(next.dist), std::move(next.state), std::move(pop)};
}

}  // namespace lracma
