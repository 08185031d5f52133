#pragma once

// Reference computations used only by the tests.

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "lracma/cma.hpp"
#include "lracma/lra.hpp"
#include "lracma/random.hpp"

namespace oracle {

using lracma::Vector;

/// Blom's approximation of E[N_{i:lambda}], i = 1..lambda, ascending.
inline std::vector<double> blom_order_statistics(int lambda) {
  const boost::math::normal_distribution<double> n01;
  std::vector<double> out(static_cast<std::size_t>(lambda));
  for (int i = 1; i <= lambda; ++i) {
    out[static_cast<std::size_t>(i - 1)] = boost::math::quantile(n01, (i - 0.375) / (lambda + 0.25));
  }
  return out;
}

/// (wᵀn)² / (‖w‖² ‖n‖²) with w padded by zeros to lambda entries.
inline double weight_alignment(const Vector& weights, int lambda) {
  const auto n = blom_order_statistics(lambda);
  double wn = 0.0, ww = 0.0, nn = 0.0;
  for (int i = 0; i < lambda; ++i) {
    const double w = i < weights.size() ? weights[i] : 0.0;
    const double ni = n[static_cast<std::size_t>(i)];
    wn += w * ni;
    ww += w * w;
    nn += ni * ni;
  }
  return wn * wn / (ww * nn);
}

/// Large-d approximation of the mean-update SNR on the sphere:
/// lambda / (d - 1) * (wᵀn)² / (‖w‖² ‖n‖²).
inline double theoretical_sphere_snr(int d, const Vector& weights, int lambda) {
  return lambda / static_cast<double>(d - 1) * weight_alignment(weights, lambda);
}

/// Feeds i.i.d. N(mu, s² I) deltas in `dim` dimensions with ‖mu‖² / Tr(S) =
/// `ratio` to the moving-average estimator. Returns the average of the SNR
/// estimate over `samples` updates after 10/beta warm-up updates.
inline double snr_time_average(double ratio, double beta, std::uint64_t seed, int dim = 10,
                               int samples = 10'000) {
  lracma::Rng rng(seed);
  const double s = 1.0;
  const double trace = dim * s * s;
  Vector mu = Vector::Zero(dim);
  mu[0] = std::sqrt(ratio * trace);
  Vector e = Vector::Zero(dim);
  double v = 0.0;
  Vector delta(dim);
  const int warmup = static_cast<int>(std::ceil(10.0 / beta));
  double sum = 0.0;
  for (int t = 0; t < warmup + samples; ++t) {
    for (int k = 0; k < dim; ++k) delta[k] = mu[k] + s * rng.normal();
    const auto avg = lracma::update_averages(e, v, delta, beta);
    e = avg.e;
    v = avg.v;
    if (t >= warmup) sum += lracma::estimate_snr(e, v, beta);
  }
  return sum / samples;
}

}  // namespace oracle
