#pragma once

// Natural-gradient flow of a 1-D Gaussian N(m, v) on the 1-D Rastrigin
// function 10 + x² - 10 cos(2πx), with fitness weighting W = -f, and its
// explicit Euler discretization.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "lracma/error.hpp"

namespace lracma::ode {

struct OdeState {
  double m = 0.0;
  double v = 1.0;
  long step = 0;
};

struct Derivative {
  double dm = 0.0;
  double dv = 0.0;
};

inline Derivative rastrigin_ode_rhs(double m, double v) {
  using std::numbers::pi;
  const double damping = std::exp(-2.0 * pi * pi * v);
  return {-2.0 * m * v - 20.0 * pi * v * std::sin(2.0 * pi * m) * damping,
          -2.0 * v * v - 40.0 * pi * pi * v * v * std::cos(2.0 * pi * m) * damping};
}

enum class Stop {
  Steps,              // step budget used up
  Stationary,         // max(|dm|, |dv|) fell below the tolerance
  DegenerateVariance  // v left the positive half-line; trajectory is partial
};

struct IntegrateOptions {
  long steps = 10'000'000;
  long stride = 1000;  // emit every stride-th state
  double stationary_tol = 1e-12;
};

struct Trajectory {
  std::vector<OdeState> states;  // thinned; first and last state always kept
  OdeState final;
  Stop stop = Stop::Steps;
};

inline Trajectory euler_integrate(OdeState init, double eta, const IntegrateOptions& opt = {}) {
  if (!(eta > 0.0)) throw Error(ErrorCode::InvalidConfig, "eta must be > 0");
  if (!(init.v > 0.0)) {
    throw Error(ErrorCode::DegenerateVariance, "initial variance must be > 0");
  }
  const long stride = std::max(1L, opt.stride);
  Trajectory out;
  OdeState s = init;
  s.step = 0;
  out.states.push_back(s);
  for (;;) {
    if (s.step >= opt.steps) {
      out.stop = Stop::Steps;
      break;
    }
    const Derivative d = rastrigin_ode_rhs(s.m, s.v);
    if (std::max(std::abs(d.dm), std::abs(d.dv)) < opt.stationary_tol) {
      out.stop = Stop::Stationary;
      break;
    }
    const OdeState next{s.m + eta * d.dm, s.v + eta * d.dv, s.step + 1};
    if (!(next.v > 0.0)) {
      out.stop = Stop::DegenerateVariance;
      break;
    }
    s = next;
    if (s.step % stride == 0) out.states.push_back(s);
  }
  if (out.states.back().step != s.step) out.states.push_back(s);
  out.final = s;
  return out;
}

}  // namespace lracma::ode
