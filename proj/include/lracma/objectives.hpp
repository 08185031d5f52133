#pragma once

// Benchmark functions with their initial distributions, an additive Gaussian
// noise model and an optional orthogonal rotation of the search space.

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "lracma/cma.hpp"
#include "lracma/error.hpp"
#include "lracma/linalg.hpp"
#include "lracma/random.hpp"

namespace lracma {

enum class Function {
  Sphere,
  Ellipsoid,
  Rosenbrock,
  Ackley,
  Schaffer,
  Rastrigin,
  Bohachevsky,
  Griewank,
};

inline constexpr std::array<std::string_view, 8> kObjectiveNames = {
    "sphere", "ellipsoid", "rosenbrock", "ackley",
    "schaffer", "rastrigin", "bohachevsky", "griewank"};

inline std::optional<Function> parse_function(std::string_view name) {
  for (std::size_t i = 0; i < kObjectiveNames.size(); ++i) {
    if (kObjectiveNames[i] == name) return static_cast<Function>(i);
  }
  return std::nullopt;
}

inline std::string_view function_name(Function f) {
  return kObjectiveNames[static_cast<std::size_t>(f)];
}

inline Function require_function(std::string_view name) {
  auto f = parse_function(name);
  if (!f) throw Error(ErrorCode::InvalidConfig, "unknown objective: " + std::string(name));
  return *f;
}

namespace functions {

inline double sphere(const Vector& x) { return x.squaredNorm(); }

inline double ellipsoid(const Vector& x) {
  const auto d = x.size();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double exponent = d > 1 ? static_cast<double>(i) / static_cast<double>(d - 1) : 0.0;
    const double scaled = std::pow(1000.0, exponent) * x[i];
    sum += scaled * scaled;
  }
  return sum;
}

inline double rosenbrock(const Vector& x) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = x[i] - 1.0;
    sum += 100.0 * a * a + b * b;
  }
  return sum;
}

inline double ackley(const Vector& x) {
  using std::numbers::e;
  using std::numbers::pi;
  const double d = static_cast<double>(x.size());
  const double rms = std::sqrt(x.squaredNorm() / d);
  const double cos_mean = (2.0 * pi * x.array()).cos().sum() / d;
  return 20.0 - 20.0 * std::exp(-0.2 * rms) + e - std::exp(cos_mean);
}

inline double schaffer(const Vector& x) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    const double r2 = x[i] * x[i] + x[i + 1] * x[i + 1];
    const double s = std::sin(50.0 * std::pow(r2, 0.1));
    sum += std::pow(r2, 0.25) * (s * s + 1.0);
  }
  return sum;
}

inline double rastrigin(const Vector& x) {
  using std::numbers::pi;
  double sum = 10.0 * static_cast<double>(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    sum += x[i] * x[i] - 10.0 * std::cos(2.0 * pi * x[i]);
  }
  return sum;
}

inline double bohachevsky(const Vector& x) {
  using std::numbers::pi;
  double sum = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
    sum += x[i] * x[i] + 2.0 * x[i + 1] * x[i + 1] - 0.3 * std::cos(3.0 * pi * x[i]) -
           0.4 * std::cos(4.0 * pi * x[i + 1]) + 0.7;
  }
  return sum;
}

inline double griewank(const Vector& x) {
  double prod = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    prod *= std::cos(x[i] / std::sqrt(static_cast<double>(i + 1)));
  }
  return x.squaredNorm() / 4000.0 - prod + 1.0;
}

}  // namespace functions

inline double base_value(Function f, const Vector& x) {
  switch (f) {
    case Function::Sphere: return functions::sphere(x);
    case Function::Ellipsoid: return functions::ellipsoid(x);
    case Function::Rosenbrock: return functions::rosenbrock(x);
    case Function::Ackley: return functions::ackley(x);
    case Function::Schaffer: return functions::schaffer(x);
    case Function::Rastrigin: return functions::rastrigin(x);
    case Function::Bohachevsky: return functions::bohachevsky(x);
    case Function::Griewank: return functions::griewank(x);
  }
  return 0.0;
}

struct InitSpec {
  Vector m0;
  double sigma0 = 1.0;
};

inline InitSpec init_spec(Function f, int d) {
  auto uniform = [d](double m, double s) { return InitSpec{Vector::Constant(d, m), s}; };
  switch (f) {
    case Function::Sphere:
    case Function::Ellipsoid:
    case Function::Rastrigin: return uniform(3.0, 2.0);
    case Function::Rosenbrock: return uniform(0.0, 0.1);
    case Function::Ackley: return uniform(15.5, 14.5);
    case Function::Schaffer: return uniform(55.0, 45.0);
    case Function::Bohachevsky: return uniform(8.0, 7.0);
    case Function::Griewank: return uniform(305.0, 295.0);
  }
  return uniform(0.0, 1.0);
}

inline InitSpec init_spec(std::string_view name, int d) {
  if (d < 1) throw Error(ErrorCode::InvalidConfig, "dim must be >= 1");
  return init_spec(require_function(name), d);
}

/// Ackley's conventional domain. Contains the initial region [1, 30]^d and
/// the optimum at the origin.
inline constexpr double kAckleyBound = 32.768;

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs
/// of R's diagonal moved into Q.
inline Matrix random_rotation(int d, Rng& rng) {
  Matrix g(d, d);
  rng.fill_normal(g);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

/// A benchmark instance. Immutable after construction; evaluation is
/// reentrant as long as callers pass distinct noise streams.
class Objective {
 public:
  Objective(Function f, int dim, double noise_variance = 0.0,
            std::optional<Matrix> rotation = std::nullopt)
      : function_(f), dim_(dim), noise_variance_(noise_variance), rotation_(std::move(rotation)) {
    if (dim < 1) throw Error(ErrorCode::InvalidConfig, "dim must be >= 1");
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
      throw Error(ErrorCode::InvalidConfig, "noise_variance must be finite and >= 0");
    }
    if (rotation_ && (rotation_->rows() != dim || rotation_->cols() != dim)) {
      throw Error(ErrorCode::InvalidConfig, "rotation matrix has wrong shape");
    }
    if (f == Function::Ackley) {
      bounds_ = Box{Vector::Constant(dim, -kAckleyBound), Vector::Constant(dim, kAckleyBound)};
    }
  }

  std::string_view name() const { return function_name(function_); }
  Function function() const { return function_; }
  int dim() const { return dim_; }
  double noise_variance() const { return noise_variance_; }
  const std::optional<Matrix>& rotation() const { return rotation_; }
  const std::optional<Box>& bounds() const { return bounds_; }

  double noiseless_value(const Vector& x) const {
    if (x.size() != dim_) {
      throw Error(ErrorCode::InvalidInput, "expected dimension " + std::to_string(dim_) +
                                               ", got " + std::to_string(x.size()));
    }
    if (rotation_) return base_value(function_, *rotation_ * x);
    return base_value(function_, x);
  }

  /// Noiseless value plus one fresh N(0, noise_variance) draw when noisy.
  double evaluate(const Vector& x, Rng& noise) const {
    const double value = noiseless_value(x);
    if (noise_variance_ > 0.0) return value + std::sqrt(noise_variance_) * noise.normal();
    return value;
  }

 private:
  Function function_;
  int dim_;
  double noise_variance_;
  std::optional<Matrix> rotation_;
  std::optional<Box> bounds_;
};

inline Objective make_objective(std::string_view name, int dim, double noise_variance = 0.0,
                                std::optional<Matrix> rotation = std::nullopt) {
  return Objective(require_function(name), dim, noise_variance, std::move(rotation));
}

}  // namespace lracma
