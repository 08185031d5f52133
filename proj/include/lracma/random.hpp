#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace lracma {

/// Independent random streams owned by one trial.
enum class StreamRole : std::uint64_t {
  Sampling = 1,
  Noise = 2,
  Rotation = 3,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of stream `role` for trial `trial` under `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial, StreamRole role) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ trial);
  h = splitmix64(h ^ static_cast<std::uint64_t>(role));
  return h;
}

/// 64-bit Mersenne Twister with a standard normal source. Draw order is part
/// of the reproducibility contract: callers consume variates sequentially.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  /// Fills column by column (column index ascending, then row ascending).
  template <class Derived>
  void fill_normal(Eigen::MatrixBase<Derived>& out) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = normal();
    }
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace lracma
