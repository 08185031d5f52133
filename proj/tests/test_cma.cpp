#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lracma/cma.hpp"
#include "lracma/objectives.hpp"
#include "lracma/random.hpp"

using namespace lracma;

TEST(DefaultParams, PopulationSizes) {
  EXPECT_EQ(default_params(40).lambda, 15);
  EXPECT_EQ(default_params(10).lambda, 10);
  EXPECT_EQ(default_params(10).mu, 5);
  EXPECT_EQ(default_params(30).lambda, 14);
  EXPECT_EQ(default_params(10, 7).mu, 3);
}

TEST(DefaultParams, FrozenConstantsForTenDimensions) {
  // Reference values computed independently in double precision.
  const CmaParams p = default_params(10);
  const std::vector<double> w = {0.45627264690340597, 0.2707530970017852, 0.16223111715866978,
                                 0.08523354710016448, 0.025509591835974777};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(p.weights[i], w[static_cast<std::size_t>(i)], 1e-15);
  EXPECT_NEAR(p.mu_w, 3.1672992814107017, 1e-13);
  EXPECT_NEAR(p.c_sigma, 0.28442858794636744, 1e-15);
  EXPECT_NEAR(p.d_sigma, 1.2844285879463675, 1e-15);
  EXPECT_NEAR(p.c_c, 0.29499038303562225, 1e-15);
  EXPECT_NEAR(p.c_1, 0.015283824524751714, 1e-16);
  EXPECT_NEAR(p.c_mu, 0.02015428276120837, 1e-16);
  EXPECT_EQ(p.c_m, 1.0);
  EXPECT_NEAR(p.chi_d, 3.0847, 5e-5);
  EXPECT_NEAR(p.chi_d, 3.0847265651690123, 1e-14);
}

TEST(DefaultParams, Invariants) {
  for (int d : {1, 2, 3, 5, 10, 20, 40, 100}) {
    for (std::optional<int> lam : {std::optional<int>{}, std::optional<int>{2}, std::optional<int>{70}}) {
      const CmaParams p = default_params(d, lam);
      EXPECT_NEAR(p.weights.sum(), 1.0, 1e-12);
      EXPECT_NEAR(p.mu_w, 1.0 / p.weights.squaredNorm(), 1e-12);
      for (int i = 1; i < p.mu; ++i) EXPECT_GE(p.weights[i - 1], p.weights[i]);
      EXPECT_GT(p.weights[p.mu - 1], 0.0);
      EXPECT_LE(p.c_1 + p.c_mu, 1.0);
      EXPECT_GT(p.c_sigma, 0.0);
      EXPECT_LE(p.c_sigma, 1.0);
      EXPECT_GT(p.c_c, 0.0);
      EXPECT_LE(p.c_c, 1.0);
    }
  }
}

TEST(DefaultParams, RejectsBadInput) {
  EXPECT_THROW(default_params(10, 1), Error);
  EXPECT_THROW(default_params(0), Error);
}

TEST(Sampling, IdentityShapeGivesYEqualZ) {
  const auto dist = SearchDistribution::isotropic(Vector::Constant(4, 1.0), 0.5);
  Rng rng(1);
  const Population pop = sample_population(dist, default_params(4), rng);
  EXPECT_EQ(pop.y, pop.z);
  const Matrix expect = (0.5 * pop.y).colwise() + dist.mean;
  EXPECT_EQ(pop.x, expect);
}

TEST(Sampling, LinearityInSigma) {
  Matrix c(2, 2);
  c << 2, 0.5, 0.5, 1;
  SearchDistribution dist{Vector::Zero(2), 0.1, SymMatrix(c)};
  Matrix z(2, 3);
  z << 1, 0, -2, 0, 1, 0.5;
  const Population pop = population_from_normals(dist, z);
  const Matrix expect = 0.1 * (spd_sqrt(SymMatrix(c)).matrix() * z);
  EXPECT_LE((pop.x - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Sampling, StreamOrderIsCandidateThenCoordinate) {
  const auto dist = SearchDistribution::isotropic(Vector::Zero(3), 1.0);
  Rng a(42), b(42);
  const Population pop = sample_population(dist, default_params(3, 4), a);
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < 3; ++k) EXPECT_EQ(pop.z(k, i), b.normal());
  }
}

TEST(Sampling, FixedSeedIsBitIdentical) {
  const auto dist = SearchDistribution::isotropic(Vector::Constant(5, 3.0), 2.0);
  Rng a(9), b(9);
  const CmaParams p = default_params(5);
  const Population pa = sample_population(dist, p, a);
  const Population pb = sample_population(dist, p, b);
  EXPECT_EQ(pa.x, pb.x);
  EXPECT_EQ(pa.z, pb.z);
}

TEST(Sampling, BoxResamplesThenClamps) {
  const Box box{Vector::Constant(2, -1.0), Vector::Constant(2, 1.0)};
  // Mostly feasible: every candidate ends up inside, nothing clamped.
  {
    const auto dist = SearchDistribution::isotropic(Vector::Zero(2), 0.3);
    Rng rng(4);
    const Population pop = sample_population(dist, default_params(2, 20), rng, &box);
    EXPECT_EQ(pop.clamped, 0);
    for (int i = 0; i < pop.size(); ++i) EXPECT_TRUE(box.contains(pop.x.col(i)));
    EXPECT_EQ(pop.y, pop.z);
  }
  // Hopeless: far outside the box, so each candidate is clamped after the
  // resample limit while z and y keep the last raw draw.
  {
    const auto dist = SearchDistribution::isotropic(Vector::Constant(2, 100.0), 0.1);
    Rng rng(4);
    const Population pop = sample_population(dist, default_params(2, 3), rng, &box);
    EXPECT_EQ(pop.clamped, 3);
    for (int i = 0; i < pop.size(); ++i) {
      EXPECT_TRUE(box.contains(pop.x.col(i)));
      EXPECT_EQ(pop.x(0, i), 1.0);
    }
    Rng replay(4);
    Matrix z(2, kMaxResamples);
    replay.fill_normal(z);
    EXPECT_EQ(Vector(pop.z.col(0)), Vector(z.col(kMaxResamples - 1)));
  }
}

TEST(Rank, Examples) {
  const std::vector<double> a = {3, 1, 2};
  EXPECT_EQ(rank(a), (std::vector<int>{1, 2, 0}));
  const std::vector<double> b = {5, 5, 1};
  EXPECT_EQ(rank(b), (std::vector<int>{2, 0, 1}));
  const std::vector<double> c = {-1, 0, 4, 4.5};
  EXPECT_EQ(rank(c), (std::vector<int>{0, 1, 2, 3}));
}

TEST(Rank, NanIsObjectiveNaN) {
  const std::vector<double> f = {1, std::numeric_limits<double>::quiet_NaN()};
  try {
    rank(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ObjectiveNaN);
  }
}

TEST(UpdatePaths, ZeroPathCase) {
  const CmaParams p = default_params(4);
  const CmaState s = CmaState::initial(4);
  const Vector dz = Vector::LinSpaced(4, -0.2, 0.3);
  const Vector dy = 2.0 * dz;
  const PathUpdate u = update_paths(s, p, dz, dy);
  const double k = std::sqrt(p.c_sigma * (2.0 - p.c_sigma) * p.mu_w);
  EXPECT_LE((u.state.p_sigma - k * dz).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_TRUE(u.h_sigma);
  EXPECT_EQ(u.state.t, 0);
}

TEST(UpdatePaths, HeavisideThresholdTenDimensions) {
  EXPECT_NEAR(h_sigma_threshold(10), 23.636363636363637, 1e-12);
}

TEST(UpdatePaths, ClosedGateDropsDy) {
  const CmaParams p = default_params(3);
  CmaState s = CmaState::initial(3);
  s.p_c = Vector::Constant(3, 0.7);
  s.t = 0;
  // A huge dz pushes ||p_sigma||² far above the threshold.
  const PathUpdate u = update_paths(s, p, Vector::Constant(3, 50.0), Vector::Constant(3, 9.0));
  EXPECT_FALSE(u.h_sigma);
  EXPECT_LE((u.state.p_c - (1.0 - p.c_c) * s.p_c).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ProposeUpdate, StepSizeExamples) {
  const CmaParams p = default_params(10);
  EXPECT_DOUBLE_EQ(csa_sigma(1.7, p, p.chi_d), 1.7);
  // Path length making the CSA exponent equal to 3 is clamped to e^1.
  const double norm = p.chi_d * (1.0 + 3.0 * p.d_sigma / p.c_sigma);
  EXPECT_NEAR(csa_sigma(2.0, p, norm), 2.0 * std::exp(1.0), 1e-14);
}

TEST(ProposeUpdate, NoLearningKeepsShape) {
  CmaParams p = default_params(3);
  p.c_1 = 0.0;
  p.c_mu = 0.0;
  Matrix c(3, 3);
  c << 2, 0.3, 0.1, 0.3, 1, 0.2, 0.1, 0.2, 0.5;
  SearchDistribution dist{Vector::Zero(3), 1.0, SymMatrix(c)};
  Rng rng(2);
  Population pop = sample_population(dist, p, rng);
  evaluate_and_rank(pop, functions::sphere);
  const Proposal prop = propose_update(dist, p, CmaState::initial(3), pop);
  ASSERT_TRUE(prop.h_sigma);
  EXPECT_EQ(prop.dist.shape.matrix(), dist.shape.matrix());
}

TEST(ProposeUpdate, MeanMovesByWeightedStep) {
  const CmaParams p = default_params(5);
  const auto dist = SearchDistribution::isotropic(Vector::Constant(5, 1.0), 0.3);
  Rng rng(8);
  Population pop = sample_population(dist, p, rng);
  evaluate_and_rank(pop, functions::sphere);
  const auto [dz, dy] = weighted_steps(pop, p);
  const Proposal prop = propose_update(dist, p, CmaState::initial(5), pop);
  EXPECT_LE((prop.dist.mean - (dist.mean + 0.3 * dy)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ProposeUpdate, NonFiniteCarriesIteration) {
  const CmaParams p = default_params(2);
  const auto dist = SearchDistribution::isotropic(Vector::Zero(2), 1.0);
  CmaState s = CmaState::initial(2);
  s.t = 17;
  Population pop = population_from_normals(dist, Matrix::Constant(2, p.lambda, 1e200));
  evaluate_and_rank(pop, [](const Vector&) { return 0.0; });
  try {
    propose_update(dist, p, s, pop);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NumericalRange);
    ASSERT_TRUE(e.iteration().has_value());
    EXPECT_EQ(*e.iteration(), 17);
  }
}

namespace {

struct PlainRun {
  std::vector<double> f_best;
  long evals_to_target = -1;
  bool spd_every_iteration = true;
};

template <class F>
PlainRun run_plain(F f, SearchDistribution dist, std::uint64_t seed, int iterations,
                   const Matrix* rotation = nullptr, double target = -1.0) {
  const int d = static_cast<int>(dist.dim());
  const CmaParams p = default_params(d);
  CmaState s = CmaState::initial(d);
  Rng rng(seed);
  PlainRun out;
  for (int it = 0; it < iterations; ++it) {
    Matrix z(d, p.lambda);
    rng.fill_normal(z);
    if (rotation) z = rotation->transpose() * z;
    CmaStepResult r = cma_step(dist, p, s, z, f);
    dist = std::move(r.dist);
    s = std::move(r.state);
    out.f_best.push_back(r.population.f[r.population.order.front()]);
    if (sym_eig(dist.shape).values.minCoeff() <= 0.0) out.spd_every_iteration = false;
    if (target > 0.0 && f(dist.mean) <= target) {
      out.evals_to_target = static_cast<long>(it + 1) * p.lambda;
      break;
    }
  }
  return out;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST(PlainCma, RotationEquivariance) {
  const int d = 10;
  Rng rot_rng(77);
  const Matrix r = random_rotation(d, rot_rng);
  const InitSpec init = init_spec(Function::Rastrigin, d);
  for (Function fn : {Function::Sphere, Function::Rastrigin}) {
    auto base = [fn](const Vector& x) { return base_value(fn, x); };
    auto rotated = [fn, &r](const Vector& x) { return base_value(fn, r * x); };
    const auto a = run_plain(base, SearchDistribution::isotropic(init.m0, init.sigma0), 5, 100);
    const auto b = run_plain(rotated, SearchDistribution::isotropic(r.transpose() * init.m0, init.sigma0),
                             5, 100, &r);
    ASSERT_EQ(a.f_best.size(), b.f_best.size());
    for (std::size_t i = 0; i < a.f_best.size(); ++i) {
      EXPECT_LE(rel_err(b.f_best[i], a.f_best[i]), 1e-6) << "iteration " << i;
    }
  }
}

TEST(PlainCma, SphereMedianWithinSixThousandEvaluations) {
  const int d = 10;
  const InitSpec init = init_spec(Function::Sphere, d);
  std::vector<long> evals;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto run = run_plain(functions::sphere, SearchDistribution::isotropic(init.m0, init.sigma0),
                               seed, 5000, nullptr, 1e-8);
    EXPECT_TRUE(run.spd_every_iteration);
    evals.push_back(run.evals_to_target < 0 ? std::numeric_limits<long>::max() : run.evals_to_target);
  }
  std::nth_element(evals.begin(), evals.begin() + 10, evals.end());
  EXPECT_LE(evals[10], 6000);
}

TEST(PlainCma, ShapeStaysSpdOnRosenbrockAndEllipsoid) {
  for (Function fn : {Function::Rosenbrock, Function::Ellipsoid}) {
    const InitSpec init = init_spec(fn, 8);
    auto f = [fn](const Vector& x) { return base_value(fn, x); };
    const auto run = run_plain(f, SearchDistribution::isotropic(init.m0, init.sigma0), 3, 1500);
    EXPECT_TRUE(run.spd_every_iteration);
  }
}
