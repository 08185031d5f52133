// Minimizes the 10-D Rastrigin function with LRA-CMA-ES and prints progress.
//   minimize_rastrigin [seed]

#include <cstdio>
#include <cstdlib>

#include "lracma/cma.hpp"
#include "lracma/lra.hpp"
#include "lracma/objectives.hpp"
#include "lracma/random.hpp"

int main(int argc, char** argv) {
  using namespace lracma;
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;
  const int d = 10;

  const Objective rastrigin(Function::Rastrigin, d);
  const InitSpec init = init_spec(Function::Rastrigin, d);
  LraCmaes opt(SearchDistribution::isotropic(init.m0, init.sigma0), default_params(d));
  Rng rng(seed);
  auto f = [&](const Vector& x) { return rastrigin.noiseless_value(x); };

  long evals = 0;
  for (int it = 1; it <= 20000; ++it) {
    const auto& r = opt.step(rng, f);
    evals += opt.params().lambda;
    const double fm = f(opt.distribution().mean);
    if (it % 200 == 0 || fm < 1e-8) {
      std::printf("iter %6d  evals %8ld  f(m) %.3e  sigma %.3e  eta_m %.3f  eta_sigma %.3f\n", it,
                  evals, fm, r.sigma, r.eta_m, r.eta_sigma);
    }
    if (fm < 1e-8) {
      std::printf("reached 1e-8 after %ld evaluations\n", evals);
      return 0;
    }
  }
  std::printf("target not reached\n");
  return 1;
}
