// Simulates n^{2/3}(lambda_1 - 2) for the tridiagonal GOE and prints the
// quantiles used by the embedded Tracy-Widom table.
#include <cmath>
#include <cstdio>
#include <vector>

#include <CLI11.hpp>

#include "scca/limits.hpp"
#include "scca/rng.hpp"
#include "scca/stats.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Tracy-Widom quantile oracle"};
  std::size_t dim = 2000;
  std::size_t reps = 10000;
  std::uint64_t seed = 7101;
  app.add_option("--dim", dim, "GOE dimension");
  app.add_option("--reps", reps, "replications");
  app.add_option("--seed", seed, "master seed");
  CLI11_PARSE(app, argc, argv);

  std::vector<double> stats(reps);
  const double scale = std::pow(static_cast<double>(dim), 2.0 / 3.0);
  for (std::size_t i = 0; i < reps; ++i) {
    scca::Engine engine = scca::make_engine(scca::derive_seed(seed, {i}));
    stats[i] = scale * (scca::sample_goe_top(dim, 1, engine)[0] - 2.0);
  }
  std::printf("dim=%zu reps=%zu seed=%llu\n", dim, reps, static_cast<unsigned long long>(seed));
  for (double a : {0.5, 0.8, 0.9, 0.95, 0.99}) {
    std::printf("alpha=%.2f quantile=%.4f\n", a, scca::quantile(stats, a));
  }
  std::printf("mean=%.4f sd=%.4f\n", scca::mean(stats), std::sqrt(scca::sample_variance(stats)));
  return 0;
}
