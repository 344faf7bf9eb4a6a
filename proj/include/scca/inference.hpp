#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "scca/limits.hpp"
#include "scca/spectrum.hpp"
#include "scca/theory.hpp"

namespace scca {

enum class TestMethod { tw, onatski };
enum class RankMethod { threshold, ratio };

std::string to_string(TestMethod method);
TestMethod test_method_from_string(const std::string& name);
std::string to_string(RankMethod method);

struct TestOutcome {
  double statistic = 0.0;
  double critical_value = 0.0;
  double alpha = 0.0;
  bool reject = false;
  TestMethod method = TestMethod::tw;
  std::size_t r0 = 0;
  std::size_t r_star = 0;
};

struct RankEstimate {
  std::size_t r_hat = 0;
  RankMethod method = RankMethod::threshold;
  double threshold_used = 0.0;
};

/// n^{2/3}(lambda_{r0+1} - lambda_+) / c_TW.
double stat_tw(const SccSpectrum& spectrum, const TheoryContext& ctx, std::size_t n,
               std::size_t r0 = 0);

/// (lambda_{r0+1} - lambda_{r0+2}) / (lambda_{r*+1} - lambda_{r*+2}).
/// Throws DimensionError if r_star + 2 > min(p, q) and NumericalError for a zero
/// denominator gap.
double stat_onatski(const SccSpectrum& spectrum, std::size_t r0, std::size_t r_star);

struct TestSettings {
  double alpha = 0.1;
  TestMethod method = TestMethod::tw;
  std::size_t r0 = 0;
  std::size_t r_star = 3;
  /// Overrides the simulated Onatski critical value when set.
  std::optional<double> onatski_critical_value;
  OnatskiSimulation onatski_sim;
  std::optional<std::string> onatski_cache;
};

/// TW method compares against tw1_quantile(1 - alpha); Onatski against the
/// supplied or simulated critical value.
TestOutcome test_independence(const SccSpectrum& spectrum, const TheoryContext& ctx,
                              std::size_t n, const TestSettings& settings);

/// Number of eigenvalues with lambda_i - lambda_+ >= omega1.
RankEstimate estimate_rank_threshold(const SccSpectrum& spectrum, const TheoryContext& ctx,
                                     double omega1);

/// Largest i <= r_star with (lambda_i - lambda_{i+1}) / (lambda_{i+1} - lambda_{i+2}) >= omega_o,
/// or 0. Throws NumericalError when a denominator gap is exactly zero.
RankEstimate estimate_rank_ratio(const SccSpectrum& spectrum, double omega_o, std::size_t r_star);

/// estimate_t_from_lambda applied to the top k values.
std::vector<CccEstimate> estimate_ccc(const SccSpectrum& spectrum, const TheoryContext& ctx,
                                      std::size_t k);

/// Defaults omega1 = n^{-1/2}, omega_o = q^{1/2} with q = min(p, q).
double default_omega1(std::size_t n);
double default_omega_o(std::size_t q);

}  // namespace scca
