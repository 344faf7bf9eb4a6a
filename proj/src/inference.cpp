#include "scca/inference.hpp"

#include <cmath>

#include "scca/errors.hpp"

namespace scca {

namespace {

void require_values(const SccSpectrum& s, std::size_t count, const char* what) {
  if (count > s.size()) {
    throw DimensionError(std::string(what) + " needs " + std::to_string(count) +
                         " eigenvalues, the spectrum has " + std::to_string(s.size()));
  }
}

}  // namespace

std::string to_string(TestMethod method) { return method == TestMethod::tw ? "tw" : "onatski"; }

TestMethod test_method_from_string(const std::string& name) {
  if (name == "tw") return TestMethod::tw;
  if (name == "onatski") return TestMethod::onatski;
  throw ValidationError("unknown test method '" + name + "' (expected tw or onatski)");
}

std::string to_string(RankMethod method) {
  return method == RankMethod::threshold ? "threshold" : "ratio";
}

double stat_tw(const SccSpectrum& spectrum, const TheoryContext& ctx, std::size_t n,
               std::size_t r0) {
  require_values(spectrum, r0 + 1, "stat_tw");
  const double lp = bulk_edges(ctx).lambda_plus;
  return std::pow(static_cast<double>(n), 2.0 / 3.0) * (spectrum.at(r0 + 1) - lp) / tw_scale(ctx);
}

double stat_onatski(const SccSpectrum& spectrum, std::size_t r0, std::size_t r_star) {
  if (r_star <= r0) throw ValidationError("stat_onatski needs r_star > r0");
  require_values(spectrum, r_star + 2, "stat_onatski");
  const double den = spectrum.at(r_star + 1) - spectrum.at(r_star + 2);
  if (!(den > 0.0)) throw NumericalError("Onatski denominator gap is zero");
  return (spectrum.at(r0 + 1) - spectrum.at(r0 + 2)) / den;
}

TestOutcome test_independence(const SccSpectrum& spectrum, const TheoryContext& ctx,
                              std::size_t n, const TestSettings& settings) {
  if (!(settings.alpha > 0.0 && settings.alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  TestOutcome out;
  out.alpha = settings.alpha;
  out.method = settings.method;
  out.r0 = settings.r0;
  out.r_star = settings.r_star;
  if (settings.method == TestMethod::tw) {
    out.statistic = stat_tw(spectrum, ctx, n, settings.r0);
    out.critical_value = tw1_quantile(1.0 - settings.alpha);
  } else {
    out.statistic = stat_onatski(spectrum, settings.r0, settings.r_star);
    out.critical_value = settings.onatski_critical_value
                             ? *settings.onatski_critical_value
                             : onatski_critical(settings.r_star, settings.r0, settings.alpha,
                                                settings.onatski_sim, settings.onatski_cache);
  }
  out.reject = out.statistic >= out.critical_value;
  return out;
}

RankEstimate estimate_rank_threshold(const SccSpectrum& spectrum, const TheoryContext& ctx,
                                     double omega1) {
  if (!(omega1 > 0.0)) throw ValidationError("omega1 must be positive");
  const double lp = bulk_edges(ctx).lambda_plus;
  std::size_t count = 0;
  for (double v : spectrum.values) count += (v - lp >= omega1);
  return {count, RankMethod::threshold, omega1};
}

RankEstimate estimate_rank_ratio(const SccSpectrum& spectrum, double omega_o, std::size_t r_star) {
  if (!(omega_o > 0.0)) throw ValidationError("omega_o must be positive");
  require_values(spectrum, r_star + 2, "estimate_rank_ratio");
  std::size_t best = 0;
  for (std::size_t i = 1; i <= r_star; ++i) {
    const double den = spectrum.at(i + 1) - spectrum.at(i + 2);
    if (!(den > 0.0)) throw NumericalError("eigenvalue gap " + std::to_string(i + 1) + " is zero");
    if ((spectrum.at(i) - spectrum.at(i + 1)) / den >= omega_o) best = i;
  }
  return {best, RankMethod::ratio, omega_o};
}

std::vector<CccEstimate> estimate_ccc(const SccSpectrum& spectrum, const TheoryContext& ctx,
                                      std::size_t k) {
  require_values(spectrum, k, "estimate_ccc");
  std::vector<CccEstimate> out;
  out.reserve(k);
  for (std::size_t i = 1; i <= k; ++i) out.push_back(estimate_t_from_lambda(ctx, spectrum.at(i)));
  return out;
}

double default_omega1(std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); }
double default_omega_o(std::size_t q) { return std::sqrt(static_cast<double>(q)); }

}  // namespace scca
