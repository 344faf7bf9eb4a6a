#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace scca {

double mean(std::span<const double> xs);

/// Unbiased sample variance (divisor n - 1).
double sample_variance(std::span<const double> xs);

/// Type-7 (linear interpolation) quantile at probability prob in [0, 1].
double quantile(std::vector<double> xs, double prob);

double normal_cdf(double x, double mu, double sigma);

/// One-sample KS statistic sup |F_n - F| for a continuous reference CDF.
double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf);

/// Asymptotic p-value of a one-sample KS statistic d with sample size n,
/// using Stephens' small-sample correction to the Kolmogorov series.
double ks_pvalue(double d, std::size_t n);

}  // namespace scca
