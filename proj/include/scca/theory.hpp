#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace scca {

/// Aspect ratios c1 = p/n and c2 = q/n of a CCA problem.
///
/// Every limit quantity here is symmetric in (c1, c2) except the ESD, which
/// describes the smaller of the two SCC matrices. The context therefore stores
/// the ratios ordered so that c2 <= c1 and remembers whether the caller's
/// order was swapped.
class TheoryContext {
public:
  /// Throws ValidationError unless c1, c2 in (0, 1) and c1 + c2 < 1.
  TheoryContext(double c1, double c2);

  static TheoryContext from_dimensions(std::size_t p, std::size_t q, std::size_t n);

  double c1() const noexcept { return c1_; }
  double c2() const noexcept { return c2_; }
  bool swapped() const noexcept { return swapped_; }

private:
  double c1_;
  double c2_;
  bool swapped_;
};

struct BulkEdges {
  double lambda_minus;
  double lambda_plus;
};

struct EdgeData {
  double lambda_minus;
  double lambda_plus;
  double t_c;
};

/// BBP threshold sqrt(c1 c2 / ((1 - c1)(1 - c2))).
double threshold_tc(const TheoryContext& ctx);

/// Support [lambda_-, lambda_+] of the limiting ESD.
BulkEdges bulk_edges(const TheoryContext& ctx);

EdgeData edge_data(const TheoryContext& ctx);

/// Limiting ESD density, zero outside the support.
double esd_density(const TheoryContext& ctx, double x);

/// Total mass of the density over its support by quadrature (1 up to tolerance).
double esd_total_mass(const TheoryContext& ctx);

/// Limiting ESD distribution function F(x), by adaptive quadrature.
double esd_cdf(const TheoryContext& ctx, double x);

/// F at each point of an ascending sequence, integrating only between neighbours.
std::vector<double> esd_cdf_ascending(const TheoryContext& ctx, std::span<const double> xs);

/// Mass of the limiting ESD to the right of x, i.e. 1 - F(x), integrated directly.
double esd_tail(const TheoryContext& ctx, double x);

/// Classical location of the j-th largest of q eigenvalues (1-based j).
double classical_location(const TheoryContext& ctx, std::size_t j, std::size_t q);

/// Outlier-to-population map, defined for z >= lambda_+ (f_c(lambda_+) = t_c).
double f_c(const TheoryContext& ctx, double z);

/// Population-to-outlier map t (1 - c1 + c1/t)(1 - c2 + c2/t), defined for t >= t_c.
double g_c(const TheoryContext& ctx, double t);

/// Almost-sure limit of the sample outlier for a supercritical population value t > t_c.
double outlier_location(const TheoryContext& ctx, double t);

struct StieltjesLimits {
  std::complex<double> m1;
  std::complex<double> m2;
  std::complex<double> m3;
  std::complex<double> m4;
  std::complex<double> h;
};

/// Deterministic limits of the partial resolvent traces. The square root
/// sqrt((z - lambda_-)(z - lambda_+)) is the product of principal roots: positive
/// for real z > lambda_+ and with positive imaginary part on the upper half-plane.
/// Throws DomainError for real z strictly inside the bulk and at z = 0.
StieltjesLimits stieltjes_limits(const TheoryContext& ctx, std::complex<double> z);

struct CccEstimate {
  double t_hat;
  bool clamped;
};

/// Inverts the outlier map. Eigenvalues inside the bulk return (t_c, clamped = true).
/// Throws DomainError for lam < lambda_- or lam outside [0, 1].
CccEstimate estimate_t_from_lambda(const TheoryContext& ctx, double lam);

/// Tracy-Widom scale c_TW of the largest non-outlier eigenvalue.
double tw_scale(const TheoryContext& ctx);

/// a(t) = (1 - c1)(1 - c2)(t^2 - t_c^2) / t^2, the slope 1 / f_c'(g_c(t)).
double outlier_slope(const TheoryContext& ctx, double t);

/// Gaussian-case outlier variance scale c_g(t); a single Gaussian outlier has
/// sqrt(n)(lambda - theta) -> N(0, 2 c_g(t)).
double gaussian_outlier_variance(const TheoryContext& ctx, double t);

}  // namespace scca
