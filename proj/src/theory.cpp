#include "scca/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "scca/errors.hpp"

namespace scca {

namespace {

constexpr double kQuadTolerance = 1e-13;
constexpr double kHalfPi = 0.5 * std::numbers::pi;

// Density integrand after x = lambda_- + w sin^2(u), w = lambda_+ - lambda_-.
// The square-root endpoint factors cancel against dx, leaving a smooth function
// of u on [0, pi/2].
struct SubstitutedDensity {
  double lambda_minus;
  double width;
  double c2;

  double x_of(double u) const {
    const double s = std::sin(u);
    return lambda_minus + width * s * s;
  }

  double operator()(double u) const {
    const double s = std::sin(u);
    const double c = std::cos(u);
    const double x = lambda_minus + width * s * s;
    // w sin^2(u) / x, which is 1 identically when lambda_- = 0.
    const double ratio = lambda_minus == 0.0 ? 1.0 : width * s * s / x;
    return width * c * c * ratio / (std::numbers::pi * c2 * (1.0 - x));
  }
};

SubstitutedDensity substituted_density(const TheoryContext& ctx) {
  const BulkEdges e = bulk_edges(ctx);
  return {e.lambda_minus, e.lambda_plus - e.lambda_minus, ctx.c2()};
}

double integrate_u(const SubstitutedDensity& g, double lo, double hi) {
  if (hi <= lo) return 0.0;
  // Boost 1.74 compares the unscaled Kronrod error with a width-scaled
  // tolerance, so short intervals never terminate. Integrate over [0, 1].
  const double w = hi - lo;
  const auto unit = [&](double v) { return w * g(lo + w * v); };
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(unit, 0.0, 1.0, 20,
                                                                       kQuadTolerance);
}

// u such that x_of(u) = x, for x inside the support.
double u_of(const SubstitutedDensity& g, double x) {
  const double r = std::clamp((x - g.lambda_minus) / g.width, 0.0, 1.0);
  return std::asin(std::sqrt(r));
}

double root_term(const BulkEdges& e, double z) {
  return std::sqrt(std::max(0.0, (z - e.lambda_minus) * (z - e.lambda_plus)));
}

}  // namespace

TheoryContext::TheoryContext(double c1, double c2) : c1_(c1), c2_(c2), swapped_(false) {
  const auto in_unit = [](double c) { return std::isfinite(c) && c > 0.0 && c < 1.0; };
  if (!in_unit(c1) || !in_unit(c2)) {
    throw ValidationError("aspect ratios must lie in (0, 1), got c1=" + std::to_string(c1) +
                          ", c2=" + std::to_string(c2));
  }
  if (c1 + c2 >= 1.0) {
    throw ValidationError("aspect ratios must satisfy c1 + c2 < 1, got " +
                          std::to_string(c1 + c2));
  }
  if (c2_ > c1_) {
    std::swap(c1_, c2_);
    swapped_ = true;
  }
}

TheoryContext TheoryContext::from_dimensions(std::size_t p, std::size_t q, std::size_t n) {
  if (n == 0) throw ValidationError("sample count must be positive");
  return TheoryContext(static_cast<double>(p) / static_cast<double>(n),
                       static_cast<double>(q) / static_cast<double>(n));
}

double threshold_tc(const TheoryContext& ctx) {
  const double c1 = ctx.c1(), c2 = ctx.c2();
  return std::sqrt(c1 * c2 / ((1.0 - c1) * (1.0 - c2)));
}

BulkEdges bulk_edges(const TheoryContext& ctx) {
  const double c1 = ctx.c1(), c2 = ctx.c2();
  const double u = std::sqrt(c1 * (1.0 - c2));
  const double v = std::sqrt(c2 * (1.0 - c1));
  return {(u - v) * (u - v), (u + v) * (u + v)};
}

EdgeData edge_data(const TheoryContext& ctx) {
  const BulkEdges e = bulk_edges(ctx);
  return {e.lambda_minus, e.lambda_plus, threshold_tc(ctx)};
}

double esd_density(const TheoryContext& ctx, double x) {
  const BulkEdges e = bulk_edges(ctx);
  if (!(x > e.lambda_minus && x < e.lambda_plus)) return 0.0;
  const double num = std::sqrt((e.lambda_plus - x) * (x - e.lambda_minus));
  return num / (2.0 * std::numbers::pi * ctx.c2() * x * (1.0 - x));
}

double esd_total_mass(const TheoryContext& ctx) {
  return integrate_u(substituted_density(ctx), 0.0, kHalfPi);
}

double esd_cdf(const TheoryContext& ctx, double x) {
  const auto g = substituted_density(ctx);
  if (x <= g.lambda_minus) return 0.0;
  if (x >= g.lambda_minus + g.width) return 1.0;
  return std::clamp(integrate_u(g, 0.0, u_of(g, x)), 0.0, 1.0);
}

std::vector<double> esd_cdf_ascending(const TheoryContext& ctx, std::span<const double> xs) {
  const auto g = substituted_density(ctx);
  std::vector<double> out;
  out.reserve(xs.size());
  double u_prev = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0 && xs[i] < xs[i - 1]) throw DomainError("esd_cdf_ascending needs sorted input");
    // Short pieces between neighbouring points converge in one or two passes.
    const double u = u_of(g, xs[i]);
    acc += integrate_u(g, u_prev, u);
    u_prev = u;
    out.push_back(xs[i] <= g.lambda_minus ? 0.0 : std::clamp(acc, 0.0, 1.0));
  }
  return out;
}

double esd_tail(const TheoryContext& ctx, double x) {
  const auto g = substituted_density(ctx);
  if (x <= g.lambda_minus) return 1.0;
  if (x >= g.lambda_minus + g.width) return 0.0;
  return std::clamp(integrate_u(g, u_of(g, x), kHalfPi), 0.0, 1.0);
}

double classical_location(const TheoryContext& ctx, std::size_t j, std::size_t q) {
  if (q == 0 || j == 0 || j > q) {
    throw DomainError("classical_location requires 1 <= j <= q, got j=" + std::to_string(j) +
                      ", q=" + std::to_string(q));
  }
  const auto g = substituted_density(ctx);
  if (j == 1) return g.lambda_minus + g.width;

  // Tail mass is decreasing in u; locate the u where it equals (j - 1) / q.
  const double target = static_cast<double>(j - 1) / static_cast<double>(q);
  double lo = 0.0, hi = kHalfPi;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    if (integrate_u(g, mid, kHalfPi) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return g.x_of(0.5 * (lo + hi));
}

double f_c(const TheoryContext& ctx, double z) {
  const BulkEdges e = bulk_edges(ctx);
  if (!(z >= e.lambda_plus)) {
    throw DomainError("f_c is defined for z >= lambda_+ = " + std::to_string(e.lambda_plus) +
                      ", got " + std::to_string(z));
  }
  const double c1 = ctx.c1(), c2 = ctx.c2();
  return (z - (c1 + c2 - 2.0 * c1 * c2) + root_term(e, z)) / (2.0 * (1.0 - c1) * (1.0 - c2));
}

double g_c(const TheoryContext& ctx, double t) {
  const double tc = threshold_tc(ctx);
  if (!(t >= tc)) {
    throw DomainError("g_c is defined for t >= t_c = " + std::to_string(tc) + ", got " +
                      std::to_string(t));
  }
  const double c1 = ctx.c1(), c2 = ctx.c2();
  return t * (1.0 - c1 + c1 / t) * (1.0 - c2 + c2 / t);
}

double outlier_location(const TheoryContext& ctx, double t) {
  const double tc = threshold_tc(ctx);
  if (!(t > tc) || t > 1.0) {
    throw DomainError("outlier_location requires t_c < t <= 1 (t_c = " + std::to_string(tc) +
                      "), got " + std::to_string(t));
  }
  return g_c(ctx, t);
}

StieltjesLimits stieltjes_limits(const TheoryContext& ctx, std::complex<double> z) {
  using C = std::complex<double>;
  const BulkEdges e = bulk_edges(ctx);
  if (z.imag() == 0.0) {
    const double x = z.real();
    if (x > e.lambda_minus && x < e.lambda_plus) {
      throw DomainError("stieltjes_limits: real z inside the bulk has no unique branch");
    }
  }
  if (z == C(0.0) || z == C(1.0)) {
    throw DomainError("stieltjes_limits: z must differ from 0 and 1");
  }
  const double c1 = ctx.c1(), c2 = ctx.c2();
  const C s = std::sqrt(z - e.lambda_minus) * std::sqrt(z - e.lambda_plus);
  const C base = -z + c1 + c2 + s;
  StieltjesLimits out;
  out.m1 = base / (2.0 * (1.0 - c1) * z * (1.0 - z)) - c1 / ((1.0 - c1) * z);
  out.m2 = base / (2.0 * (1.0 - c2) * z * (1.0 - z)) - c2 / ((1.0 - c2) * z);
  out.m3 = 0.5 * ((1.0 - 2.0 * c1) * z + c1 - c2 + s);
  out.m4 = 0.5 * ((1.0 - 2.0 * c2) * z + c2 - c1 + s);
  out.h = 0.5 * std::sqrt(z) * (-z + (2.0 - c1 - c2) + s);
  return out;
}

CccEstimate estimate_t_from_lambda(const TheoryContext& ctx, double lam) {
  const BulkEdges e = bulk_edges(ctx);
  if (!(lam >= 0.0 && lam <= 1.0)) {
    throw DomainError("eigenvalue must lie in [0, 1], got " + std::to_string(lam));
  }
  if (lam < e.lambda_minus) {
    throw DomainError("eigenvalue " + std::to_string(lam) + " lies below lambda_- = " +
                      std::to_string(e.lambda_minus));
  }
  if (lam <= e.lambda_plus) return {threshold_tc(ctx), true};
  return {f_c(ctx, lam), false};
}

double tw_scale(const TheoryContext& ctx) {
  const double c1 = ctx.c1(), c2 = ctx.c2();
  const double lp = bulk_edges(ctx).lambda_plus;
  const double num = lp * lp * (1.0 - lp) * (1.0 - lp);
  return std::cbrt(num / std::sqrt(c1 * c2 * (1.0 - c1) * (1.0 - c2)));
}

double outlier_slope(const TheoryContext& ctx, double t) {
  const double tc = threshold_tc(ctx);
  return (1.0 - ctx.c1()) * (1.0 - ctx.c2()) * (t * t - tc * tc) / (t * t);
}

double gaussian_outlier_variance(const TheoryContext& ctx, double t) {
  const double c1 = ctx.c1(), c2 = ctx.c2();
  const double tc = threshold_tc(ctx);
  const double k = (1.0 - c1) * (1.0 - c2);
  return k * k * (1.0 - t) * (1.0 - t) * (t * t - tc * tc) / (t * t) *
         (2.0 * t + c1 / (1.0 - c1) + c2 / (1.0 - c2));
}

}  // namespace scca
