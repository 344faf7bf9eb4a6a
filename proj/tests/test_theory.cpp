#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "oracles.hpp"
#include "scca/errors.hpp"
#include "scca/theory.hpp"

using scca::TheoryContext;

TEST_CASE("threshold matches printed values") {
  CHECK(scca::threshold_tc(TheoryContext(0.2, 0.2)) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(std::round(scca::threshold_tc(TheoryContext(0.3, 0.1)) * 1000) / 1000 == 0.218);
  CHECK(std::round(scca::threshold_tc(TheoryContext(0.15, 0.05)) * 1e4) / 1e4 == 0.0964);
  CHECK(std::round(scca::threshold_tc(TheoryContext(0.1, 0.1)) * 1000) / 1000 == 0.111);
}

TEST_CASE("context validation and swap") {
  CHECK_THROWS_AS(TheoryContext(0.6, 0.6), scca::ValidationError);
  CHECK_THROWS_AS(TheoryContext(0.0, 0.2), scca::ValidationError);
  CHECK_THROWS_AS(TheoryContext(0.2, 1.0), scca::ValidationError);
  const TheoryContext ctx(0.1, 0.3);
  CHECK(ctx.swapped());
  CHECK(ctx.c1() == 0.3);
  CHECK(ctx.c2() == 0.1);
  CHECK(scca::threshold_tc(ctx) == doctest::Approx(oracle::tc(0.1, 0.3)));
  CHECK_FALSE(TheoryContext(0.3, 0.1).swapped());
}

TEST_CASE("bulk edges") {
  auto e = scca::bulk_edges(TheoryContext(0.2, 0.2));
  CHECK(e.lambda_plus == doctest::Approx(0.64).epsilon(1e-14));
  CHECK(e.lambda_minus == doctest::Approx(0.0).epsilon(1e-14));
  e = scca::bulk_edges(TheoryContext(0.1, 0.1));
  CHECK(e.lambda_plus == doctest::Approx(0.36).epsilon(1e-14));
  CHECK(e.lambda_minus == doctest::Approx(0.0).epsilon(1e-14));
  e = scca::bulk_edges(TheoryContext(0.3, 1e-9));
  CHECK(e.lambda_plus == doctest::Approx(0.3).epsilon(1e-3));
  CHECK(e.lambda_minus == doctest::Approx(0.3).epsilon(1e-3));
  e = scca::bulk_edges(TheoryContext(0.3, 0.1));
  CHECK(e.lambda_plus == doctest::Approx(oracle::lambda_plus(0.3, 0.1)));
  CHECK(e.lambda_minus == doctest::Approx(oracle::lambda_minus(0.3, 0.1)));
}

TEST_CASE("density support and normalization") {
  for (auto [c1, c2] : {std::pair{0.2, 0.2}, {0.3, 0.1}, {0.15, 0.05}, {0.4, 0.35}}) {
    const TheoryContext ctx(c1, c2);
    const auto e = scca::bulk_edges(ctx);
    CHECK(scca::esd_density(ctx, e.lambda_plus + 1e-3) == 0.0);
    CHECK(scca::esd_density(ctx, e.lambda_plus) == doctest::Approx(0.0));
    CHECK(scca::esd_total_mass(ctx) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(scca::esd_cdf(ctx, e.lambda_plus) == doctest::Approx(1.0).epsilon(1e-8));
    const double mid = 0.5 * (e.lambda_minus + e.lambda_plus);
    CHECK(scca::esd_cdf(ctx, mid) + scca::esd_tail(ctx, mid) == doctest::Approx(1.0).epsilon(1e-8));
  }
  if (const TheoryContext ctx(0.3, 0.1); scca::bulk_edges(ctx).lambda_minus > 0.0) {
    CHECK(scca::esd_density(ctx, scca::bulk_edges(ctx).lambda_minus - 1e-3) == 0.0);
  }
}

TEST_CASE("classical locations") {
  const TheoryContext ctx(0.2, 0.2);
  const std::size_t q = 50;
  CHECK(scca::classical_location(ctx, 1, q) == doctest::Approx(0.64));
  double prev = 1.0;
  for (std::size_t j = 1; j <= q; ++j) {
    const double g = scca::classical_location(ctx, j, q);
    CHECK(g <= prev + 1e-14);
    prev = g;
  }
  const double gq = scca::classical_location(ctx, q, q);
  CHECK(gq >= 0.0);
  CHECK(scca::esd_tail(ctx, gq) == doctest::Approx(static_cast<double>(q - 1) / q).epsilon(1e-8));
}

TEST_CASE("outlier maps") {
  const TheoryContext ctx(0.2, 0.2);
  CHECK(scca::f_c(ctx, scca::bulk_edges(ctx).lambda_plus) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(scca::outlier_location(ctx, 0.64) == doctest::Approx(0.7921).epsilon(1e-12));
  CHECK(scca::g_c(ctx, 0.64) == doctest::Approx(oracle::theta(0.2, 0.2, 0.64)));
  CHECK(scca::outlier_location(ctx, 0.25 + 1e-9) == doctest::Approx(0.64).epsilon(1e-6));
  CHECK_THROWS_AS(scca::outlier_location(ctx, 0.2), scca::DomainError);
  CHECK_THROWS_AS(scca::f_c(ctx, 0.5), scca::DomainError);
  for (double z = 0.65; z < 1.0; z += 0.01) {
    CHECK(scca::f_c(ctx, z) == doctest::Approx(oracle::theta_inverse(0.2, 0.2, z)).epsilon(1e-10));
  }
  const TheoryContext c10(0.1, 0.1);
  const double t1 = scca::outlier_location(c10, 64.0 / 85.0);
  const double t2 = scca::outlier_location(c10, 0.64);
  const double t3 = scca::outlier_location(c10, 0.4);
  CHECK(t1 > t2);
  CHECK(t2 > t3);
  CHECK(t3 > 0.36);
  CHECK(t1 < 1.0);
}

TEST_CASE("stieltjes identities") {
  const TheoryContext ctx(0.3, 0.1);
  const double c1 = ctx.c1(), c2 = ctx.c2();
  for (double re : {0.05, 0.3, 0.7, 0.95, 1.3}) {
    const std::complex<double> z(re, 0.2);
    const auto s = scca::stieltjes_limits(ctx, z);
    CHECK(std::abs(s.m1 + c1 / s.m3) < 1e-10);
    CHECK(std::abs(s.m2 + c2 / s.m4) < 1e-10);
    CHECK(std::abs(s.m3 - s.m4 - (1.0 - z) * (c1 - c2)) < 1e-10);
  }
  for (double z = 0.7; z < 1.0; z += 0.05) {
    const auto s = scca::stieltjes_limits(ctx, z);
    CHECK(std::abs(s.m3 * s.m4 / (s.h * s.h) - scca::f_c(ctx, z)) < 1e-10);
  }
  CHECK_THROWS_AS(scca::stieltjes_limits(ctx, 0.3), scca::DomainError);
}

TEST_CASE("estimating t from an eigenvalue") {
  const TheoryContext ctx(0.2, 0.2);
  auto est = scca::estimate_t_from_lambda(ctx, 0.7921);
  CHECK(est.t_hat == doctest::Approx(0.64).epsilon(1e-6));
  CHECK_FALSE(est.clamped);
  est = scca::estimate_t_from_lambda(ctx, 0.64);
  CHECK(est.t_hat == doctest::Approx(0.25));
  CHECK(est.clamped);
  est = scca::estimate_t_from_lambda(ctx, 0.3);
  CHECK(est.clamped);
  CHECK_THROWS_AS(scca::estimate_t_from_lambda(ctx, 1.2), scca::DomainError);
  for (double t = 0.3; t < 1.0; t += 0.05) {
    CHECK(scca::estimate_t_from_lambda(ctx, scca::g_c(ctx, t)).t_hat ==
          doctest::Approx(t).epsilon(1e-10));
  }
}

TEST_CASE("edge scale and gaussian variance") {
  const TheoryContext ctx(0.2, 0.2);
  // lambda_+ = 0.64: [0.64^2 * 0.36^2 / sqrt(0.2 * 0.2 * 0.8 * 0.8)]^{1/3}
  CHECK(scca::tw_scale(ctx) == doctest::Approx(std::cbrt(0.4096 * 0.1296 / 0.16)).epsilon(1e-12));
  CHECK(scca::tw_scale(ctx) == doctest::Approx(0.692279794).epsilon(1e-8));
  for (double t : {0.3, 0.5, 0.64, 0.9}) {
    CHECK(scca::outlier_slope(ctx, t) == doctest::Approx(oracle::slope(0.2, 0.2, t)));
    CHECK(scca::gaussian_outlier_variance(ctx, t) == doctest::Approx(oracle::c_g(0.2, 0.2, t)));
  }
  CHECK(scca::gaussian_outlier_variance(ctx, 0.64) ==
        doctest::Approx(0.64 * 0.64 * 0.36 * 0.36 * (0.64 * 0.64 - 0.0625) / (0.64 * 0.64) *
                        (1.28 + 0.5))
            .epsilon(1e-12));
}

TEST_CASE("incremental cdf matches pointwise cdf") {
  for (auto [c1, c2] : {std::pair{0.2, 0.2}, {0.3, 0.1}}) {
    const TheoryContext ctx(c1, c2);
    const auto e = scca::bulk_edges(ctx);
    std::vector<double> xs{e.lambda_minus - 0.01};
    for (int i = 0; i <= 50; ++i) xs.push_back(e.lambda_minus + (e.lambda_plus - e.lambda_minus) * i / 50.0);
    xs.push_back(e.lambda_plus + 0.01);
    const auto inc = scca::esd_cdf_ascending(ctx, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(inc[i] == doctest::Approx(scca::esd_cdf(ctx, xs[i])).epsilon(1e-10));
  }
  CHECK_THROWS_AS(scca::esd_cdf_ascending(TheoryContext(0.2, 0.2), std::vector<double>{0.5, 0.4}), scca::DomainError);
}
