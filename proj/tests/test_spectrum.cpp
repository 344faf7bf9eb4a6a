#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "scca/errors.hpp"
#include "scca/rng.hpp"
#include "scca/spectrum.hpp"
#include "scca/theory.hpp"

TEST_CASE("perfect and zero correlation") {
  scca::Engine eng = scca::make_engine(1);
  const Eigen::MatrixXd x = scca::standard_normal_matrix(5, 20, eng);
  const auto same = scca::scc_spectrum(x, x);
  for (double v : same.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

  // rows supported on disjoint columns
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 20), b = Eigen::MatrixXd::Zero(3, 20);
  a.leftCols(10) = scca::standard_normal_matrix(3, 10, eng);
  b.rightCols(10) = scca::standard_normal_matrix(3, 10, eng);
  for (double v : scca::scc_spectrum(a, b).values) CHECK(std::abs(v) < 1e-12);
  for (double v : scca::naive_scc_spectrum(a, b).values) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("agreement with the naive and Cholesky paths") {
  scca::Engine eng = scca::make_engine(2);
  const Eigen::MatrixXd x = scca::standard_normal_matrix(5, 20, eng);
  const Eigen::MatrixXd y = scca::standard_normal_matrix(5, 20, eng);
  const auto fast = scca::scc_spectrum(x, y);
  const auto naive = scca::naive_scc_spectrum(x, y);
  const auto chol = oracle::scc_cholesky(x, y);
  REQUIRE(fast.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(std::abs(fast.values[i] - naive.values[i]) < 1e-8);
    CHECK(std::abs(fast.values[i] - chol[i]) < 1e-8);
  }
  CHECK(std::is_sorted(fast.values.rbegin(), fast.values.rend()));
}

TEST_CASE("one-dimensional case is the squared cosine") {
  scca::Engine eng = scca::make_engine(3);
  const Eigen::MatrixXd x = scca::standard_normal_matrix(1, 30, eng);
  const Eigen::MatrixXd y = scca::standard_normal_matrix(1, 30, eng);
  const double dot = x.row(0).dot(y.row(0));
  const double expect = dot * dot / (x.squaredNorm() * y.squaredNorm());
  CHECK(scca::scc_spectrum(x, y).values[0] == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("row permutation and left transforms leave the spectrum unchanged") {
  scca::Engine eng = scca::make_engine(4);
  const Eigen::MatrixXd x = scca::standard_normal_matrix(6, 40, eng);
  const Eigen::MatrixXd y = scca::standard_normal_matrix(4, 40, eng);
  const auto base = scca::scc_spectrum(x, y);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
  perm.setIdentity();
  std::swap(perm.indices()(0), perm.indices()(5));
  const auto permuted = scca::scc_spectrum(perm * x, y);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Identity(6, 6) + 0.3 * scca::standard_normal_matrix(6, 6, eng);
  const auto mixed = scca::scc_spectrum(g * x, y);
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(std::abs(base.values[i] - permuted.values[i]) < 1e-12);
    CHECK(std::abs(base.values[i] - mixed.values[i]) < 1e-8);
  }
}

TEST_CASE("input checks") {
  scca::Engine eng = scca::make_engine(5);
  const Eigen::MatrixXd x = scca::standard_normal_matrix(6, 10, eng);
  const Eigen::MatrixXd y = scca::standard_normal_matrix(6, 10, eng);
  CHECK_THROWS_AS(scca::scc_spectrum(x, y), scca::DimensionError);
  CHECK_THROWS_AS(scca::scc_spectrum(x, scca::standard_normal_matrix(2, 11, eng)), scca::DimensionError);
  Eigen::MatrixXd deficient = scca::standard_normal_matrix(4, 30, eng);
  deficient.row(3) = deficient.row(0) + deficient.row(1);
  CHECK_THROWS_AS(scca::scc_spectrum(deficient, scca::standard_normal_matrix(4, 30, eng)),
                  scca::RankDeficientError);
  CHECK_THROWS_AS(scca::naive_scc_spectrum(deficient, scca::standard_normal_matrix(4, 30, eng)),
                  scca::RankDeficientError);
  CHECK_THROWS_AS(scca::naive_scc_spectrum(scca::standard_normal_matrix(51, 200, eng),
                                           scca::standard_normal_matrix(3, 200, eng)),
                  scca::DimensionError);
  const auto s = scca::scc_spectrum(scca::standard_normal_matrix(2, 10, eng), scca::standard_normal_matrix(3, 10, eng));
  CHECK(s.size() == 2);
  CHECK_THROWS_AS(s.at(3), scca::DimensionError);
  CHECK(scca::clamp_unit(1.0 + 1e-12) == 1.0);
  CHECK(scca::clamp_unit(-1e-12) == 0.0);
  CHECK_THROWS_AS(scca::clamp_unit(1.001), scca::NumericalError);
}

TEST_CASE("centering removes row means") {
  scca::Engine eng = scca::make_engine(6);
  Eigen::MatrixXd x = scca::standard_normal_matrix(3, 30, eng);
  Eigen::MatrixXd y = scca::standard_normal_matrix(3, 30, eng);
  const auto centered = scca::scc_spectrum(x, y, {true});
  x.colwise() += Eigen::VectorXd::Constant(3, 5.0);
  const auto shifted = scca::scc_spectrum(x, y, {true});
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(centered.values[i] - shifted.values[i]) < 1e-10);
}

TEST_CASE("KS distance against the limiting law") {
  const scca::TheoryContext ctx(0.2, 0.2);
  scca::SccSpectrum zeros;
  zeros.p = zeros.q = 50;
  zeros.n = 250;
  zeros.values.assign(50, 0.0);
  // all mass sits at lambda_- = 0, which carries no atom
  CHECK(scca::esd_ks_distance(zeros, ctx) == doctest::Approx(1.0).epsilon(1e-8));

  const std::size_t q = 100;
  scca::SccSpectrum classical;
  classical.p = classical.q = q;
  classical.n = 500;
  for (std::size_t j = 1; j <= q; ++j) classical.values.push_back(scca::classical_location(ctx, j, q));
  CHECK(scca::esd_ks_distance(classical, ctx) <= 1.0 / q + 1e-8);
}
