#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "scca/errors.hpp"
#include "scca/limits.hpp"
#include "scca/stats.hpp"

using scca::TheoryContext;

TEST_CASE("spike groups") {
  const TheoryContext ctx(0.2, 0.2);
  const std::size_t n = 2000;
  auto g = scca::spike_groups({0.8, 0.6, 0.4}, ctx, n);
  REQUIRE(g.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(g[i].members == std::vector<std::size_t>{i});

  g = scca::spike_groups({0.6, 0.6, 0.6}, ctx, n);
  REQUIRE(g.size() == 1);
  CHECK(g[0].members.size() == 3);

  const double radius = std::pow(static_cast<double>(n), -0.5 + scca::kDefaultGroupDelta);
  g = scca::spike_groups({0.64, 0.64 - 0.5 * radius, 0.30}, ctx, n);
  REQUIRE_FALSE(g.empty());
  CHECK(g[0].members == std::vector<std::size_t>{0, 1});
  CHECK(g[0].anchor == 0);
  CHECK(g[0].t_anchor() == 0.64);
  for (const auto& grp : g) CHECK_FALSE((grp.contains(1) && grp.contains(2)));

  g = scca::spike_groups({0.64, 0.27, 0.2}, ctx, n);
  REQUIRE(g.size() == 1);
  CHECK_FALSE(g[0].contains(1));
  CHECK_FALSE(g[0].contains(2));
  CHECK_THROWS_AS(scca::spike_groups({0.3, 0.5}, ctx, n), scca::ValidationError);
}

TEST_CASE("reference frame of zero loadings") {
  const auto frame = scca::reference_frame(scca::FactorLoadings::zero(6, 5, 2));
  CHECK((frame.u_cal.transpose() * frame.u_cal - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-10);
  CHECK((frame.v_cal.transpose() * frame.v_cal - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-10);
  for (const auto& wk : frame.w_tensor(0.5)) CHECK(wk.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("coordinate rank-one covariance equals the printed expansion") {
  for (auto [c1, c2, a, b] : {std::tuple{0.2, 0.2, 2.0, 2.0}, {0.3, 0.1, 3.0, 1.5}, {0.1, 0.1, 1.0, 2.0}}) {
    const TheoryContext ctx(c1, c2);
    const double t = oracle::rank_one_t(a, b);
    const scca::FactorLoadings l{Eigen::MatrixXd::Constant(1, 1, a), Eigen::MatrixXd::Constant(1, 1, b)};
    const auto frame = scca::reference_frame(l);
    const scca::SpikeGroup grp{0, {0}, {t}};
    const double c = scca::covariance_c(frame, grp, ctx, scca::EntryLaw::rademacher(), 0, 0, 0, 0);
    CHECK(c == doctest::Approx(oracle::c1111_coordinate(c1, c2, a, b)).epsilon(1e-10));
    CHECK(scca::rank_one_outlier_variance(ctx, a, b, scca::EntryLaw::rademacher(), false) ==
          doctest::Approx(oracle::sigma_a_sq(c1, c2, a, b)).epsilon(1e-10));
    CHECK(scca::rank_one_outlier_variance(ctx, a, b, scca::EntryLaw::rademacher(), true) ==
          doctest::Approx(oracle::sigma_b_sq(c1, c2, a, b)).epsilon(1e-10));
  }
  const TheoryContext ctx(0.2, 0.2);
  CHECK(scca::rank_one_outlier_variance(ctx, 2, 2, scca::EntryLaw::rademacher(), false) ==
        doctest::Approx(0.10232).epsilon(1e-4));
}

TEST_CASE("random-direction covariance is close to the delocalized value") {
  const TheoryContext ctx(0.2, 0.2);
  const auto l = scca::random_unit_loadings(400, 400, 1, std::vector<double>{2.0},
                                            std::vector<double>{2.0}, true, 17);
  const auto frame = scca::reference_frame(l);
  const scca::SpikeGroup grp{0, {0}, {0.64}};
  const double slope = scca::outlier_slope(ctx, 0.64);
  const double full = slope * slope *
                      scca::covariance_c(frame, grp, ctx, scca::EntryLaw::rademacher(), 0, 0, 0, 0);
  CHECK(full == doctest::Approx(oracle::sigma_b_sq(0.2, 0.2, 2, 2)).epsilon(0.02));
}

TEST_CASE("gaussian reduction and Kronecker structure") {
  const TheoryContext ctx(0.3, 0.1);
  const std::vector<double> as{3.0, 1.5}, bs{2.0, 2.0};
  const auto l = scca::standard_basis_loadings(10, 10, as, bs);
  const auto t = scca::population_ccc(l);
  const auto frame = scca::reference_frame(l);
  const auto law = scca::EntryLaw::gaussian();
  const scca::SpikeGroup g0{0, {0}, {t[0]}};
  const double s = scca::outlier_slope(ctx, t[0]);
  CHECK(s * s * scca::covariance_c(frame, g0, ctx, law, 0, 0, 0, 0) ==
        doctest::Approx(2.0 * scca::gaussian_outlier_variance(ctx, t[0])).epsilon(1e-10));
  const scca::SpikeGroup both{0, {0, 1}, {t[0], t[1]}};
  CHECK(std::abs(scca::covariance_c(frame, both, ctx, law, 0, 0, 1, 1)) < 1e-14);
  CHECK(std::abs(scca::covariance_c(frame, both, ctx, law, 0, 1, 0, 0)) < 1e-14);
  const scca::SpikeGroup low{0, {0}, {0.05}};
  CHECK_THROWS_AS(scca::covariance_c(frame, low, ctx, law, 0, 0, 0, 0), scca::DomainError);
}

TEST_CASE("one-by-one gaussian limit law") {
  const TheoryContext ctx(0.2, 0.2);
  const scca::FactorLoadings l{Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::MatrixXd::Constant(1, 1, 2.0)};
  const auto frame = scca::reference_frame(l);
  const scca::SpikeGroup grp{0, {0}, {0.64}};
  const auto law = scca::spike_limit_law(frame, grp, ctx, 2000, scca::EntryLaw::gaussian());
  scca::Engine eng = scca::make_engine(5);
  std::vector<double> xs;
  for (int i = 0; i < 100000; ++i) xs.push_back(scca::sample_spike_eigs(law, eng)[0]);
  const double expect = law.a_of_t * law.a_of_t * law.covariance(0, 0);
  CHECK(scca::sample_variance(xs) == doctest::Approx(expect).epsilon(0.03));
  CHECK(expect == doctest::Approx(2.0 * oracle::c_g(0.2, 0.2, 0.64)).epsilon(1e-10));
}

TEST_CASE("zero covariance leaves the drift") {
  const scca::SpikeGroup grp{0, {0, 1}, {0.6, 0.59}};
  Eigen::VectorXd drift(2);
  drift << 0.0, -0.4;
  const auto law = scca::make_spike_limit_law(grp, 0.5, drift, Eigen::MatrixXd::Zero(3, 3));
  const auto eigs = scca::sample_spike_eigs(law, 1);
  CHECK(eigs[0] == doctest::Approx(0.0));
  CHECK(eigs[1] == doctest::Approx(-0.2));
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 3);
  bad(0, 0) = -1.0;
  CHECK_THROWS_AS(scca::make_spike_limit_law(grp, 0.5, drift, bad), scca::NumericalError);
}

TEST_CASE("degenerate gaussian pair behaves like a scaled GOE") {
  const TheoryContext ctx(0.2, 0.2);
  const auto l = scca::standard_basis_loadings(5, 5, std::vector<double>{2.0, 2.0}, std::vector<double>{2.0, 2.0});
  const auto t = scca::population_ccc(l);
  const auto frame = scca::reference_frame(l);
  const auto groups = scca::spike_groups(t, ctx, 2000);
  REQUIRE(groups.size() == 1);
  const auto law = scca::spike_limit_law(frame, groups[0], ctx, 2000, scca::EntryLaw::gaussian());
  const double cg = oracle::c_g(0.2, 0.2, 0.64);
  scca::Engine eng = scca::make_engine(9);
  std::normal_distribution<double> nd;
  double gap_law = 0.0, gap_goe = 0.0, top_law = 0.0;
  const int reps = 20000;
  for (int i = 0; i < reps; ++i) {
    const auto e = scca::sample_spike_eigs(law, eng);
    CHECK(e[0] >= e[1]);
    gap_law += e[0] - e[1];
    top_law += e[0];
    Eigen::Matrix2d m;
    m(0, 0) = std::sqrt(2.0 * cg) * nd(eng);
    m(1, 1) = std::sqrt(2.0 * cg) * nd(eng);
    m(0, 1) = m(1, 0) = std::sqrt(cg) * nd(eng);
    const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(m).eigenvalues();
    gap_goe += ev(1) - ev(0);
  }
  gap_law /= reps;
  gap_goe /= reps;
  top_law /= reps;
  CHECK(gap_law == doctest::Approx(gap_goe).epsilon(0.03));
  CHECK(gap_law == doctest::Approx(2.0 * std::sqrt(cg * M_PI / 2.0)).epsilon(0.03));
  CHECK(top_law == doctest::Approx(std::sqrt(cg * M_PI / 2.0)).epsilon(0.03));
}

TEST_CASE("ZZ^T limit law") {
  scca::Engine eng = scca::make_engine(2);
  const auto gauss = scca::zz_fluctuation_law(3, 3.0);
  CHECK(gauss.diagonal_variance() == 2.0);
  const auto rad = scca::zz_fluctuation_law(3, 1.0);
  CHECK(rad.diagonal_variance() == 0.0);
  const Eigen::MatrixXd m = rad.sample(eng);
  CHECK(m.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK((m - m.transpose()).norm() == 0.0);
  CHECK_THROWS_AS(scca::zz_fluctuation_law(0, 3.0), scca::ValidationError);
  CHECK_THROWS_AS(scca::zz_fluctuation_law(2, 0.5), scca::ValidationError);
}

TEST_CASE("TW quantile table") {
  CHECK(scca::tw1_quantile(0.9) == 0.45);
  CHECK(scca::tw1_quantile(0.95) == doctest::Approx(0.9486).epsilon(1e-9));
  CHECK(scca::tw1_quantile(0.5) == doctest::Approx(-1.2857).epsilon(1e-9));
  const auto grid = scca::tw1_alpha_grid();
  CHECK(std::is_sorted(grid.begin(), grid.end()));
  for (std::size_t i = 1; i < grid.size(); ++i) {
    CHECK(scca::tw1_quantile(grid[i]) > scca::tw1_quantile(grid[i - 1]));
  }
  CHECK_THROWS(scca::tw1_quantile(0.7));
}

TEST_CASE("tridiagonal eigenvalues match a dense solver") {
  scca::Engine eng = scca::make_engine(4);
  const Eigen::VectorXd d = scca::standard_normal_matrix(30, 1, eng);
  const Eigen::VectorXd o = scca::standard_normal_matrix(29, 1, eng);
  Eigen::MatrixXd t = d.asDiagonal();
  for (int i = 0; i < 29; ++i) t(i, i + 1) = t(i + 1, i) = o(i);
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(t).eigenvalues();
  const auto top = scca::tridiagonal_top_eigenvalues(d, o, 4);
  for (int k = 0; k < 4; ++k) CHECK(top[k] == doctest::Approx(ev(29 - k)).epsilon(1e-10));
}

TEST_CASE("reference ensembles sit at their edges") {
  scca::Engine eng = scca::make_engine(6);
  const auto goe = scca::sample_goe_top(400, 3, eng);
  CHECK(goe[0] == doctest::Approx(2.0).epsilon(0.03));
  const auto w = scca::sample_wishart_top(250, 500, 3, eng);
  const double edge = std::pow(std::sqrt(250.0) + std::sqrt(500.0), 2);
  CHECK(w[0] == doctest::Approx(edge).epsilon(0.03));
  CHECK(w[0] >= w[1]);
}

TEST_CASE("onatski ratio and critical values") {
  CHECK(scca::onatski_ratio({1.0, 0.99, 0.98, 0.97, 0.96}, 3) == doctest::Approx(1.0));
  CHECK_THROWS_AS(scca::onatski_ratio({1.0, 0.9, 0.9, 0.9, 0.9}, 3), scca::NumericalError);
  scca::OnatskiSimulation sim{scca::ReferenceMode::goe, 100, 0, 200, 3};
  CHECK_THROWS_AS(scca::onatski_critical(3, 3, 0.1, sim), scca::ValidationError);
  sim.reps = 50;
  CHECK_THROWS_AS(scca::onatski_critical(3, 0, 0.1, sim), scca::ValidationError);
  sim.reps = 200;
  const auto samples = scca::onatski_samples(3, sim);
  CHECK(scca::onatski_critical(3, 0, 1.0, sim) == *std::min_element(samples.begin(), samples.end()));
  CHECK(scca::onatski_samples(3, sim) == samples);
}

TEST_CASE("onatski reference modes agree") {
  const scca::OnatskiSimulation goe{scca::ReferenceMode::goe, 250, 0, 2000, 31};
  const scca::OnatskiSimulation wis{scca::ReferenceMode::wishart, 250, 500, 2000, 32};
  const double a = scca::onatski_critical(3, 0, 0.1, goe);
  const double b = scca::onatski_critical(3, 0, 0.1, wis);
  // the 90% quantile of 2000 draws has a relative standard error near 5%
  CHECK(a == doctest::Approx(b).epsilon(0.2));
}
