#include "scca/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "scca/errors.hpp"

namespace scca {

namespace {

constexpr double kRankTolerance = 1e-10;
constexpr double kClampSlack = 1e-10;
constexpr std::size_t kNaiveMaxDim = 50;

void check_inputs(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.rows() == 0 || y.rows() == 0 || x.cols() == 0) {
    throw DimensionError("data matrices must be non-empty");
  }
  if (x.cols() != y.cols()) {
    throw DimensionError("x and y must have the same number of columns (samples), got " +
                         std::to_string(x.cols()) + " and " + std::to_string(y.cols()));
  }
  if (!x.allFinite() || !y.allFinite()) throw ValidationError("data contain NaN or Inf");
}

// Ratio of extreme singular values of the square upper-triangular factor r,
// computed only as precisely as needed to compare against the tolerance.
void require_full_rank(const Eigen::MatrixXd& r, const char* name) {
  const Eigen::VectorXd d = r.diagonal().cwiseAbs();
  const double dmax = d.maxCoeff();
  const auto fail = [name]() {
    throw RankDeficientError(std::string(name) + " is numerically rank deficient");
  };
  if (!(dmax > 0.0) || d.minCoeff() < kRankTolerance * dmax) fail();
  // sigma_min / sigma_max >= 1 / (|R|_F |R^{-1}|_F): a cheap certificate.
  const auto tri = r.triangularView<Eigen::Upper>();
  const Eigen::MatrixXd rinv = tri.solve(Eigen::MatrixXd::Identity(r.rows(), r.cols()));
  if (1.0 / (r.norm() * rinv.norm()) >= kRankTolerance) return;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(r);
  const Eigen::VectorXd& s = svd.singularValues();
  if (s(s.size() - 1) < kRankTolerance * s(0)) fail();
}

SccSpectrum finish(std::vector<double> values, std::size_t p, std::size_t q, std::size_t n) {
  for (double& v : values) v = clamp_unit(v);
  std::sort(values.begin(), values.end(), std::greater<>());
  return {std::move(values), p, q, n};
}

Eigen::MatrixXd inverse_sqrt_gram(const Eigen::MatrixXd& s, const char* name) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  const Eigen::VectorXd& ev = es.eigenvalues();
  if (!(ev(0) > 1e-12 * ev(ev.size() - 1))) {
    throw RankDeficientError(std::string(name) + " Gram matrix is singular");
  }
  return es.eigenvectors() * ev.array().rsqrt().matrix().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace

double SccSpectrum::at(std::size_t i) const {
  if (i == 0 || i > values.size()) {
    throw DimensionError("spectrum index " + std::to_string(i) + " out of range 1.." +
                         std::to_string(values.size()));
  }
  return values[i - 1];
}

double clamp_unit(double v) {
  if (v >= 0.0 && v <= 1.0) return v;
  if (v > 1.0 && v <= 1.0 + kClampSlack) return 1.0;
  if (v < 0.0 && v >= -kClampSlack) return 0.0;
  throw NumericalError("squared correlation " + std::to_string(v) + " outside [0, 1]");
}

SccSpectrum scc_spectrum(const Eigen::MatrixXd& x_in, const Eigen::MatrixXd& y_in,
                         const SpectrumOptions& options) {
  check_inputs(x_in, y_in);
  const Eigen::Index p = x_in.rows(), q = y_in.rows(), n = x_in.cols();
  if (n < p + q) {
    throw DimensionError("scc_spectrum requires n >= p + q, got p=" + std::to_string(p) +
                         ", q=" + std::to_string(q) + ", n=" + std::to_string(n));
  }

  Eigen::MatrixXd xt = x_in.transpose();
  Eigen::MatrixXd yt = y_in.transpose();
  if (options.center) {
    xt.rowwise() -= xt.colwise().mean();
    yt.rowwise() -= yt.colwise().mean();
  }

  Eigen::HouseholderQR<Eigen::MatrixXd> qrx(std::move(xt));
  Eigen::HouseholderQR<Eigen::MatrixXd> qry(std::move(yt));
  require_full_rank(qrx.matrixQR().topRows(p).triangularView<Eigen::Upper>(), "x");
  require_full_rank(qry.matrixQR().topRows(q).triangularView<Eigen::Upper>(), "y");

  Eigen::MatrixXd qy = qry.householderQ() * Eigen::MatrixXd::Identity(n, q);
  qy.applyOnTheLeft(qrx.householderQ().transpose());
  const Eigen::MatrixXd k = qy.topRows(p);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(k);
  const Eigen::VectorXd& s = svd.singularValues();
  std::vector<double> values(static_cast<std::size_t>(s.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) values[static_cast<std::size_t>(i)] = s(i) * s(i);
  return finish(std::move(values), static_cast<std::size_t>(p), static_cast<std::size_t>(q),
                static_cast<std::size_t>(n));
}

SccSpectrum naive_scc_spectrum(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  check_inputs(x, y);
  const auto p = static_cast<std::size_t>(x.rows());
  const auto q = static_cast<std::size_t>(y.rows());
  if (p > kNaiveMaxDim || q > kNaiveMaxDim) {
    throw DimensionError("naive_scc_spectrum is limited to p, q <= 50");
  }
  const Eigen::MatrixXd sxx = x * x.transpose();
  const Eigen::MatrixXd syy = y * y.transpose();
  const Eigen::MatrixXd sxy = x * y.transpose();
  const Eigen::MatrixXd sxx_is = inverse_sqrt_gram(sxx, "x");
  const Eigen::MatrixXd syy_is = inverse_sqrt_gram(syy, "y");
  const Eigen::MatrixXd syy_inv = syy_is * syy_is;
  Eigen::MatrixXd c = sxx_is * sxy * syy_inv * sxy.transpose() * sxx_is;
  c = 0.5 * (c + c.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const std::size_t m = std::min(p, q);
  std::vector<double> values(m);
  for (std::size_t i = 0; i < m; ++i) values[i] = ev(ev.size() - 1 - static_cast<Eigen::Index>(i));
  return finish(std::move(values), p, q, static_cast<std::size_t>(x.cols()));
}

double esd_ks_distance(const SccSpectrum& spectrum, const TheoryContext& ctx) {
  const std::size_t m = spectrum.size();
  if (m == 0) throw DimensionError("empty spectrum");
  std::vector<double> v(spectrum.values.rbegin(), spectrum.values.rend());
  const double mf = static_cast<double>(m);
  const std::vector<double> cdf = esd_cdf_ascending(ctx, v);
  double d = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double f = cdf[i];
    d = std::max({d, static_cast<double>(i + 1) / mf - f, f - static_cast<double>(i) / mf});
  }
  return d;
}

}  // namespace scca
