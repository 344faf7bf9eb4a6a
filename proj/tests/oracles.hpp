#pragma once

// Test-only reference computations. Each one is written from the closed forms
// directly, without going through the library code paths it is compared to.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline double tc(double c1, double c2) {
  return std::sqrt(c1 * c2 / ((1.0 - c1) * (1.0 - c2)));
}

inline double lambda_plus(double c1, double c2) {
  const double s = std::sqrt(c1 * (1.0 - c2)) + std::sqrt(c2 * (1.0 - c1));
  return s * s;
}

inline double lambda_minus(double c1, double c2) {
  const double s = std::sqrt(c1 * (1.0 - c2)) - std::sqrt(c2 * (1.0 - c1));
  return s * s;
}

inline double theta(double c1, double c2, double t) {
  return t * (1.0 - c1 + c1 / t) * (1.0 - c2 + c2 / t);
}

// Inverse of theta on [tc, 1] by bisection; theta is increasing there.
inline double theta_inverse(double c1, double c2, double lam) {
  double lo = tc(c1, c2), hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (theta(c1, c2, mid) < lam ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double rank_one_t(double a, double b) {
  return a * a * b * b / ((1.0 + a * a) * (1.0 + b * b));
}

inline double c_g(double c1, double c2, double t) {
  const double tc2 = c1 * c2 / ((1.0 - c1) * (1.0 - c2));
  return std::pow(1.0 - c1, 2) * std::pow(1.0 - c2, 2) * std::pow(1.0 - t, 2) * (t * t - tc2) /
         (t * t) * (2.0 * t + c1 / (1.0 - c1) + c2 / (1.0 - c2));
}

inline double slope(double c1, double c2, double t) {
  const double tc2 = c1 * c2 / ((1.0 - c1) * (1.0 - c2));
  return (1.0 - c1) * (1.0 - c2) * (t * t - tc2) / (t * t);
}

// Cross term shared by the printed scenario variances.
inline double w_term(double a, double b, double t) {
  const double a2 = a * a, b2 = b * b;
  return t * a2 / (1.0 + a2) + t * b2 / (1.0 + b2) -
         2.0 * std::sqrt(t) * a * b / std::sqrt((1.0 + a2) * (1.0 + b2));
}

// Printed C_{11,11} for coordinate directions with Rademacher entries.
inline double c1111_coordinate(double c1, double c2, double a, double b) {
  const double t = rank_one_t(a, b);
  const double tc2 = c1 * c2 / ((1.0 - c1) * (1.0 - c2));
  const double first = 2.0 * std::pow(1.0 - t, 2) * t * t / (t * t - tc2) *
                       (2.0 * t + c1 / (1.0 - c1) + c2 / (1.0 - c2));
  const double uv = 2.0 * t * t * (1.0 / std::pow(1.0 + a * a, 2) + 1.0 / std::pow(1.0 + b * b, 2));
  const double w = w_term(a, b, t);
  return first - uv - 2.0 * w * w;
}

inline double sigma_a_sq(double c1, double c2, double a, double b) {
  const double s = slope(c1, c2, rank_one_t(a, b));
  return s * s * c1111_coordinate(c1, c2, a, b);
}

inline double sigma_b_sq(double c1, double c2, double a, double b) {
  const double t = rank_one_t(a, b);
  const double s = slope(c1, c2, t);
  const double w = w_term(a, b, t);
  return 2.0 * s * s * std::pow(1.0 - t, 2) * t * t / (t * t - c1 * c2 / ((1.0 - c1) * (1.0 - c2))) *
             (2.0 * t + c1 / (1.0 - c1) + c2 / (1.0 - c2)) -
         2.0 * s * s * w * w;
}

// Squared canonical correlations from the Cholesky factors of the sample
// covariances: eigenvalues of Lx^{-1} Sxy Syy^{-1} Syx Lx^{-T}, descending.
inline std::vector<double> scc_cholesky(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const Eigen::MatrixXd sxx = x * x.transpose();
  const Eigen::MatrixXd syy = y * y.transpose();
  const Eigen::MatrixXd sxy = x * y.transpose();
  const Eigen::LLT<Eigen::MatrixXd> lx(sxx);
  const Eigen::LLT<Eigen::MatrixXd> ly(syy);
  const Eigen::MatrixXd l_inv_sxy = lx.matrixL().solve(sxy);
  Eigen::MatrixXd m = l_inv_sxy * ly.solve(l_inv_sxy.transpose());
  m = 0.5 * (m + m.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  std::vector<double> out;
  const Eigen::Index k = std::min(x.rows(), y.rows());
  for (Eigen::Index i = 0; i < k; ++i) out.push_back(es.eigenvalues()(m.rows() - 1 - i));
  return out;
}

// Top eigenvalues of the literal population canonical correlation matrix.
inline std::vector<double> pcc_dense(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                     std::size_t k) {
  const Eigen::MatrixXd sa = Eigen::MatrixXd::Identity(a.rows(), a.rows()) + a * a.transpose();
  const Eigen::MatrixXd sb = Eigen::MatrixXd::Identity(b.rows(), b.rows()) + b * b.transpose();
  const Eigen::LLT<Eigen::MatrixXd> la(sa);
  const Eigen::MatrixXd cross = a * b.transpose();
  const Eigen::MatrixXd l = la.matrixL().solve(cross);
  Eigen::MatrixXd m = l * sb.llt().solve(l.transpose());
  m = 0.5 * (m + m.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  std::vector<double> out;
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back(es.eigenvalues()(m.rows() - 1 - static_cast<Eigen::Index>(i)));
  }
  return out;
}

// Normal CDF for KS comparisons in tests.
inline double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace oracle
