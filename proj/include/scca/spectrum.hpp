#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "scca/theory.hpp"

namespace scca {

/// Squared sample canonical correlations, descending, min(p, q) of them.
struct SccSpectrum {
  std::vector<double> values;
  std::size_t p = 0;
  std::size_t q = 0;
  std::size_t n = 0;

  std::size_t size() const noexcept { return values.size(); }

  /// 1-based access; throws DimensionError past the end.
  double at(std::size_t i) const;
};

struct SpectrumOptions {
  /// Subtract row means before computing the spectrum.
  bool center = false;
};

/// Canonical-angle computation: squared singular values of Qx^T Qy where Qx, Qy
/// are orthonormal bases of the row spaces of x (p x n) and y (q x n).
/// Requires n >= p + q and both inputs numerically full row rank.
SccSpectrum scc_spectrum(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                         const SpectrumOptions& options = {});

/// Literal Sxx^{-1/2} Sxy Syy^{-1} Syx Sxx^{-1/2}, for p, q <= 50 only.
SccSpectrum naive_scc_spectrum(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

/// Kolmogorov-Smirnov distance between the empirical distribution of the
/// spectrum values and the limiting ESD of ctx.
double esd_ks_distance(const SccSpectrum& spectrum, const TheoryContext& ctx);

/// Maps a squared correlation into [0, 1]. Values within 1e-10 outside are
/// clamped; anything further throws NumericalError.
double clamp_unit(double v);

}  // namespace scca
