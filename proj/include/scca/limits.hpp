#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scca/model.hpp"
#include "scca/rng.hpp"
#include "scca/theory.hpp"

namespace scca {

/// Near-degenerate supercritical population CCCs that fluctuate jointly.
/// Indices are 0-based positions in the descending t list.
struct SpikeGroup {
  std::size_t anchor = 0;
  std::vector<std::size_t> members;
  std::vector<double> t_values;

  double t_anchor() const;
  bool contains(std::size_t i) const;
};

inline constexpr double kDefaultGroupDelta = 0.1;
inline constexpr double kDefaultGroupDeltaL = 0.05;

/// Connected components of the supercritical indices under
/// |t_i - t_j| <= n^{-1/2 + delta}. Only components holding an index with
/// t_c + delta_l <= t <= 1 - delta_l are returned; the anchor is the first such index.
std::vector<SpikeGroup> spike_groups(const std::vector<double>& t_values, const TheoryContext& ctx,
                                     std::size_t n, double delta = kDefaultGroupDelta,
                                     double delta_l = kDefaultGroupDeltaL);

/// Rotations relating the loadings to the population canonical basis.
struct ReferenceFrame {
  Eigen::VectorXd sigma_hat_a;  // diagonal of Sigma_a (I + Sigma_a^2)^{-1/2}
  Eigen::VectorXd sigma_hat_b;
  Eigen::MatrixXd m_r;          // V_a^T V_b
  Eigen::MatrixXd o;
  Eigen::MatrixXd o_tilde;
  Eigen::VectorXd sqrt_t;       // singular values of diag(sigma_hat_a) m_r diag(sigma_hat_b)
  Eigen::MatrixXd u_cal;        // p x r
  Eigen::MatrixXd v_cal;        // q x r
  Eigen::MatrixXd va_hat;       // V_a Sigma_hat_a O, r x r
  Eigen::MatrixXd vb_hat;       // V_b Sigma_hat_b O~, r x r

  std::size_t r() const noexcept { return static_cast<std::size_t>(o.rows()); }

  /// W_{k,ij} evaluated at anchor value t_l.
  double w(std::size_t k, std::size_t i, std::size_t j, double t_l) const;

  /// All r slices W_k (each r x r, symmetric) at t_l.
  std::vector<Eigen::MatrixXd> w_tensor(double t_l) const;
};

/// Singular values are shifted by 1e-14 before forming the Sigma_hat ratios so
/// that zero loadings still give a well-defined frame.
ReferenceFrame reference_frame(const FactorLoadings& loadings);

struct CovarianceOptions {
  /// Multiply the Y-noise fourth-cumulant term by t_l^2, as for the X term.
  bool t2_on_v_term = true;
  /// Keep the U and V fourth-cumulant sums. Dropping them gives the
  /// delocalized-direction limit.
  bool include_uv_terms = true;
};

/// Entry covariance C_{ij,i'j'}(t_l) of the limiting Gaussian matrix for a group.
/// Indices are 0-based and must belong to the group. Throws DomainError when
/// the anchor value is not above t_c.
double covariance_c(const ReferenceFrame& frame, const SpikeGroup& group, const TheoryContext& ctx,
                    const EntryLaw& law, std::size_t i, std::size_t j, std::size_t i2,
                    std::size_t j2, const CovarianceOptions& options = {});

/// Limiting law of sqrt(n)(lambda_i - theta_i), i in the group.
struct SpikeLimitLaw {
  SpikeGroup group;
  double a_of_t = 0.0;
  /// sqrt(n)(t_i - t_l) for each member.
  Eigen::VectorXd drift;
  /// Covariance over the upper triangle (i <= j, row-major) of the group matrix.
  Eigen::MatrixXd covariance;
  /// factor * factor^T == covariance after clipping round-off negatives.
  Eigen::MatrixXd factor;

  std::size_t dim() const noexcept { return group.members.size(); }
  /// Position of the pair (a, b) (local indices, a <= b) in the upper-triangle vector.
  std::size_t pair_index(std::size_t a, std::size_t b) const;
};

/// Builds the law from its covariance matrix over the upper triangle.
/// Eigenvalues in [-1e-10, 0) are clipped; more negative ones throw NumericalError.
SpikeLimitLaw make_spike_limit_law(SpikeGroup group, double a_of_t, Eigen::VectorXd drift,
                                   Eigen::MatrixXd covariance);

SpikeLimitLaw spike_limit_law(const ReferenceFrame& frame, const SpikeGroup& group,
                              const TheoryContext& ctx, std::size_t n, const EntryLaw& law,
                              const CovarianceOptions& options = {});

/// Eigenvalues (descending) of a diag(drift) + a Upsilon.
std::vector<double> sample_spike_eigs(const SpikeLimitLaw& law, Engine& engine);
std::vector<double> sample_spike_eigs(const SpikeLimitLaw& law, std::uint64_t seed);

/// Limit of sqrt(n)(Z Z^T - I): symmetric Gaussian, off-diagonal variance 1,
/// diagonal variance mu4 - 1.
class ZzFluctuationLaw {
public:
  /// Throws ValidationError for r = 0 or mu4 < 1.
  ZzFluctuationLaw(std::size_t r, double mu4);

  std::size_t r() const noexcept { return r_; }
  double diagonal_variance() const noexcept { return mu4_ - 1.0; }
  Eigen::MatrixXd sample(Engine& engine) const;

private:
  std::size_t r_;
  double mu4_;
};

ZzFluctuationLaw zz_fluctuation_law(std::size_t r, double mu4);

/// Type-1 Tracy-Widom quantile at alpha in {0.5, 0.8, 0.9, 0.95, 0.99}.
double tw1_quantile(double alpha);

/// The tabulated alpha grid, ascending.
std::vector<double> tw1_alpha_grid();

/// The k largest eigenvalues of the symmetric tridiagonal matrix with the
/// given diagonal and off-diagonal, descending, by Sturm-count bisection.
std::vector<double> tridiagonal_top_eigenvalues(const Eigen::VectorXd& diag,
                                                const Eigen::VectorXd& off, std::size_t k);

/// k largest eigenvalues of a dim x dim GOE with off-diagonal variance 1/dim,
/// from the tridiagonal model.
std::vector<double> sample_goe_top(std::size_t dim, std::size_t k, Engine& engine);

/// k largest eigenvalues of W_p(I, n), from the bidiagonal model.
std::vector<double> sample_wishart_top(std::size_t p, std::size_t n, std::size_t k,
                                       Engine& engine);

enum class ReferenceMode { goe, wishart };

std::string to_string(ReferenceMode mode);
ReferenceMode reference_mode_from_string(const std::string& name);

struct OnatskiSimulation {
  ReferenceMode mode = ReferenceMode::wishart;
  std::size_t dim_p = 250;  // matrix size in GOE mode
  std::size_t dim_n = 500;  // unused in GOE mode
  std::size_t reps = 5000;
  std::uint64_t seed = 0;
};

/// (lambda_1 - lambda_2) / (lambda_{k+1} - lambda_{k+2}) for a descending list.
double onatski_ratio(const std::vector<double>& top, std::size_t k);

/// Simulated ratios with k = r_star - r0, one per replication, in replication order.
std::vector<double> onatski_samples(std::size_t k, const OnatskiSimulation& sim);

/// (1 - alpha) quantile of the simulated Onatski ratio. Throws ValidationError
/// for reps < 100 or r_star <= r0. With a cache path, samples are stored in and
/// served from a JSON sidecar keyed by mode, dimensions, k, reps and seed.
double onatski_critical(std::size_t r_star, std::size_t r0, double alpha,
                        const OnatskiSimulation& sim,
                        const std::optional<std::string>& cache_path = std::nullopt);

/// Limiting variance a(t)^2 C_{11,11} of the top outlier for rank-one loadings
/// with scales a, b. Coordinate directions keep the U and V terms; delocalized
/// directions drop them.
double rank_one_outlier_variance(const TheoryContext& ctx, double a, double b, const EntryLaw& law,
                                 bool delocalized);

}  // namespace scca
