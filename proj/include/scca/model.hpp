#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "scca/rng.hpp"

namespace scca {

enum class EntryKind { gaussian, rademacher, custom };

std::string to_string(EntryKind kind);
EntryKind entry_kind_from_string(const std::string& name);

/// Law of the standardized noise entries sqrt(n) X_ij, sqrt(n) Y_ij, sqrt(n) Z_ij.
///
/// Excess values are mu4 - 3 per noise source. `custom` draws the symmetric
/// three-point law on {-s, 0, s} with s^2 = mu4 and P(+-s) = 1 / (2 mu4), which
/// reaches any mu4 >= 1 (mu4 = 1 is Rademacher).
struct EntryLaw {
  EntryKind kind = EntryKind::gaussian;
  double excess_x = 0.0;
  double excess_y = 0.0;
  double excess_z = 0.0;

  static EntryLaw gaussian() { return {}; }
  static EntryLaw rademacher() { return {EntryKind::rademacher, -2.0, -2.0, -2.0}; }
  static EntryLaw custom(double ex, double ey, double ez) {
    return {EntryKind::custom, ex, ey, ez};
  }

  /// Throws ValidationError when excesses are inconsistent with the kind.
  void validate() const;

  bool operator==(const EntryLaw&) const = default;
};

/// Factor loadings A (p x r) and B (q x r).
struct FactorLoadings {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;

  static FactorLoadings zero(Eigen::Index p, Eigen::Index q, Eigen::Index r);

  Eigen::Index p() const { return a.rows(); }
  Eigen::Index q() const { return b.rows(); }
  Eigen::Index r() const { return a.cols(); }

  /// Throws ValidationError on shape mismatch or non-finite entries.
  void validate() const;
};

struct ModelSpec {
  std::size_t p = 0;
  std::size_t q = 0;
  std::size_t n = 0;
  std::size_t r = 0;
  FactorLoadings loadings;
  EntryLaw entry_law;
  /// Diagonal of Sigma^{1/2}; both data matrices are right-multiplied by it.
  std::optional<Eigen::VectorXd> heterogeneity;
  /// Default seed carried by serialized specs.
  std::uint64_t seed = 0;

  void validate() const;
};

/// One draw of the pair of data matrices. Immutable once constructed.
class DataSet {
public:
  DataSet(Eigen::MatrixXd x_tilde, Eigen::MatrixXd y_tilde, std::uint64_t seed, ModelSpec spec);

  const Eigen::MatrixXd& x_tilde() const noexcept { return x_tilde_; }
  const Eigen::MatrixXd& y_tilde() const noexcept { return y_tilde_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const ModelSpec& spec_echo() const noexcept { return spec_; }

private:
  Eigen::MatrixXd x_tilde_;
  Eigen::MatrixXd y_tilde_;
  std::uint64_t seed_;
  ModelSpec spec_;
};

/// Population canonical correlation matrix
/// (I + AA^T)^{-1/2} A B^T (I + BB^T)^{-1} B A^T (I + AA^T)^{-1/2}.
Eigen::MatrixXd pcc_matrix(const FactorLoadings& loadings);

/// The r largest eigenvalues of pcc_matrix, descending, clamped to [0, 1].
/// Evaluated through the r x r core in the right-singular bases of A and B.
std::vector<double> population_ccc(const FactorLoadings& loadings);

/// X, Y, Z with i.i.d. entries of variance 1/n; returns X + AZ and Y + BZ,
/// right-multiplied by diag(heterogeneity) when present. Pure function of (spec, seed).
DataSet sample_dataset(const ModelSpec& spec, std::uint64_t seed);

/// Matrix with i.i.d. standardized entries of the given fourth-cumulant excess,
/// scaled by `scale`. Used for each noise source of sample_dataset.
Eigen::MatrixXd sample_noise(EntryKind kind, double excess, Eigen::Index rows, Eigen::Index cols,
                             double scale, Engine& engine);

/// Haar-distributed rows x cols matrix with orthonormal columns (QR of a
/// Gaussian matrix with the sign of diag(R) fixed positive).
Eigen::MatrixXd haar_orthonormal(Eigen::Index rows, Eigen::Index cols, Engine& engine);

/// A = sum_i a_i u_i^a (v_i)^T, B = sum_i b_i u_i^b (v_i')^T with Haar directions.
/// With shared_right, v_i' = v_i.
FactorLoadings random_unit_loadings(std::size_t p, std::size_t q, std::size_t r,
                                    std::span<const double> a_scales,
                                    std::span<const double> b_scales, bool shared_right,
                                    std::uint64_t seed);

/// A = sum_i a_i e_i e_i^T, B = sum_i b_i e_i e_i^T (coordinate directions).
FactorLoadings standard_basis_loadings(std::size_t p, std::size_t q,
                                       std::span<const double> a_scales,
                                       std::span<const double> b_scales);

void to_json(nlohmann::json& j, const EntryLaw& law);
void from_json(const nlohmann::json& j, EntryLaw& law);
void to_json(nlohmann::json& j, const ModelSpec& spec);
void from_json(const nlohmann::json& j, ModelSpec& spec);

}  // namespace scca
