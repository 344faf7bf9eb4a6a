#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace scca {

using Engine = std::mt19937_64;

/// Recorded in every output manifest.
inline constexpr std::string_view kRngAlgorithm =
    "std::mt19937_64 seeded through a splitmix64 mix; std::normal_distribution, "
    "std::gamma_distribution";

/// splitmix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Stable 64-bit mix of a seed with a path of integer tags. Distinct paths give
/// statistically independent child seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept;

Engine make_engine(std::uint64_t seed);

/// rows x cols matrix of i.i.d. N(0, 1) draws, filled column-major.
Eigen::MatrixXd standard_normal_matrix(Eigen::Index rows, Eigen::Index cols, Engine& engine);

/// Uniform double in [0, 1) with 53 random bits.
double uniform01(Engine& engine);

/// Chi-distributed draw with `dof` degrees of freedom.
double chi(double dof, Engine& engine);

}  // namespace scca
