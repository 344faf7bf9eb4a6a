#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scca/limits.hpp"
#include "scca/model.hpp"

namespace scca {

/// Heterogeneity scenarios: (a) none, (b) diag(1.2 x n/2, 1 x n/2),
/// (c) diag(2 x n/2, 1 x n/2) for Sigma^{1/2}; custom keeps the base vector.
enum class Scenario { a, b, c, custom };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& name);

/// Sigma^{1/2} diagonal for a lettered scenario; empty for (a). For odd n the
/// first floor(n/2) entries take the larger value.
std::optional<Eigen::VectorXd> scenario_heterogeneity(Scenario s, std::size_t n);

struct ScenarioSpec {
  ModelSpec base;
  Scenario scenario = Scenario::a;

  /// base with the heterogeneity vector implied by the scenario letter.
  ModelSpec resolve() const;
};

enum class Task { type1, power, rank, outlier_hist, ccc_curve };

std::string to_string(Task t);
Task task_from_string(const std::string& name);

enum class Directions { standard_basis, random };

std::string to_string(Directions d);

/// One cell of an experiment: a model configuration repeated `reps` times.
struct CellSpec {
  std::string label;
  Scenario scenario = Scenario::a;
  std::size_t p = 0;
  std::size_t q = 0;
  Directions directions = Directions::random;
  std::vector<double> a_scales;
  std::vector<double> b_scales;
  /// Sweep coordinate (the first a scale) for power and ccc curves.
  std::optional<double> grid_value;
};

struct ExperimentConfig {
  Task task = Task::type1;
  std::string target;
  std::string profile;
  std::size_t n = 1000;
  std::size_t r = 1;
  EntryLaw entry_law = EntryLaw::rademacher();
  std::vector<CellSpec> cells;
  std::vector<double> grid;
  std::size_t reps = 1;
  std::uint64_t master_seed = 1;

  // testing
  double alpha = 0.1;
  std::size_t r_star_test = 3;
  std::optional<double> onatski_critical_value;
  OnatskiSimulation onatski_sim;
  // rank estimation; defaults n^{-1/2} and min(p, q)^{1/2}
  std::size_t r_star_rank = 10;
  std::optional<double> omega1;
  std::optional<double> omega_o;
  // histogram density grid
  std::size_t density_points = 201;

  void validate() const;
  std::size_t replication_count() const { return cells.size() * reps; }
};

void to_json(nlohmann::json& j, const CellSpec& c);
void to_json(nlohmann::json& j, const ExperimentConfig& c);

struct RepRecord {
  std::size_t cell = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  std::vector<double> fields;
  std::vector<double> eig_head;
};

inline constexpr std::size_t kEigHead = 5;

/// Per-replication field names for a task, in reps.csv order.
std::vector<std::string> record_fields(Task task);

struct RunOptions {
  std::size_t threads = 1;
  /// JSON sidecar for simulated Onatski critical values.
  std::optional<std::string> onatski_cache;
  /// Called with the number of finished replications.
  std::function<void(std::size_t, std::size_t)> progress;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RepRecord> records;
  nlohmann::json aggregates;
  double wall_time_seconds = 0.0;
  std::size_t threads = 1;
};

/// Per-replication seed: derive_seed(master, {task tag, cell, rep}).
std::uint64_t replication_seed(const ExperimentConfig& config, std::size_t cell, std::size_t rep);

/// Model of one cell for one replication (random directions depend on the seed).
ModelSpec cell_model(const ExperimentConfig& config, std::size_t cell, std::uint64_t rep_seed);

/// Critical values used by type1 and power runs: {T, T_o}.
std::pair<double, double> critical_values(const ExperimentConfig& config,
                                          const std::optional<std::string>& onatski_cache);

/// Aggregates from records alone; run_* results equal aggregate(config, records).
nlohmann::json aggregate(const ExperimentConfig& config, const std::vector<RepRecord>& records,
                         const std::optional<std::string>& onatski_cache = std::nullopt);

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

ExperimentResult run_type1(const ExperimentConfig& config, const RunOptions& options = {});
ExperimentResult run_power(const ExperimentConfig& config, const RunOptions& options = {});
ExperimentResult run_rank(const ExperimentConfig& config, const RunOptions& options = {});
ExperimentResult run_outlier_hist(const ExperimentConfig& config, const RunOptions& options = {});
ExperimentResult run_ccc_curve(const ExperimentConfig& config, const RunOptions& options = {});

/// Reproduction targets and their presets.
const std::vector<std::string>& reproduce_targets();
const std::vector<std::string>& profiles();
/// Throws ValidationError for an unknown target or profile.
ExperimentConfig preset(const std::string& target, const std::string& profile,
                        std::uint64_t seed);

/// result.json body: version, task, target, profile, config echo, seeds, aggregates.
nlohmann::json result_json(const ExperimentResult& result);

/// Writes result.json, reps.csv and any plot CSV of the target into dir.
void write_outputs(const ExperimentResult& result, const std::string& dir);

void write_reps_csv(std::ostream& out, const ExperimentResult& result);
/// Parses a reps.csv back into records.
std::vector<RepRecord> read_reps_csv(std::istream& in);

std::string library_version();

}  // namespace scca
