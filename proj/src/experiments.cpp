#include "scca/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "scca/errors.hpp"
#include "scca/inference.hpp"
#include "scca/spectrum.hpp"
#include "scca/stats.hpp"
#include "scca/theory.hpp"

namespace scca {

namespace {

constexpr std::uint64_t kLoadingStream = 101;
constexpr std::uint64_t kDataStream = 202;
constexpr double kCccTolerance = 0.02;

std::uint64_t task_tag(Task t) { return static_cast<std::uint64_t>(t) + 1; }

// Runs body(i) for i in [0, count) on `threads` workers. Each index is written
// by exactly one worker, so results do not depend on the schedule.
template <typename Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body,
                  const std::function<void(std::size_t, std::size_t)>& progress) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
        return;
      }
      const std::size_t d = done.fetch_add(1) + 1;
      if (progress) progress(d, count);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

std::size_t count_supercritical(const std::vector<double>& t, const TheoryContext& ctx) {
  const double tc = threshold_tc(ctx);
  return static_cast<std::size_t>(std::count_if(t.begin(), t.end(), [tc](double v) { return v > tc; }));
}

RepRecord evaluate(const ExperimentConfig& config, std::size_t cell, std::size_t rep,
                   const std::pair<double, double>& crit) {
  RepRecord rec;
  rec.cell = cell;
  rec.rep = rep;
  rec.seed = replication_seed(config, cell, rep);
  const ModelSpec spec = cell_model(config, cell, rec.seed);
  const DataSet data = sample_dataset(spec, derive_seed(rec.seed, {kDataStream}));
  const SccSpectrum spectrum = scc_spectrum(data.x_tilde(), data.y_tilde());
  const TheoryContext ctx = TheoryContext::from_dimensions(spec.p, spec.q, spec.n);
  const std::vector<double> t = population_ccc(spec.loadings);
  const double t1 = t.empty() ? 0.0 : t.front();

  switch (config.task) {
    case Task::type1:
    case Task::power: {
      const double tw = stat_tw(spectrum, ctx, spec.n, 0);
      const double on = stat_onatski(spectrum, 0, config.r_star_test);
      rec.fields = {t1, tw, on, tw >= crit.first ? 1.0 : 0.0, on >= crit.second ? 1.0 : 0.0};
      break;
    }
    case Task::rank: {
      const double w1 = config.omega1.value_or(default_omega1(spec.n));
      const double wo = config.omega_o.value_or(default_omega_o(std::min(spec.p, spec.q)));
      const auto r1 = estimate_rank_threshold(spectrum, ctx, w1);
      const auto ro = estimate_rank_ratio(spectrum, wo, config.r_star_rank);
      rec.fields = {static_cast<double>(count_supercritical(t, ctx)),
                    static_cast<double>(r1.r_hat), static_cast<double>(ro.r_hat)};
      break;
    }
    case Task::outlier_hist:
      rec.fields = {t1, spectrum.at(1)};
      break;
    case Task::ccc_curve: {
      const CccEstimate est = estimate_t_from_lambda(ctx, spectrum.at(1));
      rec.fields = {config.cells[cell].grid_value.value_or(config.cells[cell].a_scales.front()), t1,
                    est.t_hat, est.clamped ? 1.0 : 0.0};
      break;
    }
  }
  const std::size_t head = std::min(kEigHead, spectrum.size());
  rec.eig_head.assign(spectrum.values.begin(), spectrum.values.begin() + static_cast<long>(head));
  return rec;
}

std::vector<std::vector<const RepRecord*>> by_cell(const ExperimentConfig& config,
                                                   const std::vector<RepRecord>& records) {
  std::vector<std::vector<const RepRecord*>> out(config.cells.size());
  for (const auto& r : records) {
    if (r.cell >= out.size()) throw DimensionError("record cell index out of range");
    out[r.cell].push_back(&r);
  }
  for (auto& v : out) {
    std::sort(v.begin(), v.end(), [](const RepRecord* x, const RepRecord* y) { return x->rep < y->rep; });
  }
  return out;
}

nlohmann::json cell_header(const ExperimentConfig& config, std::size_t i) {
  const CellSpec& c = config.cells[i];
  nlohmann::json j{{"label", c.label}, {"scenario", to_string(c.scenario)}, {"p", c.p}, {"q", c.q}};
  if (c.grid_value) j["a"] = *c.grid_value;
  return j;
}

nlohmann::json aggregate_tests(const ExperimentConfig& config,
                               const std::vector<std::vector<const RepRecord*>>& cells,
                               const std::pair<double, double>& crit) {
  nlohmann::json out;
  out["critical_T"] = crit.first;
  out["critical_To"] = crit.second;
  out["alpha"] = config.alpha;
  out["r_star"] = config.r_star_test;
  bool spiked = false;
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& recs = cells[i];
    nlohmann::json row = cell_header(config, i);
    std::size_t rej_t = 0, rej_o = 0;
    double t1 = 0.0;
    for (const RepRecord* r : recs) {
      t1 = std::max(t1, r->fields[0]);
      rej_t += r->fields[3] != 0.0;
      rej_o += r->fields[4] != 0.0;
    }
    const double nrep = static_cast<double>(recs.size());
    spiked = spiked || t1 > 0.0;
    row["t1"] = t1;
    row["reps"] = recs.size();
    row["rejections_T"] = rej_t;
    row["rejections_To"] = rej_o;
    row["rate_T"] = recs.empty() ? 0.0 : static_cast<double>(rej_t) / nrep;
    row["rate_To"] = recs.empty() ? 0.0 : static_cast<double>(rej_o) / nrep;
    if (config.task == Task::power) {
      const TheoryContext ctx = TheoryContext::from_dimensions(config.cells[i].p, config.cells[i].q, config.n);
      const double b = config.cells[i].b_scales.front();
      const double s = threshold_tc(ctx) * (1.0 + b * b) / (b * b);
      row["a_c"] = s < 1.0 ? nlohmann::json(std::sqrt(s / (1.0 - s))) : nlohmann::json(nullptr);
    }
    rows.push_back(std::move(row));
  }
  out["cells"] = std::move(rows);
  if (config.task == Task::type1 && spiked) {
    out["warning"] = "spiked model: population canonical correlations are not all zero";
  }
  return out;
}

nlohmann::json aggregate_rank(const ExperimentConfig& config,
                              const std::vector<std::vector<const RepRecord*>>& cells) {
  nlohmann::json out;
  out["r_star"] = config.r_star_rank;
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    nlohmann::json row = cell_header(config, i);
    const CellSpec& c = config.cells[i];
    row["omega1"] = config.omega1.value_or(default_omega1(config.n));
    row["omega_o"] = config.omega_o.value_or(default_omega_o(std::min(c.p, c.q)));
    std::size_t counts[2][3] = {{0, 0, 0}, {0, 0, 0}};
    std::size_t r_true = 0;
    for (const RepRecord* r : cells[i]) {
      r_true = static_cast<std::size_t>(r->fields[0]);
      for (int m = 0; m < 2; ++m) {
        const double est = r->fields[static_cast<std::size_t>(m) + 1];
        const int k = est < r->fields[0] ? 0 : (est == r->fields[0] ? 1 : 2);
        ++counts[m][k];
      }
    }
    row["r_true"] = r_true;
    row["reps"] = cells[i].size();
    const char* names[2] = {"threshold", "ratio"};
    for (int m = 0; m < 2; ++m) {
      row[names[m]] = {{"under", counts[m][0]}, {"correct", counts[m][1]}, {"over", counts[m][2]}};
    }
    rows.push_back(std::move(row));
  }
  out["cells"] = std::move(rows);
  return out;
}

nlohmann::json aggregate_hist(const ExperimentConfig& config,
                              const std::vector<std::vector<const RepRecord*>>& cells) {
  nlohmann::json out;
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const CellSpec& c = config.cells[i];
    nlohmann::json row = cell_header(config, i);
    row["directions"] = to_string(c.directions);
    const TheoryContext ctx = TheoryContext::from_dimensions(c.p, c.q, config.n);
    std::vector<double> xs;
    double t1 = 0.0;
    for (const RepRecord* r : cells[i]) {
      t1 = r->fields[0];
      xs.push_back(r->fields[1]);
    }
    const double n = static_cast<double>(config.n);
    row["t1"] = t1;
    row["reps"] = xs.size();
    const bool super = t1 > threshold_tc(ctx);
    const double theta = super ? outlier_location(ctx, t1) : bulk_edges(ctx).lambda_plus;
    row["theta"] = theta;
    if (!xs.empty()) {
      row["mean"] = mean(xs);
      if (xs.size() > 1) {
        const double var = sample_variance(xs);
        row["variance"] = var;
        row["mean_se"] = std::sqrt(var / static_cast<double>(xs.size()));
      }
    }
    if (super) {
      const double sigma_sq = rank_one_outlier_variance(ctx, c.a_scales.front(), c.b_scales.front(),
                                                        config.entry_law,
                                                        c.directions == Directions::random);
      const double gauss_sq = 2.0 * gaussian_outlier_variance(ctx, t1);
      row["sigma_sq"] = sigma_sq;
      row["gaussian_sigma_sq"] = gauss_sq;
      row["predicted_variance"] = sigma_sq / n;
      row["gaussian_predicted_variance"] = gauss_sq / n;
      if (!xs.empty()) {
        const double sd = std::sqrt(sigma_sq / n);
        const double gsd = std::sqrt(gauss_sq / n);
        const double d = ks_statistic(xs, [&](double x) { return normal_cdf(x, theta, sd); });
        const double dg = ks_statistic(xs, [&](double x) { return normal_cdf(x, theta, gsd); });
        row["ks_statistic"] = d;
        row["ks_pvalue"] = ks_pvalue(d, xs.size());
        row["gaussian_ks_statistic"] = dg;
        row["gaussian_ks_pvalue"] = ks_pvalue(dg, xs.size());
      }
    }
    rows.push_back(std::move(row));
  }
  out["cells"] = std::move(rows);
  return out;
}

nlohmann::json aggregate_ccc(const ExperimentConfig& config,
                             const std::vector<std::vector<const RepRecord*>>& cells) {
  nlohmann::json out;
  out["tolerance"] = kCccTolerance;
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    nlohmann::json row = cell_header(config, i);
    double t_true = 0.0, sum = 0.0, abs_sum = 0.0, max_abs = 0.0;
    std::size_t within = 0, clamped = 0;
    for (const RepRecord* r : cells[i]) {
      t_true = r->fields[1];
      const double err = std::abs(r->fields[2] - r->fields[1]);
      sum += r->fields[2];
      abs_sum += err;
      max_abs = std::max(max_abs, err);
      within += err < kCccTolerance;
      clamped += r->fields[3] != 0.0;
    }
    const double k = static_cast<double>(cells[i].size());
    row["t_true"] = t_true;
    row["reps"] = cells[i].size();
    row["mean_t_hat"] = cells[i].empty() ? 0.0 : sum / k;
    row["mean_abs_error"] = cells[i].empty() ? 0.0 : abs_sum / k;
    row["max_abs_error"] = max_abs;
    row["within_tolerance"] = within;
    row["clamped"] = clamped;
    rows.push_back(std::move(row));
  }
  out["cells"] = std::move(rows);
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<CellSpec> scenario_grid(const std::vector<Scenario>& scenarios,
                                    const std::vector<std::pair<std::size_t, std::size_t>>& dims,
                                    const std::vector<double>& a_scales,
                                    const std::vector<double>& b_scales, Directions dirs) {
  std::vector<CellSpec> out;
  for (Scenario s : scenarios) {
    for (auto [p, q] : dims) {
      CellSpec c;
      c.label = to_string(s) + "-" + std::to_string(p) + "x" + std::to_string(q);
      c.scenario = s;
      c.p = p;
      c.q = q;
      c.directions = dirs;
      c.a_scales = a_scales;
      c.b_scales = b_scales;
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<double> make_grid(double lo, double hi, double step) {
  std::vector<double> g;
  const auto steps = static_cast<long>(std::llround((hi - lo) / step));
  for (long i = 0; i <= steps; ++i) g.push_back(lo + static_cast<double>(i) * step);
  return g;
}

std::vector<CellSpec> sweep(const std::vector<CellSpec>& base, const std::vector<double>& grid) {
  std::vector<CellSpec> out;
  for (const CellSpec& b : base) {
    for (double a : grid) {
      CellSpec c = b;
      c.a_scales.front() = a;
      c.grid_value = a;
      std::ostringstream os;
      os << b.label << "-a" << a;
      c.label = os.str();
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::size_t scaled_reps(std::size_t paper, const std::string& profile) {
  if (profile == "paper") return paper;
  if (profile == "quick") return std::max<std::size_t>(1, paper / 10);
  return std::max<std::size_t>(1, paper / 100);
}

}  // namespace

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::a:
      return "a";
    case Scenario::b:
      return "b";
    case Scenario::c:
      return "c";
    case Scenario::custom:
      return "custom";
  }
  return "custom";
}

Scenario scenario_from_string(const std::string& name) {
  if (name == "a") return Scenario::a;
  if (name == "b") return Scenario::b;
  if (name == "c") return Scenario::c;
  if (name == "custom") return Scenario::custom;
  throw ValidationError("unknown scenario '" + name + "' (expected a, b, c or custom)");
}

std::optional<Eigen::VectorXd> scenario_heterogeneity(Scenario s, std::size_t n) {
  double high = 1.0;
  switch (s) {
    case Scenario::a:
    case Scenario::custom:
      return std::nullopt;
    case Scenario::b:
      high = 1.2;
      break;
    case Scenario::c:
      high = 2.0;
      break;
  }
  Eigen::VectorXd v = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  v.head(static_cast<Eigen::Index>(n / 2)).setConstant(high);
  return v;
}

ModelSpec ScenarioSpec::resolve() const {
  ModelSpec m = base;
  if (scenario != Scenario::custom) m.heterogeneity = scenario_heterogeneity(scenario, m.n);
  return m;
}

std::string to_string(Task t) {
  switch (t) {
    case Task::type1:
      return "type1";
    case Task::power:
      return "power";
    case Task::rank:
      return "rank";
    case Task::outlier_hist:
      return "outlier_hist";
    case Task::ccc_curve:
      return "ccc_curve";
  }
  return "type1";
}

Task task_from_string(const std::string& name) {
  for (Task t : {Task::type1, Task::power, Task::rank, Task::outlier_hist, Task::ccc_curve}) {
    if (to_string(t) == name) return t;
  }
  throw ValidationError("unknown task '" + name + "'");
}

std::string to_string(Directions d) {
  return d == Directions::standard_basis ? "standard_basis" : "random";
}

void ExperimentConfig::validate() const {
  if (reps == 0) throw ValidationError("reps must be at least 1");
  if (cells.empty()) throw ValidationError("experiment has no cells");
  if (r == 0) throw ValidationError("experiments need r >= 1");
  entry_law.validate();
  for (double g : grid) {
    if (!std::isfinite(g)) throw ValidationError("grid values must be finite");
  }
  for (const CellSpec& c : cells) {
    if (c.a_scales.size() != r || c.b_scales.size() != r) {
      throw ValidationError("cell '" + c.label + "' scale lists must have length r");
    }
    if (c.p + c.q >= n) throw ValidationError("cell '" + c.label + "' violates p + q < n");
    if (r > std::min(c.p, c.q)) throw ValidationError("cell '" + c.label + "' has r > min(p, q)");
  }
  if (task == Task::type1 || task == Task::power) {
    for (const CellSpec& c : cells) {
      if (std::min(c.p, c.q) < r_star_test + 2) {
        throw ValidationError("cell '" + c.label + "' is too small for r_star");
      }
    }
  }
}

void to_json(nlohmann::json& j, const CellSpec& c) {
  j = nlohmann::json{{"label", c.label},
                     {"scenario", to_string(c.scenario)},
                     {"p", c.p},
                     {"q", c.q},
                     {"directions", to_string(c.directions)},
                     {"a_scales", c.a_scales},
                     {"b_scales", c.b_scales}};
  j["grid_value"] = c.grid_value ? nlohmann::json(*c.grid_value) : nlohmann::json(nullptr);
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  const auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  j = nlohmann::json{{"task", to_string(c.task)},
                     {"target", c.target},
                     {"profile", c.profile},
                     {"n", c.n},
                     {"r", c.r},
                     {"entry_law", c.entry_law},
                     {"cells", c.cells},
                     {"grid", c.grid},
                     {"reps", c.reps},
                     {"master_seed", c.master_seed},
                     {"alpha", c.alpha},
                     {"r_star_test", c.r_star_test},
                     {"onatski_critical_value", opt(c.onatski_critical_value)},
                     {"onatski_simulation",
                      {{"mode", to_string(c.onatski_sim.mode)},
                       {"p", c.onatski_sim.dim_p},
                       {"n", c.onatski_sim.dim_n},
                       {"reps", c.onatski_sim.reps},
                       {"seed", c.onatski_sim.seed}}},
                     {"r_star_rank", c.r_star_rank},
                     {"omega1", opt(c.omega1)},
                     {"omega_o", opt(c.omega_o)},
                     {"density_points", c.density_points}};
}

std::vector<std::string> record_fields(Task task) {
  switch (task) {
    case Task::type1:
    case Task::power:
      return {"t1", "T", "T_o", "reject_T", "reject_To"};
    case Task::rank:
      return {"r_true", "r_hat_threshold", "r_hat_ratio"};
    case Task::outlier_hist:
      return {"t1", "lambda1"};
    case Task::ccc_curve:
      return {"a", "t_true", "t_hat", "clamped"};
  }
  return {};
}

std::uint64_t replication_seed(const ExperimentConfig& config, std::size_t cell, std::size_t rep) {
  return derive_seed(config.master_seed, {task_tag(config.task), cell, rep});
}

ModelSpec cell_model(const ExperimentConfig& config, std::size_t cell, std::uint64_t rep_seed) {
  const CellSpec& c = config.cells.at(cell);
  ScenarioSpec s;
  s.scenario = c.scenario;
  s.base.p = c.p;
  s.base.q = c.q;
  s.base.n = config.n;
  s.base.r = config.r;
  s.base.entry_law = config.entry_law;
  s.base.seed = rep_seed;
  s.base.loadings = c.directions == Directions::standard_basis
                        ? standard_basis_loadings(c.p, c.q, c.a_scales, c.b_scales)
                        : random_unit_loadings(c.p, c.q, config.r, c.a_scales, c.b_scales, true,
                                               derive_seed(rep_seed, {kLoadingStream}));
  return s.resolve();
}

std::pair<double, double> critical_values(const ExperimentConfig& config,
                                          const std::optional<std::string>& onatski_cache) {
  const double t = tw1_quantile(1.0 - config.alpha);
  const double o = config.onatski_critical_value
                       ? *config.onatski_critical_value
                       : onatski_critical(config.r_star_test, 0, config.alpha, config.onatski_sim,
                                          onatski_cache);
  return {t, o};
}

nlohmann::json aggregate(const ExperimentConfig& config, const std::vector<RepRecord>& records,
                         const std::optional<std::string>& onatski_cache) {
  const auto cells = by_cell(config, records);
  switch (config.task) {
    case Task::type1:
    case Task::power:
      return aggregate_tests(config, cells, critical_values(config, onatski_cache));
    case Task::rank:
      return aggregate_rank(config, cells);
    case Task::outlier_hist:
      return aggregate_hist(config, cells);
    case Task::ccc_curve:
      return aggregate_ccc(config, cells);
  }
  return {};
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  std::pair<double, double> crit{0.0, 0.0};
  if (config.task == Task::type1 || config.task == Task::power) {
    crit = critical_values(config, options.onatski_cache);
  }
  ExperimentResult result;
  result.config = config;
  result.threads = std::max<std::size_t>(1, options.threads);
  result.records.resize(config.replication_count());
  parallel_for(
      result.records.size(), result.threads,
      [&](std::size_t i) { result.records[i] = evaluate(config, i / config.reps, i % config.reps, crit); },
      options.progress);
  result.aggregates = aggregate(config, result.records, options.onatski_cache);
  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

namespace {

ExperimentResult run_checked(Task task, const ExperimentConfig& config, const RunOptions& options) {
  if (config.task != task) {
    throw ValidationError("config task '" + to_string(config.task) + "' does not match '" +
                          to_string(task) + "'");
  }
  return run_experiment(config, options);
}

}  // namespace

ExperimentResult run_type1(const ExperimentConfig& config, const RunOptions& options) {
  return run_checked(Task::type1, config, options);
}
ExperimentResult run_power(const ExperimentConfig& config, const RunOptions& options) {
  return run_checked(Task::power, config, options);
}
ExperimentResult run_rank(const ExperimentConfig& config, const RunOptions& options) {
  return run_checked(Task::rank, config, options);
}
ExperimentResult run_outlier_hist(const ExperimentConfig& config, const RunOptions& options) {
  return run_checked(Task::outlier_hist, config, options);
}
ExperimentResult run_ccc_curve(const ExperimentConfig& config, const RunOptions& options) {
  return run_checked(Task::ccc_curve, config, options);
}

const std::vector<std::string>& reproduce_targets() {
  static const std::vector<std::string> t{"table1", "table2", "table3",
                                          "fig-hist", "fig-power", "fig-ccc"};
  return t;
}

const std::vector<std::string>& profiles() {
  static const std::vector<std::string> p{"paper", "quick", "smoke"};
  return p;
}

ExperimentConfig preset(const std::string& target, const std::string& profile,
                        std::uint64_t seed) {
  if (std::find(profiles().begin(), profiles().end(), profile) == profiles().end()) {
    throw ValidationError("unknown profile '" + profile + "' (expected paper, quick or smoke)");
  }
  ExperimentConfig c;
  c.target = target;
  c.profile = profile;
  c.master_seed = seed;
  c.entry_law = EntryLaw::rademacher();
  c.onatski_sim = OnatskiSimulation{ReferenceMode::wishart, 250, 500,
                                    profile == "smoke" ? std::size_t{1000} : std::size_t{5000},
                                    20231};
  const std::vector<std::pair<std::size_t, std::size_t>> pq1{{200, 200}, {300, 100}};

  if (target == "table1" || target == "fig-power") {
    c.n = 1000;
    c.r = 5;
    const std::vector<double> zeros(5, 0.0);
    std::vector<double> bs = zeros;
    if (target == "table1") {
      c.task = Task::type1;
      c.reps = scaled_reps(2000, profile);
      c.cells = scenario_grid({Scenario::a, Scenario::b, Scenario::c}, pq1, zeros, zeros,
                              Directions::random);
    } else {
      c.task = Task::power;
      c.reps = scaled_reps(1000, profile);
      bs.front() = 2.0;
      const double step = profile == "paper" ? 0.1 : (profile == "quick" ? 0.25 : 1.0);
      c.grid = make_grid(0.0, 4.0, step);
      c.cells = sweep(scenario_grid({Scenario::a, Scenario::c}, pq1, zeros, bs, Directions::random),
                      c.grid);
    }
    return c;
  }
  if (target == "table2" || target == "table3") {
    c.task = Task::rank;
    c.n = 2000;
    c.r = 3;
    c.reps = scaled_reps(1000, profile);
    c.cells = scenario_grid({Scenario::a, Scenario::b, Scenario::c}, pq1, {4.0, 2.0, 1.0},
                            {2.0, 2.0, 2.0}, Directions::standard_basis);
    return c;
  }
  if (target == "fig-hist") {
    c.task = Task::outlier_hist;
    c.n = 2000;
    c.r = 1;
    c.reps = profile == "smoke" ? 10 : scaled_reps(5000, profile);
    CellSpec sa{"directions-a", Scenario::a, 400, 400, Directions::standard_basis, {2.0}, {2.0}, {}};
    CellSpec sb{"directions-b", Scenario::a, 400, 400, Directions::random, {2.0}, {2.0}, {}};
    c.cells = {sa, sb};
    return c;
  }
  if (target == "fig-ccc") {
    c.task = Task::ccc_curve;
    c.n = 2000;
    c.r = 1;
    c.reps = 1;
    const double step = profile == "paper" ? 0.05 : (profile == "quick" ? 0.25 : 1.0);
    c.grid = make_grid(1.0, 4.0, step);
    CellSpec base{"a-400x400", Scenario::a, 400, 400, Directions::random, {1.0}, {2.0}, {}};
    c.cells = sweep({base}, c.grid);
    return c;
  }
  throw ValidationError("unknown reproduce target '" + target +
                        "' (expected table1, table2, table3, fig-hist, fig-power or fig-ccc)");
}

nlohmann::json result_json(const ExperimentResult& result) {
  nlohmann::json seeds;
  seeds["master"] = result.config.master_seed;
  seeds["task_tag"] = task_tag(result.config.task);
  auto reps = nlohmann::json::array();
  for (const RepRecord& r : result.records) reps.push_back(r.seed);
  seeds["replications"] = std::move(reps);
  return nlohmann::json{{"version", library_version()},
                        {"task", to_string(result.config.task)},
                        {"target", result.config.target},
                        {"profile", result.config.profile},
                        {"config", result.config},
                        {"seeds", std::move(seeds)},
                        {"aggregates", result.aggregates}};
}

void write_reps_csv(std::ostream& out, const ExperimentResult& result) {
  out << "cell,rep,seed";
  for (const auto& f : record_fields(result.config.task)) out << ',' << f;
  for (std::size_t k = 1; k <= kEigHead; ++k) out << ",eig" << k;
  out << '\n';
  for (const RepRecord& r : result.records) {
    out << r.cell << ',' << r.rep << ',' << r.seed;
    for (double v : r.fields) out << ',' << fmt(v);
    for (std::size_t k = 0; k < kEigHead; ++k) {
      out << ',';
      if (k < r.eig_head.size()) out << fmt(r.eig_head[k]);
    }
    out << '\n';
  }
}

std::vector<RepRecord> read_reps_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty reps.csv", 1);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 3 + kEigHead) throw ParseError("reps.csv header too short", 1);
  const std::size_t nfields = header.size() - 3 - kEigHead;
  std::vector<RepRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (!line.empty() && line.back() == ',') cols.emplace_back();
    if (cols.size() != header.size()) throw ParseError("wrong column count", lineno);
    RepRecord r;
    try {
      r.cell = std::stoul(cols[0]);
      r.rep = std::stoul(cols[1]);
      r.seed = std::stoull(cols[2]);
      for (std::size_t k = 0; k < nfields; ++k) r.fields.push_back(std::stod(cols[3 + k]));
      for (std::size_t k = 0; k < kEigHead; ++k) {
        const std::string& v = cols[3 + nfields + k];
        if (!v.empty()) r.eig_head.push_back(std::stod(v));
      }
    } catch (const std::logic_error&) {
      throw ParseError("malformed number", lineno);
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_outputs(const ExperimentResult& result, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  {
    std::ofstream out(root / "result.json");
    out << result_json(result).dump(2) << '\n';
  }
  {
    std::ofstream out(root / "reps.csv");
    write_reps_csv(out, result);
  }
  const ExperimentConfig& cfg = result.config;
  const auto& cells = result.aggregates.at("cells");
  if (cfg.target == "table1") {
    std::ofstream out(root / "table1.csv");
    out << "label,scenario,p,q,rate_T,rate_To\n";
    for (const auto& c : cells) {
      out << c["label"].get<std::string>() << ',' << c["scenario"].get<std::string>() << ','
          << c["p"] << ',' << c["q"] << ',' << fmt(c["rate_T"]) << ',' << fmt(c["rate_To"]) << '\n';
    }
  } else if (cfg.target == "table2" || cfg.target == "table3") {
    const char* key = cfg.target == "table2" ? "threshold" : "ratio";
    std::ofstream out(root / (cfg.target + ".csv"));
    out << "label,scenario,p,q,under,correct,over\n";
    for (const auto& c : cells) {
      out << c["label"].get<std::string>() << ',' << c["scenario"].get<std::string>() << ','
          << c["p"] << ',' << c["q"] << ',' << c[key]["under"] << ',' << c[key]["correct"] << ','
          << c[key]["over"] << '\n';
    }
  } else if (cfg.task == Task::power) {
    std::ofstream out(root / "power.csv");
    out << "label,scenario,p,q,a,power_T,power_To,a_c\n";
    for (const auto& c : cells) {
      out << c["label"].get<std::string>() << ',' << c["scenario"].get<std::string>() << ','
          << c["p"] << ',' << c["q"] << ',' << fmt(c["a"]) << ',' << fmt(c["rate_T"]) << ','
          << fmt(c["rate_To"]) << ',' << (c["a_c"].is_null() ? std::string() : fmt(c["a_c"]))
          << '\n';
    }
  } else if (cfg.task == Task::outlier_hist) {
    std::ofstream samples(root / "hist_samples.csv");
    samples << "label,lambda1\n";
    for (const RepRecord& r : result.records) {
      samples << cfg.cells[r.cell].label << ',' << fmt(r.fields[1]) << '\n';
    }
    std::ofstream dens(root / "hist_density.csv");
    dens << "label,x,pdf_theory,pdf_gaussian\n";
    const double n = static_cast<double>(cfg.n);
    for (const auto& c : cells) {
      if (!c.contains("sigma_sq")) continue;
      const double theta = c["theta"];
      const double sd = std::sqrt(c["sigma_sq"].get<double>() / n);
      const double gsd = std::sqrt(c["gaussian_sigma_sq"].get<double>() / n);
      const double half = 4.0 * std::max(sd, gsd);
      const std::size_t m = std::max<std::size_t>(2, cfg.density_points);
      const auto pdf = [](double x, double mu, double s) {
        const double z = (x - mu) / s;
        return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
      };
      for (std::size_t k = 0; k < m; ++k) {
        const double x = theta - half + 2.0 * half * static_cast<double>(k) / static_cast<double>(m - 1);
        dens << c["label"].get<std::string>() << ',' << fmt(x) << ',' << fmt(pdf(x, theta, sd))
             << ',' << fmt(pdf(x, theta, gsd)) << '\n';
      }
    }
  } else if (cfg.task == Task::ccc_curve) {
    std::ofstream out(root / "ccc.csv");
    out << "a,t_true,t_hat,clamped\n";
    for (const RepRecord& r : result.records) {
      out << fmt(r.fields[0]) << ',' << fmt(r.fields[1]) << ',' << fmt(r.fields[2]) << ','
          << (r.fields[3] != 0.0 ? 1 : 0) << '\n';
    }
  }
}

std::string library_version() { return SCCA_VERSION; }

}  // namespace scca
