#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "scca/errors.hpp"
#include "scca/experiments.hpp"
#include "scca/inference.hpp"
#include "scca/limits.hpp"
#include "scca/matrix_io.hpp"
#include "scca/model.hpp"
#include "scca/spectrum.hpp"
#include "scca/theory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  bool json_out = false;
  std::string out_dir;
  std::size_t threads = 1;
  std::uint64_t seed = 1;
  bool seed_given = false;
};

struct Input {
  std::string x_path;
  std::string y_path;
  std::string spec_path;
};

struct Loaded {
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;
  json source;
};

std::string default_out_dir() {
  const char* env = std::getenv("SCCA_OUTPUT_DIR");
  return env != nullptr && *env != '\0' ? env : "scca-out";
}

std::size_t default_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

scca::ModelSpec read_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw scca::Error("cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw scca::ParseError(path + ": " + e.what(), 1);
  }
  return j.get<scca::ModelSpec>();
}

Loaded load_input(const Input& in, const Common& common) {
  Loaded out;
  if (!in.x_path.empty() || !in.y_path.empty()) {
    if (in.x_path.empty() || in.y_path.empty()) {
      throw scca::ValidationError("--x and --y must be given together");
    }
    out.x = scca::read_matrix_csv_file(in.x_path);
    out.y = scca::read_matrix_csv_file(in.y_path);
    out.source = {{"x", in.x_path}, {"y", in.y_path}};
    return out;
  }
  if (in.spec_path.empty()) throw scca::ValidationError("give either --x/--y or --spec");
  const scca::ModelSpec spec = read_spec(in.spec_path);
  const std::uint64_t seed = common.seed_given ? common.seed : spec.seed;
  const scca::DataSet data = scca::sample_dataset(spec, seed);
  out.x = data.x_tilde();
  out.y = data.y_tilde();
  out.source = {{"spec", spec}, {"seed", seed}};
  return out;
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw scca::Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

void write_manifest(const Common& common, const std::string& command, const json& config,
                    double wall) {
  fs::create_directories(common.out_dir);
  json m{{"command", command},
         {"version", scca::library_version()},
         {"config", config},
         {"threads", common.threads},
         {"seed", common.seed},
         {"rng", std::string(scca::kRngAlgorithm)},
         {"wall_time_seconds", wall}};
  write_json_file(fs::path(common.out_dir) / "manifest.json", m);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

json spectrum_json(const scca::SccSpectrum& s) {
  return {{"p", s.p}, {"q", s.q}, {"n", s.n}, {"values", s.values}};
}

void emit(const Common& common, const json& j, const std::string& text) {
  if (common.json_out) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << text;
  }
}

json theory_json(double c1, double c2, const std::vector<double>& ts) {
  const scca::TheoryContext ctx(c1, c2);
  const auto e = scca::edge_data(ctx);
  json out{{"c1", ctx.c1()},
           {"c2", ctx.c2()},
           {"swapped", ctx.swapped()},
           {"t_c", e.t_c},
           {"lambda_minus", e.lambda_minus},
           {"lambda_plus", e.lambda_plus},
           {"c_tw", scca::tw_scale(ctx)},
           {"density_mass", scca::esd_total_mass(ctx)}};
  auto spikes = json::array();
  for (double t : ts) {
    json s{{"t", t}, {"supercritical", t > e.t_c && t <= 1.0}};
    if (t > e.t_c && t <= 1.0) {
      s["theta"] = scca::outlier_location(ctx, t);
      s["a_t"] = scca::outlier_slope(ctx, t);
      s["c_g"] = scca::gaussian_outlier_variance(ctx, t);
    } else {
      s["theta"] = nullptr;
      s["a_t"] = nullptr;
      s["c_g"] = nullptr;
    }
    spikes.push_back(std::move(s));
  }
  out["spikes"] = std::move(spikes);
  return out;
}

void add_common(CLI::App* sub, Common& common) {
  sub->add_flag("--json", common.json_out, "Machine-readable JSON on stdout");
  sub->add_option("--out", common.out_dir, "Output directory (default $SCCA_OUTPUT_DIR or scca-out)");
  sub->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--seed", common.seed, "Master seed");
}

void add_input(CLI::App* sub, Input& in) {
  sub->add_option("--x", in.x_path, "CSV matrix for X (header 'rows,cols')");
  sub->add_option("--y", in.y_path, "CSV matrix for Y");
  sub->add_option("--spec", in.spec_path, "ModelSpec JSON to sample from");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral inference for high-dimensional CCA"};
  app.require_subcommand(1);
  Common common;
  common.out_dir = default_out_dir();
  common.threads = default_threads();

  // theory
  double c1 = 0.0, c2 = 0.0;
  std::vector<double> ts;
  auto* theory = app.add_subcommand("theory", "Print limit quantities for (c1, c2) as JSON");
  theory->add_option("--c1", c1, "p / n")->required();
  theory->add_option("--c2", c2, "q / n")->required();
  theory->add_option("--t", ts, "Population squared CCCs");
  add_common(theory, common);

  // simulate
  std::string sim_spec;
  std::size_t sp = 0, sq = 0, sn = 0;
  std::vector<double> sa, sb;
  std::string law_name = "gaussian", scenario_name = "a", dirs_name = "random";
  bool save_matrices = false;
  auto* simulate = app.add_subcommand("simulate", "Sample a dataset and its SCC spectrum");
  simulate->add_option("--spec", sim_spec, "ModelSpec JSON");
  simulate->add_option("--p", sp, "Dimension of X");
  simulate->add_option("--q", sq, "Dimension of Y");
  simulate->add_option("--n", sn, "Sample count");
  simulate->add_option("--a", sa, "Singular values of A");
  simulate->add_option("--b", sb, "Singular values of B");
  simulate->add_option("--law", law_name, "gaussian or rademacher");
  simulate->add_option("--scenario", scenario_name, "Heterogeneity scenario a, b or c");
  simulate->add_option("--directions", dirs_name, "random or standard_basis");
  simulate->add_flag("--save-matrices", save_matrices, "Also write x.csv and y.csv");
  add_common(simulate, common);

  // test
  Input test_in;
  double alpha = 0.1;
  std::string method_name = "tw";
  std::size_t r0 = 0, r_star = 3;
  std::optional<double> onatski_cv;
  std::string cache_path;
  auto* test = app.add_subcommand("test", "Test for independence (T or T_o)");
  add_input(test, test_in);
  test->add_option("--alpha", alpha, "Nominal level");
  test->add_option("--method", method_name, "tw or onatski");
  test->add_option("--r0", r0, "Null rank");
  test->add_option("--rstar", r_star, "Maximum rank r*");
  test->add_option("--onatski-critical", onatski_cv, "Use this critical value instead of simulating");
  test->add_option("--cache", cache_path, "Critical-value cache file (default <out>/onatski_cache.json)");
  add_common(test, common);

  // rank
  Input rank_in;
  std::string rank_method = "both";
  std::optional<double> omega1, omega_o;
  std::size_t rank_rstar = 10;
  auto* rank = app.add_subcommand("rank", "Estimate the number of supercritical spikes");
  add_input(rank, rank_in);
  rank->add_option("--method", rank_method, "threshold, ratio or both");
  rank->add_option("--omega1", omega1, "Threshold (default n^{-1/2})");
  rank->add_option("--omega-o", omega_o, "Ratio threshold (default min(p,q)^{1/2})");
  rank->add_option("--rstar", rank_rstar, "Maximum rank r*");
  add_common(rank, common);

  // estimate
  Input est_in;
  std::size_t k = 1;
  auto* estimate = app.add_subcommand("estimate", "Estimate the top population CCCs");
  add_input(estimate, est_in);
  estimate->add_option("--k", k, "Number of leading values");
  add_common(estimate, common);

  // reproduce
  std::string target;
  std::string profile = "quick";
  auto* reproduce = app.add_subcommand("reproduce", "Run a table or figure preset");
  reproduce->add_option("target", target, "table1, table2, table3, fig-hist, fig-power, fig-ccc")
      ->required()
      ->check(CLI::IsMember(scca::reproduce_targets()));
  reproduce->add_option("--profile", profile, "paper, quick or smoke")
      ->check(CLI::IsMember(scca::profiles()));
  reproduce->add_option("--onatski-critical", onatski_cv, "Use this T_o critical value");
  reproduce->add_flag("--progress", "Report progress on stderr");
  add_common(reproduce, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--seed") > 0) common.seed_given = true;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    if (theory->parsed()) {
      const json out = theory_json(c1, c2, ts);
      std::cout << out.dump(2) << '\n';
      write_manifest(common, "theory", {{"c1", c1}, {"c2", c2}, {"t", ts}}, seconds_since(start));
      return 0;
    }

    if (simulate->parsed()) {
      scca::ModelSpec spec;
      if (!sim_spec.empty()) {
        spec = read_spec(sim_spec);
      } else {
        if (sa.size() != sb.size()) throw scca::ValidationError("--a and --b need equal lengths");
        spec.p = sp;
        spec.q = sq;
        spec.n = sn;
        spec.r = sa.size();
        const auto kind = scca::entry_kind_from_string(law_name);
        spec.entry_law = kind == scca::EntryKind::rademacher ? scca::EntryLaw::rademacher()
                                                             : scca::EntryLaw::gaussian();
        if (spec.r == 0) {
          spec.loadings = scca::FactorLoadings::zero(static_cast<Eigen::Index>(sp),
                                                     static_cast<Eigen::Index>(sq), 0);
        } else if (dirs_name == "standard_basis") {
          spec.loadings = scca::standard_basis_loadings(sp, sq, sa, sb);
        } else if (dirs_name == "random") {
          spec.loadings = scca::random_unit_loadings(sp, sq, spec.r, sa, sb, true,
                                                     scca::derive_seed(common.seed, {101}));
        } else {
          throw scca::ValidationError("unknown directions '" + dirs_name + "'");
        }
        scca::ScenarioSpec sc{spec, scca::scenario_from_string(scenario_name)};
        spec = sc.resolve();
        spec.seed = common.seed;
      }
      const std::uint64_t seed = common.seed_given || sim_spec.empty() ? common.seed : spec.seed;
      const scca::DataSet data = scca::sample_dataset(spec, seed);
      const scca::SccSpectrum s = scca::scc_spectrum(data.x_tilde(), data.y_tilde());
      fs::create_directories(common.out_dir);
      const fs::path dir(common.out_dir);
      json out{{"spec", spec}, {"seed", seed}, {"population_ccc", scca::population_ccc(spec.loadings)},
               {"spectrum", spectrum_json(s)}};
      write_json_file(dir / "simulation.json", out);
      if (save_matrices) {
        scca::write_matrix_csv_file((dir / "x.csv").string(), data.x_tilde());
        scca::write_matrix_csv_file((dir / "y.csv").string(), data.y_tilde());
      }
      std::string text = "lambda_1.." + std::to_string(std::min<std::size_t>(5, s.size())) + ":";
      for (std::size_t i = 1; i <= std::min<std::size_t>(5, s.size()); ++i) {
        text += " " + std::to_string(s.at(i));
      }
      emit(common, out, text + "\nwritten to " + dir.string() + "\n");
      write_manifest(common, "simulate", {{"spec", spec}, {"seed", seed}}, seconds_since(start));
      return 0;
    }

    if (test->parsed()) {
      const Loaded in = load_input(test_in, common);
      const scca::SccSpectrum s = scca::scc_spectrum(in.x, in.y);
      const auto ctx = scca::TheoryContext::from_dimensions(s.p, s.q, s.n);
      scca::TestSettings settings;
      settings.alpha = alpha;
      settings.method = scca::test_method_from_string(method_name);
      settings.r0 = r0;
      settings.r_star = r_star;
      settings.onatski_critical_value = onatski_cv;
      settings.onatski_cache =
          cache_path.empty() ? (fs::path(common.out_dir) / "onatski_cache.json").string() : cache_path;
      fs::create_directories(common.out_dir);
      const scca::TestOutcome o = scca::test_independence(s, ctx, s.n, settings);
      const json out{{"statistic", o.statistic},     {"critical_value", o.critical_value},
                     {"alpha", o.alpha},             {"reject", o.reject},
                     {"method", scca::to_string(o.method)}, {"r0", o.r0},
                     {"r_star", o.r_star},           {"input", in.source}};
      write_json_file(fs::path(common.out_dir) / "test.json", out);
      emit(common, out,
           scca::to_string(o.method) + " statistic " + std::to_string(o.statistic) + ", critical " +
               std::to_string(o.critical_value) + ": " + (o.reject ? "reject" : "do not reject") +
               " H0 at alpha " + std::to_string(o.alpha) + "\n");
      write_manifest(common, "test",
                     {{"input", in.source}, {"alpha", alpha}, {"method", method_name}, {"r0", r0},
                      {"r_star", r_star}},
                     seconds_since(start));
      return 0;
    }

    if (rank->parsed()) {
      const Loaded in = load_input(rank_in, common);
      const scca::SccSpectrum s = scca::scc_spectrum(in.x, in.y);
      const auto ctx = scca::TheoryContext::from_dimensions(s.p, s.q, s.n);
      json out{{"input", in.source}};
      std::string text;
      if (rank_method == "threshold" || rank_method == "both") {
        const auto e = scca::estimate_rank_threshold(s, ctx, omega1.value_or(scca::default_omega1(s.n)));
        out["threshold"] = {{"r_hat", e.r_hat}, {"omega", e.threshold_used}};
        text += "threshold estimate: " + std::to_string(e.r_hat) + "\n";
      }
      if (rank_method == "ratio" || rank_method == "both") {
        const auto e = scca::estimate_rank_ratio(
            s, omega_o.value_or(scca::default_omega_o(std::min(s.p, s.q))), rank_rstar);
        out["ratio"] = {{"r_hat", e.r_hat}, {"omega", e.threshold_used}, {"r_star", rank_rstar}};
        text += "ratio estimate: " + std::to_string(e.r_hat) + "\n";
      }
      if (text.empty()) throw scca::ValidationError("--method must be threshold, ratio or both");
      fs::create_directories(common.out_dir);
      write_json_file(fs::path(common.out_dir) / "rank.json", out);
      emit(common, out, text);
      write_manifest(common, "rank", {{"input", in.source}, {"method", rank_method}}, seconds_since(start));
      return 0;
    }

    if (estimate->parsed()) {
      const Loaded in = load_input(est_in, common);
      const scca::SccSpectrum s = scca::scc_spectrum(in.x, in.y);
      const auto ctx = scca::TheoryContext::from_dimensions(s.p, s.q, s.n);
      const auto est = scca::estimate_ccc(s, ctx, k);
      auto arr = json::array();
      std::string text;
      for (std::size_t i = 0; i < est.size(); ++i) {
        arr.push_back({{"index", i + 1}, {"lambda", s.at(i + 1)}, {"t_hat", est[i].t_hat},
                       {"clamped", est[i].clamped}});
        text += "t_hat_" + std::to_string(i + 1) + " = " + std::to_string(est[i].t_hat) +
                (est[i].clamped ? " (inside the bulk, clamped to t_c)" : "") + "\n";
      }
      const json out{{"input", in.source}, {"estimates", arr}};
      fs::create_directories(common.out_dir);
      write_json_file(fs::path(common.out_dir) / "estimate.json", out);
      emit(common, out, text);
      write_manifest(common, "estimate", {{"input", in.source}, {"k", k}}, seconds_since(start));
      return 0;
    }

    if (reproduce->parsed()) {
      scca::ExperimentConfig config = scca::preset(target, profile, common.seed);
      if (onatski_cv) config.onatski_critical_value = onatski_cv;
      scca::RunOptions options;
      options.threads = common.threads;
      options.onatski_cache = (fs::path(common.out_dir) / "onatski_cache.json").string();
      if (reproduce->count("--progress") > 0) {
        options.progress = [](std::size_t done, std::size_t total) {
          if (done == total || done % 50 == 0) std::cerr << "\r" << done << "/" << total << std::flush;
          if (done == total) std::cerr << '\n';
        };
      }
      fs::create_directories(common.out_dir);
      const scca::ExperimentResult result = scca::run_experiment(config, options);
      scca::write_outputs(result, common.out_dir);
      const json summary{{"target", target}, {"profile", profile}, {"aggregates", result.aggregates}};
      emit(common, summary, "wrote " + target + " (" + profile + ") to " + common.out_dir + "\n");
      write_manifest(common, "reproduce " + target, config, result.wall_time_seconds);
      return 0;
    }
  } catch (const scca::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
