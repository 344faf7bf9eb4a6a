#include "scca/limits.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <utility>

#include <nlohmann/json.hpp>

#include "scca/errors.hpp"
#include "scca/stats.hpp"

namespace scca {

namespace {

constexpr double kSingularShift = 1e-14;
constexpr double kPsdSlack = 1e-10;

struct TwEntry {
  double alpha;
  double quantile;
};

// alpha = 0.9 is the customary 0.45. The other entries come from tools/tw_oracle:
// n^{2/3}(lambda_1 - 2) for the n = 2000 tridiagonal GOE, 1e4 replications,
// seed 7101.
constexpr TwEntry kTwTable[] = {
    {0.50, -1.2857},
    {0.80, -0.1997},
    {0.90, 0.45},
    {0.95, 0.9486},
    {0.99, 1.9743},
};

std::size_t find_position(const SpikeGroup& g, std::size_t i) {
  const auto it = std::find(g.members.begin(), g.members.end(), i);
  if (it == g.members.end()) {
    throw DomainError("index " + std::to_string(i) + " is not a member of the spike group");
  }
  return static_cast<std::size_t>(it - g.members.begin());
}

Eigen::VectorXd shifted_hat(const Eigen::VectorXd& s) {
  const Eigen::ArrayXd v = s.array() + kSingularShift;
  return (v / (1.0 + v.square()).sqrt()).matrix();
}

// Number of eigenvalues of the tridiagonal matrix strictly below x.
std::size_t sturm_count(const Eigen::VectorXd& diag, const Eigen::VectorXd& off2, double x,
                        double pivmin) {
  std::size_t count = 0;
  double d = diag(0) - x;
  if (std::abs(d) < pivmin) d = -pivmin;
  if (d < 0.0) ++count;
  for (Eigen::Index i = 1; i < diag.size(); ++i) {
    d = diag(i) - x - off2(i - 1) / d;
    if (std::abs(d) < pivmin) d = -pivmin;
    if (d < 0.0) ++count;
  }
  return count;
}

std::string cache_key(std::size_t k, const OnatskiSimulation& sim) {
  std::string key = to_string(sim.mode) + "|p=" + std::to_string(sim.dim_p);
  if (sim.mode == ReferenceMode::wishart) key += "|n=" + std::to_string(sim.dim_n);
  return key + "|k=" + std::to_string(k) + "|reps=" + std::to_string(sim.reps) +
         "|seed=" + std::to_string(sim.seed);
}

}  // namespace

double SpikeGroup::t_anchor() const {
  const std::size_t pos = find_position(*this, anchor);
  return t_values[pos];
}

bool SpikeGroup::contains(std::size_t i) const {
  return std::find(members.begin(), members.end(), i) != members.end();
}

std::vector<SpikeGroup> spike_groups(const std::vector<double>& t_values, const TheoryContext& ctx,
                                     std::size_t n, double delta, double delta_l) {
  if (n == 0) throw ValidationError("sample count must be positive");
  for (std::size_t i = 1; i < t_values.size(); ++i) {
    if (t_values[i] > t_values[i - 1]) throw ValidationError("t values must be descending");
  }
  const double tc = threshold_tc(ctx);
  const double radius = std::pow(static_cast<double>(n), -0.5 + delta);

  // With descending t, components of the closeness relation are runs of
  // consecutive supercritical indices whose neighbouring gaps are within radius.
  std::vector<SpikeGroup> groups;
  std::size_t i = 0;
  while (i < t_values.size() && t_values[i] > tc) {
    SpikeGroup g;
    std::size_t j = i;
    do {
      g.members.push_back(j);
      g.t_values.push_back(t_values[j]);
      ++j;
    } while (j < t_values.size() && t_values[j] > tc &&
             t_values[j - 1] - t_values[j] <= radius);
    bool admissible = false;
    for (std::size_t m = 0; m < g.members.size(); ++m) {
      if (g.t_values[m] >= tc + delta_l && g.t_values[m] <= 1.0 - delta_l) {
        g.anchor = g.members[m];
        admissible = true;
        break;
      }
    }
    if (admissible) groups.push_back(std::move(g));
    i = j;
  }
  return groups;
}

double ReferenceFrame::w(std::size_t k, std::size_t i, std::size_t j, double t_l) const {
  const auto K = static_cast<Eigen::Index>(k);
  const auto I = static_cast<Eigen::Index>(i);
  const auto J = static_cast<Eigen::Index>(j);
  const double st = std::sqrt(t_l);
  return t_l * va_hat(K, I) * va_hat(K, J) + t_l * vb_hat(K, I) * vb_hat(K, J) -
         st * va_hat(K, I) * vb_hat(K, J) - st * vb_hat(K, I) * va_hat(K, J);
}

std::vector<Eigen::MatrixXd> ReferenceFrame::w_tensor(double t_l) const {
  const std::size_t rr = r();
  std::vector<Eigen::MatrixXd> out(rr, Eigen::MatrixXd(rr, rr));
  for (std::size_t k = 0; k < rr; ++k) {
    for (std::size_t i = 0; i < rr; ++i) {
      for (std::size_t j = 0; j < rr; ++j) {
        out[k](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w(k, i, j, t_l);
      }
    }
  }
  return out;
}

ReferenceFrame reference_frame(const FactorLoadings& loadings) {
  loadings.validate();
  const Eigen::Index r = loadings.r();
  if (r == 0) throw DimensionError("reference_frame needs r >= 1");
  if (loadings.p() < r || loadings.q() < r) {
    throw DimensionError("reference_frame needs r <= min(p, q)");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_a(loadings.a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_b(loadings.b, Eigen::ComputeThinU | Eigen::ComputeThinV);

  ReferenceFrame f;
  const Eigen::VectorXd sa = svd_a.singularValues();
  const Eigen::VectorXd sb = svd_b.singularValues();
  f.sigma_hat_a = shifted_hat(sa);
  f.sigma_hat_b = shifted_hat(sb);
  const Eigen::MatrixXd& va = svd_a.matrixV();
  const Eigen::MatrixXd& vb = svd_b.matrixV();
  f.m_r = va.transpose() * vb;

  const Eigen::MatrixXd core = f.sigma_hat_a.asDiagonal() * f.m_r * f.sigma_hat_b.asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_core(core, Eigen::ComputeFullU | Eigen::ComputeFullV);
  f.o = svd_core.matrixU();
  f.o_tilde = svd_core.matrixV();
  f.sqrt_t = svd_core.singularValues();

  const Eigen::VectorXd ia = (1.0 + sa.array().square()).rsqrt().matrix();
  const Eigen::VectorXd ib = (1.0 + sb.array().square()).rsqrt().matrix();
  f.u_cal = svd_a.matrixU() * ia.asDiagonal() * f.o;
  f.v_cal = svd_b.matrixU() * ib.asDiagonal() * f.o_tilde;
  f.va_hat = va * f.sigma_hat_a.asDiagonal() * f.o;
  f.vb_hat = vb * f.sigma_hat_b.asDiagonal() * f.o_tilde;
  return f;
}

double covariance_c(const ReferenceFrame& frame, const SpikeGroup& group, const TheoryContext& ctx,
                    const EntryLaw& law, std::size_t i, std::size_t j, std::size_t i2,
                    std::size_t j2, const CovarianceOptions& options) {
  for (std::size_t idx : {i, j, i2, j2}) {
    if (!group.contains(idx)) {
      throw DomainError("index " + std::to_string(idx) + " is not a member of the spike group");
    }
    if (idx >= frame.r()) throw DimensionError("index exceeds the frame rank");
  }
  const double t = group.t_anchor();
  const double tc = threshold_tc(ctx);
  if (!(t > tc)) {
    throw DomainError("covariance requires t_l > t_c (t_l = " + std::to_string(t) +
                      ", t_c = " + std::to_string(tc) + ")");
  }
  const double c1 = ctx.c1(), c2 = ctx.c2();
  const double kron = static_cast<double>((i == i2 && j == j2) + (i == j2 && j == i2));
  double c = (1.0 - t) * (1.0 - t) * t * t / (t * t - tc * tc) *
             (2.0 * t + c1 / (1.0 - c1) + c2 / (1.0 - c2)) * kron;

  const auto I = static_cast<Eigen::Index>(i), J = static_cast<Eigen::Index>(j);
  const auto I2 = static_cast<Eigen::Index>(i2), J2 = static_cast<Eigen::Index>(j2);
  if (options.include_uv_terms) {
    const auto four = [&](const Eigen::MatrixXd& m) {
      return (m.col(I).array() * m.col(I2).array() * m.col(J).array() * m.col(J2).array()).sum();
    };
    if (law.excess_x != 0.0) c += t * t * law.excess_x * four(frame.u_cal);
    if (law.excess_y != 0.0) {
      c += (options.t2_on_v_term ? t * t : 1.0) * law.excess_y * four(frame.v_cal);
    }
  }
  if (law.excess_z != 0.0) {
    double s = 0.0;
    for (std::size_t k = 0; k < frame.r(); ++k) s += frame.w(k, i, j, t) * frame.w(k, i2, j2, t);
    c += law.excess_z * s;
  }
  return c;
}

std::size_t SpikeLimitLaw::pair_index(std::size_t a, std::size_t b) const {
  if (a > b) std::swap(a, b);
  const std::size_t m = dim();
  if (b >= m) throw DimensionError("pair index out of range");
  // rows 0..a-1 contribute m, m-1, ..., m-a+1 pairs
  return a * m - a * (a - 1) / 2 + (b - a);
}

SpikeLimitLaw make_spike_limit_law(SpikeGroup group, double a_of_t, Eigen::VectorXd drift,
                                   Eigen::MatrixXd covariance) {
  const std::size_t m = group.members.size();
  const auto np = static_cast<Eigen::Index>(m * (m + 1) / 2);
  if (m == 0) throw ValidationError("spike group is empty");
  if (drift.size() != static_cast<Eigen::Index>(m) || covariance.rows() != np ||
      covariance.cols() != np) {
    throw DimensionError("spike law drift or covariance has the wrong size");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (covariance + covariance.transpose()));
  Eigen::VectorXd ev = es.eigenvalues();
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    if (ev(k) < -kPsdSlack) {
      throw NumericalError("spike covariance is not positive semidefinite (eigenvalue " +
                           std::to_string(ev(k)) + ")");
    }
    ev(k) = std::max(ev(k), 0.0);
  }
  SpikeLimitLaw law;
  law.group = std::move(group);
  law.a_of_t = a_of_t;
  law.drift = std::move(drift);
  law.covariance = std::move(covariance);
  law.factor = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
  return law;
}

SpikeLimitLaw spike_limit_law(const ReferenceFrame& frame, const SpikeGroup& group,
                              const TheoryContext& ctx, std::size_t n, const EntryLaw& law,
                              const CovarianceOptions& options) {
  const std::size_t m = group.members.size();
  const double t_l = group.t_anchor();
  Eigen::VectorXd drift(static_cast<Eigen::Index>(m));
  for (std::size_t a = 0; a < m; ++a) {
    drift(static_cast<Eigen::Index>(a)) = std::sqrt(static_cast<double>(n)) * (group.t_values[a] - t_l);
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a; b < m; ++b) pairs.emplace_back(group.members[a], group.members[b]);
  }
  const auto np = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd cov(np, np);
  for (Eigen::Index u = 0; u < np; ++u) {
    for (Eigen::Index v = u; v < np; ++v) {
      const auto [i, j] = pairs[static_cast<std::size_t>(u)];
      const auto [i2, j2] = pairs[static_cast<std::size_t>(v)];
      cov(u, v) = cov(v, u) = covariance_c(frame, group, ctx, law, i, j, i2, j2, options);
    }
  }
  return make_spike_limit_law(group, outlier_slope(ctx, t_l), std::move(drift), std::move(cov));
}

std::vector<double> sample_spike_eigs(const SpikeLimitLaw& law, Engine& engine) {
  const auto m = static_cast<Eigen::Index>(law.dim());
  const Eigen::VectorXd g = standard_normal_matrix(law.factor.cols(), 1, engine);
  const Eigen::VectorXd v = law.factor * g;
  Eigen::MatrixXd mat = law.drift.asDiagonal();
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a; b < m; ++b) {
      const double x = v(static_cast<Eigen::Index>(
          law.pair_index(static_cast<std::size_t>(a), static_cast<std::size_t>(b))));
      mat(a, b) += x;
      if (b != a) mat(b, a) += x;
    }
  }
  mat *= law.a_of_t;
  std::vector<double> out(static_cast<std::size_t>(m));
  if (m == 1) {
    out[0] = mat(0, 0);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat, Eigen::EigenvaluesOnly);
  for (Eigen::Index k = 0; k < m; ++k) out[static_cast<std::size_t>(k)] = es.eigenvalues()(m - 1 - k);
  return out;
}

std::vector<double> sample_spike_eigs(const SpikeLimitLaw& law, std::uint64_t seed) {
  Engine engine = make_engine(seed);
  return sample_spike_eigs(law, engine);
}

ZzFluctuationLaw::ZzFluctuationLaw(std::size_t r, double mu4) : r_(r), mu4_(mu4) {
  if (r == 0) throw ValidationError("zz_fluctuation_law needs r >= 1");
  if (!(mu4 >= 1.0) || !std::isfinite(mu4)) {
    throw ValidationError("fourth moment must be >= 1, got " + std::to_string(mu4));
  }
}

Eigen::MatrixXd ZzFluctuationLaw::sample(Engine& engine) const {
  const auto r = static_cast<Eigen::Index>(r_);
  std::normal_distribution<double> normal;
  const double sd_diag = std::sqrt(mu4_ - 1.0);
  Eigen::MatrixXd m(r, r);
  for (Eigen::Index j = 0; j < r; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double g = normal(engine);
      m(i, j) = m(j, i) = (i == j) ? sd_diag * g : g;
    }
  }
  return m;
}

ZzFluctuationLaw zz_fluctuation_law(std::size_t r, double mu4) { return {r, mu4}; }

double tw1_quantile(double alpha) {
  for (const auto& e : kTwTable) {
    if (std::abs(e.alpha - alpha) < 1e-12) return e.quantile;
  }
  throw DomainError("no tabulated Tracy-Widom quantile at alpha = " + std::to_string(alpha) +
                    " (grid: 0.5, 0.8, 0.9, 0.95, 0.99)");
}

std::vector<double> tw1_alpha_grid() {
  std::vector<double> out;
  for (const auto& e : kTwTable) out.push_back(e.alpha);
  return out;
}

std::vector<double> tridiagonal_top_eigenvalues(const Eigen::VectorXd& diag,
                                                const Eigen::VectorXd& off, std::size_t k) {
  const Eigen::Index n = diag.size();
  if (n == 0 || off.size() != n - 1) throw DimensionError("tridiagonal shape mismatch");
  if (k > static_cast<std::size_t>(n)) throw DimensionError("k exceeds the matrix size");

  const Eigen::VectorXd off2 = off.array().square().matrix();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Eigen::Index i = 0; i < n; ++i) {
    double radius = 0.0;
    if (i > 0) radius += std::abs(off(i - 1));
    if (i + 1 < n) radius += std::abs(off(i));
    lo = std::min(lo, diag(i) - radius);
    hi = std::max(hi, diag(i) + radius);
  }
  const double scale = std::max({std::abs(lo), std::abs(hi), std::numeric_limits<double>::min()});
  const double pivmin = std::numeric_limits<double>::min() *
                        std::max(1.0, n > 1 ? off2.maxCoeff() : 1.0);
  const double tol = 4.0 * std::numeric_limits<double>::epsilon() * scale;

  std::vector<double> out;
  out.reserve(k);
  double upper = hi;
  for (std::size_t j = 1; j <= k; ++j) {
    // j-th largest is the (n - j + 1)-th smallest
    const auto need = static_cast<std::size_t>(n) - j + 1;
    double a = lo, b = upper;
    for (int it = 0; it < 200 && b - a > tol; ++it) {
      const double mid = 0.5 * (a + b);
      if (sturm_count(diag, off2, mid, pivmin) >= need) {
        b = mid;
      } else {
        a = mid;
      }
    }
    const double lam = 0.5 * (a + b);
    out.push_back(lam);
    upper = std::min(hi, b + tol);
  }
  return out;
}

std::vector<double> sample_goe_top(std::size_t dim, std::size_t k, Engine& engine) {
  if (dim == 0) throw ValidationError("GOE dimension must be positive");
  const auto n = static_cast<Eigen::Index>(dim);
  const double s = 1.0 / std::sqrt(static_cast<double>(dim));
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0));
  Eigen::VectorXd d(n), e(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = s * normal(engine);
  for (Eigen::Index i = 0; i + 1 < n; ++i) e(i) = s * chi(static_cast<double>(n - 1 - i), engine);
  return tridiagonal_top_eigenvalues(d, e, k);
}

std::vector<double> sample_wishart_top(std::size_t p, std::size_t n, std::size_t k,
                                       Engine& engine) {
  if (p == 0 || n < p) throw ValidationError("Wishart model needs 0 < p <= n");
  const auto pp = static_cast<Eigen::Index>(p);
  Eigen::VectorXd dd(pp), ee(pp - 1);
  for (Eigen::Index i = 0; i < pp; ++i) dd(i) = chi(static_cast<double>(n) - static_cast<double>(i), engine);
  for (Eigen::Index i = 0; i + 1 < pp; ++i) ee(i) = chi(static_cast<double>(pp - 1 - i), engine);
  // T = B B^T for lower-bidiagonal B with diagonal dd and subdiagonal ee
  Eigen::VectorXd diag(pp), off(pp - 1);
  for (Eigen::Index i = 0; i < pp; ++i) diag(i) = dd(i) * dd(i) + (i > 0 ? ee(i - 1) * ee(i - 1) : 0.0);
  for (Eigen::Index i = 0; i + 1 < pp; ++i) off(i) = ee(i) * dd(i);
  return tridiagonal_top_eigenvalues(diag, off, k);
}

std::string to_string(ReferenceMode mode) {
  return mode == ReferenceMode::goe ? "goe" : "wishart";
}

ReferenceMode reference_mode_from_string(const std::string& name) {
  if (name == "goe") return ReferenceMode::goe;
  if (name == "wishart") return ReferenceMode::wishart;
  throw ValidationError("unknown reference mode '" + name + "' (expected goe or wishart)");
}

double onatski_ratio(const std::vector<double>& top, std::size_t k) {
  if (top.size() < k + 2) throw DimensionError("Onatski ratio needs k + 2 eigenvalues");
  const double den = top[k] - top[k + 1];
  if (!(den > 0.0)) throw NumericalError("Onatski ratio denominator gap is zero");
  return (top[0] - top[1]) / den;
}

std::vector<double> onatski_samples(std::size_t k, const OnatskiSimulation& sim) {
  if (k == 0) throw ValidationError("Onatski ratio needs r_star > r0");
  const std::size_t need = k + 2;
  if (sim.dim_p < need) throw DimensionError("reference dimension too small for k + 2 eigenvalues");
  std::vector<double> out(sim.reps);
  for (std::size_t rep = 0; rep < sim.reps; ++rep) {
    Engine engine = make_engine(derive_seed(sim.seed, {rep}));
    const auto top = sim.mode == ReferenceMode::goe
                         ? sample_goe_top(sim.dim_p, need, engine)
                         : sample_wishart_top(sim.dim_p, sim.dim_n, need, engine);
    out[rep] = onatski_ratio(top, k);
  }
  return out;
}

double onatski_critical(std::size_t r_star, std::size_t r0, double alpha,
                        const OnatskiSimulation& sim,
                        const std::optional<std::string>& cache_path) {
  if (r_star <= r0) throw ValidationError("onatski_critical needs r_star > r0");
  if (sim.reps < 100) throw ValidationError("onatski_critical needs at least 100 replications");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
  const std::size_t k = r_star - r0;

  std::vector<double> samples;
  nlohmann::json cache = nlohmann::json::object();
  const std::string key = cache_key(k, sim);
  if (cache_path && std::filesystem::exists(*cache_path)) {
    std::ifstream in(*cache_path);
    try {
      cache = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception&) {
      cache = nlohmann::json::object();
    }
    if (cache.contains(key)) samples = cache[key].get<std::vector<double>>();
  }
  if (samples.size() != sim.reps) {
    samples = onatski_samples(k, sim);
    if (cache_path) {
      cache[key] = samples;
      const std::filesystem::path path(*cache_path);
      if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
      std::ofstream out(path);
      out << cache.dump();
    }
  }
  return quantile(std::move(samples), 1.0 - alpha);
}

double rank_one_outlier_variance(const TheoryContext& ctx, double a, double b, const EntryLaw& law,
                                 bool delocalized) {
  const FactorLoadings loadings{Eigen::MatrixXd::Constant(1, 1, a),
                                Eigen::MatrixXd::Constant(1, 1, b)};
  const double t = population_ccc(loadings).front();
  const SpikeGroup group{0, {0}, {t}};
  const ReferenceFrame frame = reference_frame(loadings);
  CovarianceOptions options;
  options.include_uv_terms = !delocalized;
  const double slope = outlier_slope(ctx, t);
  return slope * slope * covariance_c(frame, group, ctx, law, 0, 0, 0, 0, options);
}

}  // namespace scca
