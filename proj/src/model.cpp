#include "scca/model.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "scca/errors.hpp"

namespace scca {

namespace {

void check_excess(const char* source, double excess) {
  if (!std::isfinite(excess) || excess < -2.0) {
    throw ValidationError(std::string("fourth-cumulant excess of ") + source +
                          " must be finite and >= -2, got " + std::to_string(excess));
  }
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols,
                                 const char* name) {
  Eigen::MatrixXd m(rows, cols);
  if (j.is_array() && !j.empty() && j.front().is_array()) {
    if (static_cast<Eigen::Index>(j.size()) != rows) {
      throw ValidationError(std::string("loadings.") + name + " has wrong row count");
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto& row = j[static_cast<std::size_t>(i)];
      if (static_cast<Eigen::Index>(row.size()) != cols) {
        throw ValidationError(std::string("loadings.") + name + " has wrong column count");
      }
      for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
    return m;
  }
  if (static_cast<Eigen::Index>(j.size()) != rows * cols) {
    throw ValidationError(std::string("loadings.") + name + " must hold " +
                          std::to_string(rows * cols) + " row-major values");
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) {
      m(i, k) = j[static_cast<std::size_t>(i * cols + k)].get<double>();
    }
  }
  return m;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) out.push_back(m(i, k));
  }
  return out;
}

Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  const Eigen::VectorXd inv_sqrt = es.eigenvalues().array().rsqrt();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

std::string to_string(EntryKind kind) {
  switch (kind) {
    case EntryKind::gaussian:
      return "gaussian";
    case EntryKind::rademacher:
      return "rademacher";
    case EntryKind::custom:
      return "custom-iid";
  }
  return "unknown";
}

EntryKind entry_kind_from_string(const std::string& name) {
  if (name == "gaussian") return EntryKind::gaussian;
  if (name == "rademacher") return EntryKind::rademacher;
  if (name == "custom-iid" || name == "custom") return EntryKind::custom;
  throw ValidationError("unknown entry law kind '" + name + "'");
}

void EntryLaw::validate() const {
  check_excess("x", excess_x);
  check_excess("y", excess_y);
  check_excess("z", excess_z);
  switch (kind) {
    case EntryKind::gaussian:
      if (excess_x != 0.0 || excess_y != 0.0 || excess_z != 0.0) {
        throw ValidationError("gaussian entries have zero fourth-cumulant excess");
      }
      break;
    case EntryKind::rademacher:
      if (excess_x != -2.0 || excess_y != -2.0 || excess_z != -2.0) {
        throw ValidationError("rademacher entries have fourth-cumulant excess -2");
      }
      break;
    case EntryKind::custom:
      break;
  }
}

FactorLoadings FactorLoadings::zero(Eigen::Index p, Eigen::Index q, Eigen::Index r) {
  return {Eigen::MatrixXd::Zero(p, r), Eigen::MatrixXd::Zero(q, r)};
}

void FactorLoadings::validate() const {
  if (a.cols() != b.cols()) {
    throw ValidationError("loadings A and B must have the same number of columns");
  }
  if (!a.allFinite() || !b.allFinite()) {
    throw ValidationError("loadings contain NaN or Inf");
  }
}

void ModelSpec::validate() const {
  if (p == 0 || q == 0 || n == 0) throw ValidationError("p, q and n must be positive");
  if (p + q >= n) {
    throw ValidationError("model requires p + q < n, got p=" + std::to_string(p) +
                          ", q=" + std::to_string(q) + ", n=" + std::to_string(n));
  }
  if (r > std::min(p, q)) throw ValidationError("signal rank r must not exceed min(p, q)");
  loadings.validate();
  if (loadings.p() != static_cast<Eigen::Index>(p) ||
      loadings.q() != static_cast<Eigen::Index>(q) ||
      loadings.r() != static_cast<Eigen::Index>(r)) {
    throw ValidationError("loadings must be p x r and q x r");
  }
  entry_law.validate();
  if (heterogeneity) {
    if (heterogeneity->size() != static_cast<Eigen::Index>(n)) {
      throw ValidationError("heterogeneity must have n entries");
    }
    if (!heterogeneity->allFinite() || (heterogeneity->array() <= 0.0).any()) {
      throw ValidationError("heterogeneity entries must be finite and strictly positive");
    }
  }
}

DataSet::DataSet(Eigen::MatrixXd x_tilde, Eigen::MatrixXd y_tilde, std::uint64_t seed,
                 ModelSpec spec)
    : x_tilde_(std::move(x_tilde)),
      y_tilde_(std::move(y_tilde)),
      seed_(seed),
      spec_(std::move(spec)) {
  if (x_tilde_.rows() != static_cast<Eigen::Index>(spec_.p) ||
      y_tilde_.rows() != static_cast<Eigen::Index>(spec_.q) ||
      x_tilde_.cols() != static_cast<Eigen::Index>(spec_.n) ||
      y_tilde_.cols() != static_cast<Eigen::Index>(spec_.n)) {
    throw DimensionError("data matrices do not match the model dimensions");
  }
}

Eigen::MatrixXd pcc_matrix(const FactorLoadings& loadings) {
  loadings.validate();
  const Eigen::MatrixXd& a = loadings.a;
  const Eigen::MatrixXd& b = loadings.b;
  const Eigen::Index p = a.rows(), q = b.rows();

  Eigen::MatrixXd sxx = Eigen::MatrixXd::Identity(p, p);
  sxx.selfadjointView<Eigen::Lower>().rankUpdate(a);
  Eigen::MatrixXd syy = Eigen::MatrixXd::Identity(q, q);
  syy.selfadjointView<Eigen::Lower>().rankUpdate(b);
  sxx = sxx.selfadjointView<Eigen::Lower>();
  syy = syy.selfadjointView<Eigen::Lower>();

  const Eigen::MatrixXd sxx_isqrt = inverse_sqrt_spd(sxx);
  const Eigen::MatrixXd cross = sxx_isqrt * a * b.transpose();  // p x q
  const Eigen::MatrixXd solved = syy.llt().solve(cross.transpose());  // q x p
  Eigen::MatrixXd pcc = cross * solved;
  return 0.5 * (pcc + pcc.transpose());
}

std::vector<double> population_ccc(const FactorLoadings& loadings) {
  loadings.validate();
  const Eigen::Index r = loadings.r();
  if (r == 0) return {};
  // The nonzero spectrum of the PCC matrix is that of the r x r core
  // diag(a_hat) V_a^T V_b diag(b_hat), a_hat = a / sqrt(1 + a^2).
  Eigen::JacobiSVD<Eigen::MatrixXd> sa(loadings.a, Eigen::ComputeThinV);
  Eigen::JacobiSVD<Eigen::MatrixXd> sb(loadings.b, Eigen::ComputeThinV);
  const auto hat = [](const Eigen::VectorXd& s) -> Eigen::VectorXd {
    return (s.array() / (1.0 + s.array().square()).sqrt()).matrix();
  };
  const Eigen::Index ka = sa.singularValues().size();
  const Eigen::Index kb = sb.singularValues().size();
  const Eigen::MatrixXd core = hat(sa.singularValues()).asDiagonal() *
                               (sa.matrixV().leftCols(ka).transpose() * sb.matrixV().leftCols(kb)) *
                               hat(sb.singularValues()).asDiagonal();
  const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(core).singularValues();
  std::vector<double> t(static_cast<std::size_t>(r), 0.0);
  for (Eigen::Index i = 0; i < std::min(r, s.size()); ++i) {
    t[static_cast<std::size_t>(i)] = std::clamp(s(i) * s(i), 0.0, 1.0);
  }
  return t;
}

Eigen::MatrixXd sample_noise(EntryKind kind, double excess, Eigen::Index rows, Eigen::Index cols,
                             double scale, Engine& engine) {
  Eigen::MatrixXd m(rows, cols);
  double* data = m.data();
  const Eigen::Index size = m.size();
  switch (kind) {
    case EntryKind::gaussian: {
      std::normal_distribution<double> normal(0.0, scale);
      for (Eigen::Index i = 0; i < size; ++i) data[i] = normal(engine);
      break;
    }
    case EntryKind::rademacher: {
      std::uint64_t bits = 0;
      for (Eigen::Index i = 0; i < size; ++i) {
        if (i % 64 == 0) bits = engine();
        data[i] = (bits & 1U) ? scale : -scale;
        bits >>= 1;
      }
      break;
    }
    case EntryKind::custom: {
      const double mu4 = 3.0 + excess;
      const double s = std::sqrt(mu4) * scale;
      const double half = 0.5 / mu4;
      for (Eigen::Index i = 0; i < size; ++i) {
        const double u = uniform01(engine);
        data[i] = u < half ? s : (u < 2.0 * half ? -s : 0.0);
      }
      break;
    }
  }
  return m;
}

DataSet sample_dataset(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  const auto p = static_cast<Eigen::Index>(spec.p);
  const auto q = static_cast<Eigen::Index>(spec.q);
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto r = static_cast<Eigen::Index>(spec.r);
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.n));
  const EntryLaw& law = spec.entry_law;

  Engine ex = make_engine(derive_seed(seed, {1}));
  Engine ey = make_engine(derive_seed(seed, {2}));
  Engine ez = make_engine(derive_seed(seed, {3}));

  Eigen::MatrixXd x = sample_noise(law.kind, law.excess_x, p, n, scale, ex);
  Eigen::MatrixXd y = sample_noise(law.kind, law.excess_y, q, n, scale, ey);
  if (r > 0) {
    const Eigen::MatrixXd z = sample_noise(law.kind, law.excess_z, r, n, scale, ez);
    x.noalias() += spec.loadings.a * z;
    y.noalias() += spec.loadings.b * z;
  }
  if (spec.heterogeneity) {
    x = x * spec.heterogeneity->asDiagonal();
    y = y * spec.heterogeneity->asDiagonal();
  }
  return DataSet(std::move(x), std::move(y), seed, spec);
}

Eigen::MatrixXd haar_orthonormal(Eigen::Index rows, Eigen::Index cols, Engine& engine) {
  if (cols > rows) throw DimensionError("haar_orthonormal needs cols <= rows");
  if (cols == 0) return Eigen::MatrixXd(rows, 0);
  const Eigen::MatrixXd g = standard_normal_matrix(rows, cols, engine);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (qr.matrixQR()(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

FactorLoadings random_unit_loadings(std::size_t p, std::size_t q, std::size_t r,
                                    std::span<const double> a_scales,
                                    std::span<const double> b_scales, bool shared_right,
                                    std::uint64_t seed) {
  if (a_scales.size() != r || b_scales.size() != r) {
    throw ValidationError("scale lists must have length r");
  }
  if (r > std::min(p, q)) throw ValidationError("signal rank r must not exceed min(p, q)");
  Engine engine = make_engine(seed);
  const auto ri = static_cast<Eigen::Index>(r);
  const Eigen::MatrixXd ua = haar_orthonormal(static_cast<Eigen::Index>(p), ri, engine);
  const Eigen::MatrixXd ub = haar_orthonormal(static_cast<Eigen::Index>(q), ri, engine);
  const Eigen::MatrixXd va = haar_orthonormal(ri, ri, engine);
  const Eigen::MatrixXd vb = shared_right ? va : haar_orthonormal(ri, ri, engine);
  const Eigen::Map<const Eigen::VectorXd> a(a_scales.data(), ri);
  const Eigen::Map<const Eigen::VectorXd> b(b_scales.data(), ri);
  FactorLoadings out{ua * a.asDiagonal() * va.transpose(), ub * b.asDiagonal() * vb.transpose()};
  out.validate();
  return out;
}

FactorLoadings standard_basis_loadings(std::size_t p, std::size_t q,
                                       std::span<const double> a_scales,
                                       std::span<const double> b_scales) {
  const std::size_t r = a_scales.size();
  if (b_scales.size() != r) throw ValidationError("scale lists must have equal length");
  if (r > std::min(p, q)) throw ValidationError("signal rank r must not exceed min(p, q)");
  auto out = FactorLoadings::zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q),
                                  static_cast<Eigen::Index>(r));
  for (std::size_t i = 0; i < r; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out.a(k, k) = a_scales[i];
    out.b(k, k) = b_scales[i];
  }
  out.validate();
  return out;
}

void to_json(nlohmann::json& j, const EntryLaw& law) {
  j = nlohmann::json{{"kind", to_string(law.kind)},
                     {"excess_x", law.excess_x},
                     {"excess_y", law.excess_y},
                     {"excess_z", law.excess_z}};
}

void from_json(const nlohmann::json& j, EntryLaw& law) {
  law.kind = entry_kind_from_string(j.at("kind").get<std::string>());
  const double dflt = law.kind == EntryKind::rademacher ? -2.0 : 0.0;
  law.excess_x = j.value("excess_x", dflt);
  law.excess_y = j.value("excess_y", dflt);
  law.excess_z = j.value("excess_z", dflt);
}

void to_json(nlohmann::json& j, const ModelSpec& spec) {
  j = nlohmann::json{{"p", spec.p},
                     {"q", spec.q},
                     {"n", spec.n},
                     {"r", spec.r},
                     {"loadings",
                      {{"a", matrix_to_json(spec.loadings.a)},
                       {"b", matrix_to_json(spec.loadings.b)}}},
                     {"entry_law", spec.entry_law},
                     {"seed", spec.seed}};
  if (spec.heterogeneity) {
    j["heterogeneity"] =
        std::vector<double>(spec.heterogeneity->data(),
                            spec.heterogeneity->data() + spec.heterogeneity->size());
  } else {
    j["heterogeneity"] = nullptr;
  }
}

void from_json(const nlohmann::json& j, ModelSpec& spec) {
  spec.p = j.at("p").get<std::size_t>();
  spec.q = j.at("q").get<std::size_t>();
  spec.n = j.at("n").get<std::size_t>();
  spec.r = j.at("r").get<std::size_t>();
  const auto p = static_cast<Eigen::Index>(spec.p);
  const auto q = static_cast<Eigen::Index>(spec.q);
  const auto r = static_cast<Eigen::Index>(spec.r);
  if (j.contains("loadings") && !j.at("loadings").is_null()) {
    const auto& l = j.at("loadings");
    spec.loadings.a = matrix_from_json(l.at("a"), p, r, "a");
    spec.loadings.b = matrix_from_json(l.at("b"), q, r, "b");
  } else {
    spec.loadings = FactorLoadings::zero(p, q, r);
  }
  spec.entry_law = j.contains("entry_law") ? j.at("entry_law").get<EntryLaw>() : EntryLaw{};
  spec.heterogeneity.reset();
  if (j.contains("heterogeneity") && !j.at("heterogeneity").is_null()) {
    const auto v = j.at("heterogeneity").get<std::vector<double>>();
    spec.heterogeneity = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  spec.seed = j.value("seed", std::uint64_t{0});
}

}  // namespace scca
