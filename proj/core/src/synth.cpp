#include "rgcinit/synth.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rgcinit/errors.hpp"
#include "rgcinit/random.hpp"

namespace rgcinit {
namespace {

constexpr std::uint64_t kParameterStream = 0;
// Sample stream for (split, class) is kSampleBase * (split + 1) + class.
constexpr std::uint64_t kSampleBase = std::uint64_t{1} << 32;

std::vector<double> log_spaced_spectrum(std::size_t d, double condition_number) {
  std::vector<double> lambda(d, 1.0);
  if (d == 1) return lambda;
  const double span = std::log(condition_number);
  for (std::size_t i = 0; i < d; ++i) {
    lambda[i] = std::exp(-span * static_cast<double>(i) / static_cast<double>(d - 1));
  }
  return lambda;
}

SymmetricMatrix covariance_from(const Matrix& q, const std::vector<double>& lambda) {
  const std::size_t d = q.rows();
  SymmetricMatrix s(d);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      double v = 0.0;
      for (std::size_t i = 0; i < d; ++i) v += q(a, i) * lambda[i] * q(b, i);
      s.set(a, b, v);
    }
  }
  return s;
}

// Q diag(sqrt(lambda)), so x = mu + L z has covariance Q diag(lambda) Q^T.
Matrix sampling_factor(const Matrix& q, const std::vector<double>& lambda) {
  Matrix l = q;
  for (std::size_t a = 0; a < l.rows(); ++a)
    for (std::size_t i = 0; i < l.cols(); ++i) l(a, i) *= std::sqrt(lambda[i]);
  return l;
}

}  // namespace

std::string_view to_string(CovarianceMode m) {
  return m == CovarianceMode::kDistinct ? "distinct" : "shared";
}

CovarianceMode covariance_mode_from_string(std::string_view s) {
  if (s == "shared") return CovarianceMode::kShared;
  if (s == "distinct") return CovarianceMode::kDistinct;
  throw UsageError("covariance mode must be 'shared' or 'distinct', got '" + std::string(s) + "'");
}

void validate_spec(const SynthSpec& spec) {
  if (spec.num_classes < 2) throw UsageError("synthetic data needs at least 2 classes");
  if (spec.dim < 1) throw UsageError("synthetic data needs dim >= 1");
  if (spec.samples_per_class < 2) throw UsageError("synthetic data needs >= 2 samples per class");
  if (!(spec.mean_scale >= 0.0) || !std::isfinite(spec.mean_scale)) {
    throw UsageError("mean_scale must be finite and non-negative");
  }
  if (!(spec.condition_number >= 1.0) || !std::isfinite(spec.condition_number)) {
    throw UsageError("condition_number must be finite and >= 1");
  }
}

Matrix random_orthogonal(std::size_t dim, RandomStream& rng) {
  Matrix g(dim, dim);
  for (double& v : g.data()) v = rng.normal();
  // Modified Gram-Schmidt over columns, applied twice for orthogonality to
  // working precision. Positive R diagonal makes the result Haar distributed.
  Matrix q = g;
  for (std::size_t j = 0; j < dim; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t p = 0; p < j; ++p) {
        double dot = 0.0;
        for (std::size_t r = 0; r < dim; ++r) dot += q(r, p) * q(r, j);
        for (std::size_t r = 0; r < dim; ++r) q(r, j) -= dot * q(r, p);
      }
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < dim; ++r) norm += q(r, j) * q(r, j);
    norm = std::sqrt(norm);
    for (std::size_t r = 0; r < dim; ++r) q(r, j) /= norm;
  }
  return q;
}

SynthData generate(const SynthSpec& spec) {
  validate_spec(spec);
  const std::size_t k = spec.num_classes;
  const std::size_t d = spec.dim;
  const std::size_t n = spec.samples_per_class;

  RandomStream params(spec.seed, kParameterStream);
  SynthData out;
  out.truth.mode = spec.covariance_mode;
  out.truth.means = Matrix(k, d);
  for (double& m : out.truth.means.data()) m = spec.mean_scale * params.normal();

  const auto lambda = log_spaced_spectrum(d, spec.condition_number);
  const std::size_t num_covs = spec.covariance_mode == CovarianceMode::kShared ? 1 : k;
  std::vector<Matrix> factors;
  for (std::size_t c = 0; c < num_covs; ++c) {
    const Matrix q = random_orthogonal(d, params);
    out.truth.covariances.push_back(covariance_from(q, lambda));
    factors.push_back(sampling_factor(q, lambda));
  }

  out.features = FeatureMatrix(k * n, d);
  out.labels.num_classes = k;
  out.labels.labels.resize(k * n);
  std::vector<double> z(d);
  for (std::size_t c = 0; c < k; ++c) {
    RandomStream samples(spec.seed, kSampleBase * (std::uint64_t{spec.split} + 1) + c);
    const Matrix& l = factors[num_covs == 1 ? 0 : c];
    auto mu = out.truth.means.row(c);
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t i = c * n + s;
      for (double& v : z) v = samples.normal();
      auto xi = out.features.row(i);
      for (std::size_t a = 0; a < d; ++a) {
        double v = mu[a];
        auto la = l.row(a);
        for (std::size_t b = 0; b < d; ++b) v += la[b] * z[b];
        xi[a] = v;
      }
      out.labels.labels[i] = static_cast<std::uint32_t>(c);
    }
  }
  return out;
}

LinearClassifier bayes_classifier(const SynthTruth& truth) {
  if (truth.mode != CovarianceMode::kShared || truth.covariances.size() != 1) {
    throw ValidationError("the Bayes rule is linear only for a shared covariance");
  }
  const SpdFactorization f = spd_factor(truth.covariances.front());
  LinearClassifier c;
  c.weights = spd_solve(f, truth.means.transposed()).transposed();
  c.bias.resize(truth.means.rows());
  for (std::size_t k = 0; k < truth.means.rows(); ++k) {
    double dot = 0.0;
    auto w = c.weights.row(k);
    auto mu = truth.means.row(k);
    for (std::size_t j = 0; j < w.size(); ++j) dot += w[j] * mu[j];
    c.bias[k] = -0.5 * dot;
  }
  c.metadata.source = ModelSource::kBayes;
  return c;
}

std::string truth_to_text(const SynthTruth& truth, const SynthSpec& spec) {
  using nlohmann::json;
  json doc;
  doc["format_version"] = 1;
  doc["kind"] = "synth-truth";
  doc["num_classes"] = truth.means.rows();
  doc["dim"] = truth.means.cols();
  doc["covariance_mode"] = std::string(to_string(truth.mode));
  json means = json::array();
  for (std::size_t k = 0; k < truth.means.rows(); ++k) {
    auto r = truth.means.row(k);
    means.push_back(std::vector<double>(r.begin(), r.end()));
  }
  doc["means"] = std::move(means);
  json covs = json::array();
  for (const auto& s : truth.covariances) {
    json rows = json::array();
    for (std::size_t a = 0; a < s.dim(); ++a) {
      auto r = s.dense().row(a);
      rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    covs.push_back(std::move(rows));
  }
  doc["covariances"] = std::move(covs);
  doc["spec"] = {{"num_classes", spec.num_classes},
                 {"dim", spec.dim},
                 {"samples_per_class", spec.samples_per_class},
                 {"seed", spec.seed},
                 {"mean_scale", spec.mean_scale},
                 {"covariance_mode", std::string(to_string(spec.covariance_mode))},
                 {"condition_number", spec.condition_number},
                 {"split", spec.split}};
  return doc.dump(2) + "\n";
}

SynthTruth truth_from_text(std::string_view text, const std::string& origin) {
  using nlohmann::json;
  try {
    const json doc = json::parse(text);
    if (doc.at("kind").get<std::string>() != "synth-truth") {
      throw FormatError(origin + ": not a synth-truth document");
    }
    SynthTruth t;
    const auto k = doc.at("num_classes").get<std::size_t>();
    const auto d = doc.at("dim").get<std::size_t>();
    t.mode = covariance_mode_from_string(doc.at("covariance_mode").get<std::string>());
    const json& means = doc.at("means");
    if (means.size() != k) throw ValidationError(origin + ": means row count differs from num_classes");
    t.means = Matrix(k, d);
    for (std::size_t r = 0; r < k; ++r) {
      const auto row = means[r].get<std::vector<double>>();
      if (row.size() != d) throw ValidationError(origin + ": means row length differs from dim");
      std::copy(row.begin(), row.end(), t.means.row(r).begin());
    }
    const json& covs = doc.at("covariances");
    const std::size_t expected = t.mode == CovarianceMode::kShared ? 1 : k;
    if (covs.size() != expected) throw ValidationError(origin + ": wrong number of covariances");
    for (const auto& jc : covs) {
      if (jc.size() != d) throw ValidationError(origin + ": covariance has wrong row count");
      Matrix m(d, d);
      for (std::size_t a = 0; a < d; ++a) {
        const auto row = jc[a].get<std::vector<double>>();
        if (row.size() != d) throw ValidationError(origin + ": covariance row has wrong length");
        std::copy(row.begin(), row.end(), m.row(a).begin());
      }
      t.covariances.push_back(SymmetricMatrix::from_lower(m));
    }
    return t;
  } catch (const json::exception& e) {
    throw FormatError(origin + ": malformed truth document: " + e.what());
  } catch (const UsageError& e) {
    throw FormatError(origin + ": " + e.what());
  }
}

void write_truth(const SynthTruth& truth, const SynthSpec& spec, const std::filesystem::path& path) {
  write_text_file(path, truth_to_text(truth, spec));
}

SynthTruth read_truth(const std::filesystem::path& path) {
  return truth_from_text(read_text_file(path), path.string());
}

}  // namespace rgcinit
