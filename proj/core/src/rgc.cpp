#include "rgcinit/rgc.hpp"

#include <cmath>
#include <sstream>

#include "rgcinit/errors.hpp"

namespace rgcinit {

std::string_view to_string(EpsilonMode m) {
  return m == EpsilonMode::kRelative ? "relative" : "absolute";
}

EpsilonMode epsilon_mode_from_string(std::string_view s) {
  if (s == "absolute") return EpsilonMode::kAbsolute;
  if (s == "relative") return EpsilonMode::kRelative;
  throw UsageError("epsilon mode must be 'absolute' or 'relative', got '" + std::string(s) + "'");
}

double effective_epsilon(const ClassStatistics& s, const RgcConfig& cfg) {
  if (!(cfg.epsilon >= 0.0) || !std::isfinite(cfg.epsilon)) {
    throw UsageError("epsilon must be a finite non-negative number");
  }
  if (cfg.mode == EpsilonMode::kAbsolute) return cfg.epsilon;
  return cfg.epsilon * s.pooled_cov.trace() / static_cast<double>(s.dim());
}

LinearClassifier fit_rgc(const ClassStatistics& s, const RgcConfig& cfg) {
  const double eps = effective_epsilon(s, cfg);
  SymmetricMatrix regularized = s.pooled_cov;
  regularized.add_to_diagonal(eps);

  SpdFactorization factor = [&] {
    try {
      return spd_factor(regularized);
    } catch (const NotPositiveDefinite& e) {
      std::ostringstream os;
      os << "covariance + " << eps << " I is not positive definite (pivot " << e.pivot() << ")";
      if (eps == 0.0) os << "; use epsilon > 0";
      throw NotPositiveDefinite(e.pivot(), os.str());
    }
  }();

  // Means as columns: d x K.
  const Matrix w_columns = spd_solve(factor, s.means.transposed());

  LinearClassifier c;
  c.weights = w_columns.transposed();
  c.bias.resize(s.num_classes());
  for (std::size_t k = 0; k < s.num_classes(); ++k) {
    auto w = c.weights.row(k);
    auto mu = s.means.row(k);
    double dot = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) dot += w[j] * mu[j];
    c.bias[k] = -0.5 * dot;
  }
  c.metadata.source = ModelSource::kRgc;
  c.metadata.epsilon = eps;
  c.metadata.notes = s.warnings;
  return c;
}

LinearClassifier fit_ncc(const ClassStatistics& s) {
  LinearClassifier c;
  c.weights = s.means;
  c.bias.resize(s.num_classes());
  for (std::size_t k = 0; k < s.num_classes(); ++k) {
    double sq = 0.0;
    for (double m : s.means.row(k)) sq += m * m;
    c.bias[k] = -0.5 * sq;
  }
  c.metadata.source = ModelSource::kNcc;
  c.metadata.notes = s.warnings;
  return c;
}

LabelVector predict(const LinearClassifier& c, const FeatureMatrix& x) {
  const Matrix logits = compute_logits(c, x);
  LabelVector out;
  out.num_classes = c.num_classes();
  out.labels.resize(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    out.labels[i] = static_cast<std::uint32_t>(argmax_lowest(logits.row(i)));
  }
  return out;
}

}  // namespace rgcinit
