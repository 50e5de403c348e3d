#pragma once

// Regularized Gaussian classifier: the maximum-likelihood linear rule for
// Gaussian classes with a shared covariance and uniform priors,
//   w_k = (Sigma + eps I)^{-1} mu_k,   b_k = -1/2 w_k^T mu_k,
// computed with one Cholesky factorization and K right-hand sides.

#include "rgcinit/class_stats.hpp"
#include "rgcinit/model.hpp"
#include "rgcinit/tensor_store.hpp"

namespace rgcinit {

enum class EpsilonMode {
  kAbsolute,  // eps_eff = epsilon
  kRelative,  // eps_eff = epsilon * trace(Sigma) / d
};

std::string_view to_string(EpsilonMode m);
EpsilonMode epsilon_mode_from_string(std::string_view s);

struct RgcConfig {
  double epsilon = 0.1;
  EpsilonMode mode = EpsilonMode::kAbsolute;
};

double effective_epsilon(const ClassStatistics& s, const RgcConfig& cfg);

/// Throws UsageError for a negative epsilon and NotPositiveDefinite when
/// Sigma + eps_eff I cannot be factored.
LinearClassifier fit_rgc(const ClassStatistics& s, const RgcConfig& cfg = {});

/// Nearest-centroid rule w_k = mu_k, b_k = -1/2 |mu_k|^2.
LinearClassifier fit_ncc(const ClassStatistics& s);

/// Per-row argmax of the scores, ties to the lowest class index.
LabelVector predict(const LinearClassifier& c, const FeatureMatrix& x);

}  // namespace rgcinit
