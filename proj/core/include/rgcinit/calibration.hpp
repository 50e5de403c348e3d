#pragma once

// Affine re-parameterization of a linear head, w_k -> alpha w_k + v and
// b_k -> alpha b_k + beta, chosen so the head's class-averaged weight and
// bias moments match a reference head. Any alpha > 0 keeps every argmax.
//
// Moments are uniform averages over class rows:
//   E(w) = (1/K) sum_k w_k,   Var(w) = (1/K) sum_k |w_k - E(w)|^2.
// With the default rule alpha = sqrt(Var(w_ref) / Var(w_new)) the calibrated
// head has exactly the reference spread. AlphaRule::kAsPrinted uses the
// reciprocal ratio instead; it is kept for comparison only.

#include <optional>
#include <vector>

#include "rgcinit/model.hpp"

namespace rgcinit {

struct WeightMoments {
  std::vector<double> mean_weight;  // E(w), length d
  double mean_bias = 0.0;           // E(b)
  double spread = 0.0;              // Var(w)
};

WeightMoments weight_moments(const LinearClassifier& c);

struct CalibrationParams {
  double alpha = 1.0;
  double beta = 0.0;
  std::vector<double> v;
  AlphaRule rule = AlphaRule::kMatchReferenceSpread;
  std::optional<double> alternate_alpha;
};

/// Heads may have different class counts but must share the feature dim.
/// Throws DegenerateWeights if either head has (numerically) zero spread.
CalibrationParams compute_calibration(const LinearClassifier& fresh,
                                      const LinearClassifier& reference,
                                      AlphaRule rule = AlphaRule::kMatchReferenceSpread);

/// Throws UsageError for alpha <= 0 and ValidationError for a v/dim mismatch.
LinearClassifier apply_calibration(const LinearClassifier& c, const CalibrationParams& p);

}  // namespace rgcinit
