#include "rgcinit/calibration.hpp"

#include <cmath>
#include <sstream>

#include "rgcinit/errors.hpp"

namespace rgcinit {

WeightMoments weight_moments(const LinearClassifier& c) {
  validate_classifier(c);
  const std::size_t k = c.num_classes();
  const std::size_t d = c.dim();
  WeightMoments m;
  m.mean_weight.assign(d, 0.0);
  std::vector<CompensatedSum> acc(d);
  for (std::size_t r = 0; r < k; ++r) {
    auto w = c.weights.row(r);
    for (std::size_t j = 0; j < d; ++j) acc[j].add(w[j]);
  }
  for (std::size_t j = 0; j < d; ++j) m.mean_weight[j] = acc[j].value() / static_cast<double>(k);
  m.mean_bias = stable_sum(c.bias) / static_cast<double>(k);

  CompensatedSum spread;
  for (std::size_t r = 0; r < k; ++r) {
    auto w = c.weights.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = w[j] - m.mean_weight[j];
      spread.add(dev * dev);
    }
  }
  m.spread = spread.value() / static_cast<double>(k);
  return m;
}

namespace {

// A spread this small relative to the second moment means all rows coincide.
void require_spread(const WeightMoments& m, const char* which) {
  double second = m.spread;
  for (double e : m.mean_weight) second += e * e;
  if (!(m.spread > 1e-20 * second)) {
    throw DegenerateWeights(std::string(which) +
                            " weights have zero spread across classes; cannot rescale");
  }
}

}  // namespace

CalibrationParams compute_calibration(const LinearClassifier& fresh,
                                      const LinearClassifier& reference, AlphaRule rule) {
  if (fresh.dim() != reference.dim()) {
    std::ostringstream os;
    os << "model dim " << fresh.dim() << " differs from reference dim " << reference.dim();
    throw ValidationError(os.str());
  }
  const WeightMoments mine = weight_moments(fresh);
  const WeightMoments ref = weight_moments(reference);
  require_spread(mine, "model");
  require_spread(ref, "reference");

  const double matching = std::sqrt(ref.spread / mine.spread);
  const double printed = std::sqrt(mine.spread / ref.spread);

  CalibrationParams p;
  p.rule = rule;
  p.alpha = rule == AlphaRule::kMatchReferenceSpread ? matching : printed;
  p.alternate_alpha = rule == AlphaRule::kMatchReferenceSpread ? printed : matching;
  p.v.resize(fresh.dim());
  for (std::size_t j = 0; j < p.v.size(); ++j) {
    p.v[j] = ref.mean_weight[j] - p.alpha * mine.mean_weight[j];
  }
  p.beta = ref.mean_bias - p.alpha * mine.mean_bias;
  return p;
}

LinearClassifier apply_calibration(const LinearClassifier& c, const CalibrationParams& p) {
  if (!(p.alpha > 0.0) || !std::isfinite(p.alpha)) {
    throw UsageError("calibration alpha must be positive and finite");
  }
  if (p.v.size() != c.dim()) {
    std::ostringstream os;
    os << "calibration vector has length " << p.v.size() << ", model dim is " << c.dim();
    throw ValidationError(os.str());
  }
  LinearClassifier out = c;
  for (std::size_t k = 0; k < out.num_classes(); ++k) {
    auto w = out.weights.row(k);
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = p.alpha * w[j] + p.v[j];
    out.bias[k] = p.alpha * out.bias[k] + p.beta;
  }
  out.metadata.calibration = CalibrationRecord{p.alpha, p.beta, p.v, p.rule, p.alternate_alpha};
  validate_classifier(out);
  return out;
}

}  // namespace rgcinit
