#pragma once

// Linear softmax head (W: K x d, b: K) and its JSON text file format:
//
//   {
//     "format_version": 1,
//     "num_classes": K,
//     "dim": d,
//     "weights": [[...d numbers...], ...K rows...],
//     "bias": [...K numbers...],
//     "metadata": {
//       "source": "rgc" | "random" | "ncc" | "trained" | "bayes",
//       "epsilon": number | null,
//       "calibration": {"alpha", "beta", "v", "rule", "alternate_alpha"} | absent,
//       "notes": [strings]
//     }
//   }
//
// Numbers are written with shortest round-trip formatting (at most 17
// significant digits), so a write/read cycle is exact.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rgcinit/numerics.hpp"
#include "rgcinit/tensor_store.hpp"

namespace rgcinit {

enum class ModelSource { kRgc, kRandom, kNcc, kTrained, kBayes };

std::string_view to_string(ModelSource s);
ModelSource model_source_from_string(std::string_view s);

/// How the calibration scale alpha was derived.
enum class AlphaRule {
  kMatchReferenceSpread,  // alpha = sqrt(Var(w_ref) / Var(w_new))
  kAsPrinted,             // alpha = sqrt(Var(w_new) / Var(w_ref))
};

std::string_view to_string(AlphaRule r);
AlphaRule alpha_rule_from_string(std::string_view s);

struct CalibrationRecord {
  double alpha = 1.0;
  double beta = 0.0;
  std::vector<double> v;
  AlphaRule rule = AlphaRule::kMatchReferenceSpread;
  std::optional<double> alternate_alpha;  // alpha the other rule would give

  bool operator==(const CalibrationRecord&) const = default;
};

struct ModelMetadata {
  ModelSource source = ModelSource::kRgc;
  std::optional<double> epsilon;
  std::optional<CalibrationRecord> calibration;
  std::vector<std::string> notes;

  bool operator==(const ModelMetadata&) const = default;
};

struct LinearClassifier {
  Matrix weights;  // K x d, row k is w_k
  std::vector<double> bias;
  ModelMetadata metadata;

  std::size_t num_classes() const noexcept { return weights.rows(); }
  std::size_t dim() const noexcept { return weights.cols(); }

  bool operator==(const LinearClassifier&) const = default;
};

/// Shape and finiteness checks.
void validate_classifier(const LinearClassifier& c);

std::string model_to_text(const LinearClassifier& c);
LinearClassifier model_from_text(std::string_view text, const std::string& origin = "<memory>");

void write_model(const LinearClassifier& c, const std::filesystem::path& path);
LinearClassifier read_model(const std::filesystem::path& path);

/// Scores x W^T + b, N x K. Throws ValidationError on a dimension mismatch.
Matrix compute_logits(const LinearClassifier& c, const FeatureMatrix& x);

/// Row-wise argmax; ties go to the lowest class index.
std::size_t argmax_lowest(std::span<const double> scores);

}  // namespace rgcinit
