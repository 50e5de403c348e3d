#pragma once

// Seeded Gaussian class data with known parameters.
//
// Class means are i.i.d. N(0, mean_scale^2) per coordinate. Covariances are
// Q diag(lambda) Q^T with lambda log-spaced from 1 down to 1/condition_number
// and Q a Haar-random orthogonal matrix (Gram-Schmidt of a Gaussian matrix).
// Shared mode uses one Q for every class; distinct mode draws one Q per class,
// so classes share a spectrum but not its orientation.
//
// Randomness comes from RandomStream (Philox4x32-10 + Box-Muller). Model
// parameters depend only on `seed`; the samples additionally depend on
// `split`, so split 0 and split 1 of the same seed are independent train and
// test draws from the same distribution. Samples are stored class-major.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rgcinit/model.hpp"
#include "rgcinit/numerics.hpp"
#include "rgcinit/tensor_store.hpp"

namespace rgcinit {

enum class CovarianceMode { kShared, kDistinct };

std::string_view to_string(CovarianceMode m);
CovarianceMode covariance_mode_from_string(std::string_view s);

struct SynthSpec {
  std::size_t num_classes = 2;
  std::size_t dim = 2;
  std::size_t samples_per_class = 100;
  std::uint64_t seed = 0;
  double mean_scale = 1.0;
  CovarianceMode covariance_mode = CovarianceMode::kShared;
  double condition_number = 1.0;
  std::uint32_t split = 0;
};

/// Throws UsageError unless K >= 2, d >= 1, n >= 2, mean_scale >= 0 and
/// condition_number >= 1 (all finite).
void validate_spec(const SynthSpec& spec);

struct SynthTruth {
  Matrix means;  // K x d
  CovarianceMode mode = CovarianceMode::kShared;
  std::vector<SymmetricMatrix> covariances;  // one (shared) or K (distinct)

  const SymmetricMatrix& covariance_of(std::size_t k) const {
    return mode == CovarianceMode::kShared ? covariances.front() : covariances[k];
  }
};

struct SynthData {
  FeatureMatrix features;
  LabelVector labels;
  SynthTruth truth;
};

SynthData generate(const SynthSpec& spec);

/// Haar-random d x d orthogonal matrix from the given stream.
Matrix random_orthogonal(std::size_t dim, class RandomStream& rng);

/// The optimal linear rule under the generating model: w_k = Sigma^{-1} mu_k,
/// b_k = -1/2 w_k^T mu_k. Needs shared-covariance truth; throws
/// ValidationError for distinct mode and NotPositiveDefinite for a singular Sigma.
LinearClassifier bayes_classifier(const SynthTruth& truth);

std::string truth_to_text(const SynthTruth& truth, const SynthSpec& spec);
SynthTruth truth_from_text(std::string_view text, const std::string& origin = "<memory>");
void write_truth(const SynthTruth& truth, const SynthSpec& spec, const std::filesystem::path& path);
SynthTruth read_truth(const std::filesystem::path& path);

}  // namespace rgcinit
