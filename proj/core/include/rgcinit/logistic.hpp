#pragma once

// Multinomial logistic regression on fixed features: softmax probabilities,
// mean cross-entropy with optional L2 decay on W and b, its analytic gradient,
// and a plain (mini-batch) gradient-descent trainer.
//
// Objective: (1/B) sum_i -log p(y_i | x_i) + (decay / 2) (|W|^2 + |b|^2),
// with probabilities floored at 1e-300 before the log. Gradient wrt the logits
// is (p - onehot(y)) / B.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rgcinit/model.hpp"
#include "rgcinit/tensor_store.hpp"

namespace rgcinit {

/// N x K, each row the softmax of that row's logits (max-subtracted).
Matrix softmax_probs(const LinearClassifier& c, const FeatureMatrix& x);

/// Mean cross-entropy plus (decay / 2)(|W|^2 + |b|^2).
double cross_entropy(const LinearClassifier& c, const FeatureMatrix& x, const LabelVector& y,
                     double weight_decay = 0.0);

struct Gradient {
  Matrix weights;  // K x d
  std::vector<double> bias;
};

/// Returns the objective and writes its gradient wrt W and b into `grad`.
double cross_entropy_gradient(const LinearClassifier& c, const FeatureMatrix& x,
                              const LabelVector& y, double weight_decay, Gradient& grad);

struct Evaluation {
  double accuracy = 0.0;
  double mean_cross_entropy = 0.0;
};

/// Top-1 accuracy (ties to the lowest class) and mean cross-entropy without decay.
Evaluation evaluate(const LinearClassifier& c, const FeatureMatrix& x, const LabelVector& y);

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t iterations = 0;
  std::size_t batch_size = 0;  // 0 means full batch
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  std::size_t log_every = 1;
};

struct TracePoint {
  std::size_t iteration = 0;
  double train_loss = 0.0;  // mean cross-entropy over the full training set, no decay
  double train_accuracy = 0.0;
  double objective = 0.0;   // train_loss plus the decay term
  std::optional<double> test_loss;
  std::optional<double> test_accuracy;
  std::optional<double> loss_ratio;  // train_loss / test_loss
};

struct TrainTrace {
  std::vector<TracePoint> points;

  /// Header "iter,train_loss,train_acc,test_loss,test_acc,loss_ratio"; absent
  /// test columns are left empty.
  std::string to_csv() const;
};

struct TrainResult {
  LinearClassifier model;
  TrainTrace trace;
};

struct LabeledSet {
  const FeatureMatrix& features;
  const LabelVector& labels;
};

/// Gradient descent from `init`. The trace holds iterations 0, log_every,
/// 2 log_every, ... up to `iterations`, each recorded before that iteration's
/// update. Mini-batches walk a Fisher-Yates permutation drawn per epoch from
/// the seed. Throws DivergedError when the objective stops being finite.
TrainResult train(const LinearClassifier& init, const FeatureMatrix& x, const LabelVector& y,
                  const TrainConfig& cfg, std::optional<LabeledSet> test = std::nullopt);

/// Retries `train` with the learning rate halved whenever a run diverges or
/// ends above its starting objective. Returns the run and the rate it used.
struct BackoffResult {
  TrainResult result;
  double learning_rate = 0.0;
  std::size_t halvings = 0;
};
BackoffResult train_with_backoff(const LinearClassifier& init, const FeatureMatrix& x,
                                 const LabelVector& y, TrainConfig cfg,
                                 std::optional<LabeledSet> test = std::nullopt,
                                 std::size_t max_halvings = 20);

/// Gaussian weights with mean 0 and the given stddev (sqrt(2 / d) when
/// absent), zero bias. Deterministic in `seed`.
LinearClassifier random_init(std::size_t num_classes, std::size_t dim,
                             std::optional<double> stddev, std::uint64_t seed);

}  // namespace rgcinit
