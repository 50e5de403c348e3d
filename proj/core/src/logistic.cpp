#include "rgcinit/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "rgcinit/errors.hpp"
#include "rgcinit/parallel.hpp"
#include "rgcinit/random.hpp"

namespace rgcinit {
namespace {

// Fixed row-chunk size; partial sums are reduced in chunk order.
constexpr std::size_t kChunkRows = 256;
// -log(1e-300)
const double kMaxSampleLoss = -std::log(1e-300);
constexpr std::uint64_t kInitStream = 0x494E4954;   // "INIT"
constexpr std::uint64_t kShuffleStream = 0x53485546;  // "SHUF", plus the epoch

struct PassResult {
  double loss_sum = 0.0;
  std::size_t correct = 0;
  std::size_t count = 0;
};

void check_inputs(const LinearClassifier& c, const FeatureMatrix& x, const LabelVector& y) {
  check_paired(x, y);
  if (x.cols() != c.dim()) {
    std::ostringstream os;
    os << "features have dimension " << x.cols() << ", model expects " << c.dim();
    throw ValidationError(os.str());
  }
  if (y.num_classes > c.num_classes()) {
    std::ostringstream os;
    os << "labels use " << y.num_classes << " classes, model has " << c.num_classes();
    throw ValidationError(os.str());
  }
}

// One forward (and optionally backward) pass over `rows` (all rows when empty).
// Gradient output is the raw sum of (p - onehot) outer products, unscaled.
PassResult forward_backward(const LinearClassifier& c, const Matrix& wt, const FeatureMatrix& x,
                            const LabelVector& y, std::span<const std::size_t> rows,
                            Gradient* grad) {
  const std::size_t k = c.num_classes();
  const std::size_t d = c.dim();
  const std::size_t n = rows.empty() ? x.rows() : rows.size();
  const std::size_t chunks = (n + kChunkRows - 1) / kChunkRows;

  std::vector<PassResult> partial(chunks);
  std::vector<Gradient> partial_grad;
  if (grad != nullptr) {
    partial_grad.resize(chunks);
    for (auto& g : partial_grad) {
      g.weights = Matrix(k, d);
      g.bias.assign(k, 0.0);
    }
  }

  for_each_chunk(chunks, configured_threads(), [&](std::size_t chunk) {
    std::vector<double> z(k);
    PassResult& out = partial[chunk];
    const std::size_t begin = chunk * kChunkRows;
    const std::size_t end = std::min(n, begin + kChunkRows);
    for (std::size_t r = begin; r < end; ++r) {
      const std::size_t i = rows.empty() ? r : rows[r];
      auto xi = x.row(i);
      std::copy(c.bias.begin(), c.bias.end(), z.begin());
      for (std::size_t j = 0; j < d; ++j) {
        const double xij = xi[j];
        auto wj = wt.row(j);
        for (std::size_t a = 0; a < k; ++a) z[a] += xij * wj[a];
      }
      const std::size_t best = argmax_lowest(z);
      const double zmax = z[best];
      double denom = 0.0;
      for (std::size_t a = 0; a < k; ++a) {
        z[a] = std::exp(z[a] - zmax);
        denom += z[a];
      }
      const std::uint32_t label = y[i];
      // log p_y = (z_y - zmax) - log(denom); z now holds exp(z - zmax).
      const double log_py = std::log(z[label]) - std::log(denom);
      out.loss_sum += std::min(-log_py, kMaxSampleLoss);
      out.correct += best == label ? 1 : 0;
      ++out.count;
      if (grad != nullptr) {
        Gradient& g = partial_grad[chunk];
        const double inv = 1.0 / denom;
        for (std::size_t a = 0; a < k; ++a) {
          const double delta = z[a] * inv - (a == label ? 1.0 : 0.0);
          g.bias[a] += delta;
          auto ga = g.weights.row(a);
          for (std::size_t j = 0; j < d; ++j) ga[j] += delta * xi[j];
        }
      }
    }
  });

  PassResult total;
  for (const auto& p : partial) {
    total.loss_sum += p.loss_sum;
    total.correct += p.correct;
    total.count += p.count;
  }
  if (grad != nullptr) {
    grad->weights = Matrix(k, d);
    grad->bias.assign(k, 0.0);
    for (const auto& g : partial_grad) {
      auto dst = grad->weights.data();
      auto src = g.weights.data();
      for (std::size_t t = 0; t < dst.size(); ++t) dst[t] += src[t];
      for (std::size_t a = 0; a < k; ++a) grad->bias[a] += g.bias[a];
    }
  }
  return total;
}

double squared_norm(const LinearClassifier& c) {
  double s = 0.0;
  for (double w : c.weights.data()) s += w * w;
  for (double b : c.bias) s += b * b;
  return s;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Matrix softmax_probs(const LinearClassifier& c, const FeatureMatrix& x) {
  Matrix p = compute_logits(c, x);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    auto row = p.row(i);
    const double zmax = *std::max_element(row.begin(), row.end());
    double denom = 0.0;
    for (double& v : row) {
      v = std::exp(v - zmax);
      denom += v;
    }
    for (double& v : row) v /= denom;
  }
  return p;
}

double cross_entropy(const LinearClassifier& c, const FeatureMatrix& x, const LabelVector& y,
                     double weight_decay) {
  check_inputs(c, x, y);
  const Matrix wt = c.weights.transposed();
  const PassResult r = forward_backward(c, wt, x, y, {}, nullptr);
  return r.loss_sum / static_cast<double>(r.count) + 0.5 * weight_decay * squared_norm(c);
}

double cross_entropy_gradient(const LinearClassifier& c, const FeatureMatrix& x,
                              const LabelVector& y, double weight_decay, Gradient& grad) {
  check_inputs(c, x, y);
  const Matrix wt = c.weights.transposed();
  const PassResult r = forward_backward(c, wt, x, y, {}, &grad);
  const double inv = 1.0 / static_cast<double>(r.count);
  auto gw = grad.weights.data();
  auto w = c.weights.data();
  for (std::size_t t = 0; t < gw.size(); ++t) gw[t] = gw[t] * inv + weight_decay * w[t];
  for (std::size_t a = 0; a < grad.bias.size(); ++a) {
    grad.bias[a] = grad.bias[a] * inv + weight_decay * c.bias[a];
  }
  return r.loss_sum * inv + 0.5 * weight_decay * squared_norm(c);
}

Evaluation evaluate(const LinearClassifier& c, const FeatureMatrix& x, const LabelVector& y) {
  check_inputs(c, x, y);
  const Matrix wt = c.weights.transposed();
  const PassResult r = forward_backward(c, wt, x, y, {}, nullptr);
  const auto n = static_cast<double>(r.count);
  return {static_cast<double>(r.correct) / n, r.loss_sum / n};
}

std::string TrainTrace::to_csv() const {
  std::string out = "iter,train_loss,train_acc,test_loss,test_acc,loss_ratio\n";
  for (const auto& p : points) {
    out += std::to_string(p.iteration);
    out += ',' + format_number(p.train_loss);
    out += ',' + format_number(p.train_accuracy);
    out += ',' + (p.test_loss ? format_number(*p.test_loss) : std::string());
    out += ',' + (p.test_accuracy ? format_number(*p.test_accuracy) : std::string());
    out += ',' + (p.loss_ratio ? format_number(*p.loss_ratio) : std::string());
    out += '\n';
  }
  return out;
}

TrainResult train(const LinearClassifier& init, const FeatureMatrix& x, const LabelVector& y,
                  const TrainConfig& cfg, std::optional<LabeledSet> test) {
  validate_classifier(init);
  check_inputs(init, x, y);
  if (test) check_inputs(init, test->features, test->labels);
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw UsageError("learning rate must be positive");
  }
  if (!(cfg.weight_decay >= 0.0)) throw UsageError("weight decay must be non-negative");
  if (cfg.log_every == 0) throw UsageError("log_every must be at least 1");

  const std::size_t n = x.rows();
  const bool full_batch = cfg.batch_size == 0 || cfg.batch_size >= n;
  const std::size_t batch = full_batch ? n : cfg.batch_size;
  const std::size_t steps_per_epoch = (n + batch - 1) / batch;

  TrainResult result{init, {}};
  LinearClassifier& model = result.model;
  model.metadata.source = ModelSource::kTrained;

  std::vector<std::size_t> order(n);
  std::size_t current_epoch = SIZE_MAX;
  Gradient grad;

  for (std::size_t t = 0; t <= cfg.iterations; ++t) {
    const bool log_now = t % cfg.log_every == 0;
    const bool update = t < cfg.iterations;
    if (!log_now && !update) break;

    const Matrix wt = model.weights.transposed();
    const double decay_term = 0.5 * cfg.weight_decay * squared_norm(model);
    std::span<const std::size_t> rows;
    if (!full_batch && update) {
      const std::size_t epoch = t / steps_per_epoch;
      if (epoch != current_epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        RandomStream rng(cfg.seed, kShuffleStream + (static_cast<std::uint64_t>(epoch) << 32));
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
        current_epoch = epoch;
      }
      const std::size_t begin = (t % steps_per_epoch) * batch;
      rows = std::span<const std::size_t>(order).subspan(begin, std::min(batch, n - begin));
    }

    PassResult pass;
    if (update) pass = forward_backward(model, wt, x, y, rows, &grad);
    const double batch_objective =
        update ? pass.loss_sum / static_cast<double>(pass.count) + decay_term : 0.0;
    if (update && !std::isfinite(batch_objective)) {
      std::ostringstream os;
      os << "training diverged at iteration " << t << " with learning rate " << cfg.learning_rate;
      throw DivergedError(t, cfg.learning_rate, os.str());
    }

    if (log_now) {
      // Full-batch passes already cover the training set; mini-batch runs need a separate pass.
      const PassResult full =
          update && full_batch ? pass : forward_backward(model, wt, x, y, {}, nullptr);
      TracePoint p;
      p.iteration = t;
      p.train_loss = full.loss_sum / static_cast<double>(full.count);
      p.train_accuracy = static_cast<double>(full.correct) / static_cast<double>(full.count);
      p.objective = p.train_loss + decay_term;
      if (!std::isfinite(p.objective)) {
        std::ostringstream os;
        os << "training diverged at iteration " << t << " with learning rate "
           << cfg.learning_rate;
        throw DivergedError(t, cfg.learning_rate, os.str());
      }
      if (test) {
        const Evaluation e = evaluate(model, test->features, test->labels);
        p.test_loss = e.mean_cross_entropy;
        p.test_accuracy = e.accuracy;
        if (e.mean_cross_entropy > 0.0) p.loss_ratio = p.train_loss / e.mean_cross_entropy;
      }
      result.trace.points.push_back(p);
    }

    if (update) {
      const double inv = 1.0 / static_cast<double>(pass.count);
      const double lr = cfg.learning_rate;
      auto w = model.weights.data();
      auto gw = grad.weights.data();
      for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] -= lr * (gw[i] * inv + cfg.weight_decay * w[i]);
      }
      for (std::size_t a = 0; a < model.bias.size(); ++a) {
        model.bias[a] -= lr * (grad.bias[a] * inv + cfg.weight_decay * model.bias[a]);
      }
    }
  }
  if (cfg.iterations == 0) model.metadata = init.metadata;
  return result;
}

BackoffResult train_with_backoff(const LinearClassifier& init, const FeatureMatrix& x,
                                 const LabelVector& y, TrainConfig cfg,
                                 std::optional<LabeledSet> test, std::size_t max_halvings) {
  for (std::size_t h = 0;; ++h) {
    try {
      TrainResult r = train(init, x, y, cfg, test);
      const auto& pts = r.trace.points;
      const bool rose = pts.size() >= 2 && pts.back().objective > pts.front().objective;
      if (!rose) return {std::move(r), cfg.learning_rate, h};
    } catch (const DivergedError&) {
      if (h >= max_halvings) throw;
    }
    if (h >= max_halvings) {
      throw ConvergenceError("training did not settle after " + std::to_string(max_halvings) +
                             " learning-rate halvings");
    }
    cfg.learning_rate *= 0.5;
  }
}

LinearClassifier random_init(std::size_t num_classes, std::size_t dim, std::optional<double> stddev,
                             std::uint64_t seed) {
  if (num_classes == 0 || dim == 0) throw UsageError("random_init needs K >= 1 and d >= 1");
  const double sigma = stddev ? *stddev : std::sqrt(2.0 / static_cast<double>(dim));
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw UsageError("stddev must be non-negative");
  LinearClassifier c;
  c.weights = Matrix(num_classes, dim);
  RandomStream rng(seed, kInitStream);
  for (double& w : c.weights.data()) w = sigma * rng.normal();
  c.bias.assign(num_classes, 0.0);
  c.metadata.source = ModelSource::kRandom;
  return c;
}

}  // namespace rgcinit
