#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rgcinit/numerics.hpp"
#include "rgcinit/tensor_store.hpp"

namespace rgcinit {

/// Class means, counts and the pooled within-class covariance
///   Sigma = (1/N) sum_i (x_i - mu_{y_i})(x_i - mu_{y_i})^T.
struct ClassStatistics {
  Matrix means;  // K x d
  std::vector<std::size_t> counts;
  SymmetricMatrix pooled_cov;
  std::size_t total_count = 0;
  std::vector<std::string> warnings;

  std::size_t num_classes() const noexcept { return means.rows(); }
  std::size_t dim() const noexcept { return means.cols(); }
};

/// Two-pass fit (means, then centered outer products) with compensated sums,
/// so the result is insensitive to sample order. Throws ValidationError naming
/// the first empty class. When N - K < d the covariance is singular; that is
/// allowed and noted in `warnings`.
ClassStatistics fit_statistics(const FeatureMatrix& x, const LabelVector& y);

struct CenteredProjection {
  FeatureMatrix projected;          // N x out_dim
  Matrix basis;                     // d x out_dim, orthonormal columns
  std::vector<double> eigenvalues;  // all d eigenvalues of the pooled covariance, descending
  double explained_variance_ratio = 0.0;
};

/// Subtracts each row's class mean and projects onto the top `out_dim`
/// principal axes of the pooled (class-centered) covariance.
CenteredProjection centered_pca(const FeatureMatrix& x, const LabelVector& y,
                                const ClassStatistics& s, std::size_t out_dim);

FeatureMatrix project_centered(const FeatureMatrix& x, const LabelVector& y,
                               const ClassStatistics& s, std::size_t out_dim);

}  // namespace rgcinit
