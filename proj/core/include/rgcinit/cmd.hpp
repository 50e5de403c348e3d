#pragma once

// Correlation matrix distance between covariance matrices,
//   d(R1, R2) = 1 - tr(R1 R2) / (|R1|_F |R2|_F),
// and the per-class covariance homogeneity study built on it: class-center the
// features, project onto the top principal axes of the pooled covariance,
// estimate each class covariance there and score it against the unweighted
// mean of all class covariances.

#include <cstddef>
#include <string>
#include <vector>

#include "rgcinit/numerics.hpp"
#include "rgcinit/tensor_store.hpp"

namespace rgcinit {

/// Clamped to [0, 1]. Throws ValidationError for mismatched dims or a zero matrix.
double cmd_distance(const SymmetricMatrix& r1, const SymmetricMatrix& r2);

struct CmdReport {
  std::vector<double> per_class_cmd;
  double mean_cmd = 0.0;
  double var_cmd = 0.0;  // population variance over classes
  std::size_t pca_dims = 0;
  double explained_variance_ratio = 0.0;

  std::string to_text() const;
};

/// Throws ValidationError if pca_dims is 0 or exceeds d, or if a class has
/// fewer than pca_dims + 1 samples.
CmdReport cmd_study(const FeatureMatrix& x, const LabelVector& y, std::size_t pca_dims = 2);

}  // namespace rgcinit
