#include "rgcinit/class_stats.hpp"

#include <algorithm>
#include <sstream>

#include "rgcinit/errors.hpp"

namespace rgcinit {

ClassStatistics fit_statistics(const FeatureMatrix& x, const LabelVector& y) {
  validate_features(x);
  validate_labels(y);
  check_paired(x, y);
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const std::size_t k = y.num_classes;

  ClassStatistics s;
  s.counts.assign(k, 0);
  for (std::uint32_t label : y.labels) ++s.counts[label];
  for (std::size_t c = 0; c < k; ++c) {
    if (s.counts[c] == 0) {
      throw ValidationError("class " + std::to_string(c) + " has no samples");
    }
  }
  s.total_count = n;
  if (n - k < d) {
    std::ostringstream os;
    os << "pooled covariance has rank at most " << n - k << " < dim " << d << " (" << n
       << " samples, " << k << " classes); it is singular without a ridge";
    s.warnings.push_back(os.str());
  }

  std::vector<CompensatedSum> mean_acc(k * d);
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    CompensatedSum* acc = &mean_acc[y[i] * d];
    for (std::size_t j = 0; j < d; ++j) acc[j].add(xi[j]);
  }
  s.means = Matrix(k, d);
  for (std::size_t c = 0; c < k; ++c) {
    const double inv = 1.0 / static_cast<double>(s.counts[c]);
    for (std::size_t j = 0; j < d; ++j) s.means(c, j) = mean_acc[c * d + j].value() * inv;
  }

  // Lower triangle, packed row by row.
  std::vector<CompensatedSum> cov_acc(d * (d + 1) / 2);
  std::vector<double> centered(d);
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    auto mu = s.means.row(y[i]);
    for (std::size_t j = 0; j < d; ++j) centered[j] = xi[j] - mu[j];
    std::size_t idx = 0;
    for (std::size_t a = 0; a < d; ++a) {
      const double ca = centered[a];
      for (std::size_t b = 0; b <= a; ++b) cov_acc[idx++].add(ca * centered[b]);
    }
  }
  s.pooled_cov = SymmetricMatrix(d);
  const double inv_n = 1.0 / static_cast<double>(n);
  std::size_t idx = 0;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b <= a; ++b) s.pooled_cov.set(a, b, cov_acc[idx++].value() * inv_n);
  return s;
}

CenteredProjection centered_pca(const FeatureMatrix& x, const LabelVector& y,
                                const ClassStatistics& s, std::size_t out_dim) {
  check_paired(x, y);
  if (x.cols() != s.dim()) {
    throw ValidationError("features and statistics have different dimensions");
  }
  if (y.num_classes != s.num_classes()) {
    throw ValidationError("labels and statistics disagree on the number of classes");
  }
  if (out_dim == 0 || out_dim > s.dim()) {
    std::ostringstream os;
    os << "projection dimension " << out_dim << " must be in [1, " << s.dim() << "]";
    throw ValidationError(os.str());
  }
  const std::size_t d = s.dim();
  SymmetricEigen eig = sym_eigen(s.pooled_cov);

  CenteredProjection out;
  out.basis = Matrix(d, out_dim);
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 0; c < out_dim; ++c) out.basis(r, c) = eig.vectors(r, c);

  double total = 0.0;
  double kept = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double lam = std::max(eig.values[j], 0.0);
    total += lam;
    if (j < out_dim) kept += lam;
  }
  out.explained_variance_ratio = total > 0.0 ? kept / total : 0.0;
  out.eigenvalues = std::move(eig.values);

  out.projected = FeatureMatrix(x.rows(), out_dim);
  std::vector<double> centered(d);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto xi = x.row(i);
    auto mu = s.means.row(y[i]);
    for (std::size_t j = 0; j < d; ++j) centered[j] = xi[j] - mu[j];
    auto zi = out.projected.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      auto bj = out.basis.row(j);
      for (std::size_t c = 0; c < out_dim; ++c) zi[c] += centered[j] * bj[c];
    }
  }
  return out;
}

FeatureMatrix project_centered(const FeatureMatrix& x, const LabelVector& y,
                               const ClassStatistics& s, std::size_t out_dim) {
  return centered_pca(x, y, s, out_dim).projected;
}

}  // namespace rgcinit
