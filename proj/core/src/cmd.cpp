#include "rgcinit/cmd.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rgcinit/class_stats.hpp"
#include "rgcinit/errors.hpp"

namespace rgcinit {

double cmd_distance(const SymmetricMatrix& r1, const SymmetricMatrix& r2) {
  if (r1.dim() != r2.dim()) throw ValidationError("CMD needs matrices of the same dimension");
  const double n1 = r1.frobenius_norm();
  const double n2 = r2.frobenius_norm();
  if (n1 == 0.0 || n2 == 0.0) throw ValidationError("CMD is undefined for a zero matrix");
  // tr(R1 R2) = sum_ij R1_ij R2_ij for symmetric matrices.
  double tr = 0.0;
  auto a = r1.dense().data();
  auto b = r2.dense().data();
  for (std::size_t i = 0; i < a.size(); ++i) tr += a[i] * b[i];
  return std::clamp(1.0 - tr / (n1 * n2), 0.0, 1.0);
}

std::string CmdReport::to_text() const {
  nlohmann::json doc;
  doc["format_version"] = 1;
  doc["kind"] = "cmd-report";
  doc["per_class_cmd"] = per_class_cmd;
  doc["mean_cmd"] = mean_cmd;
  doc["var_cmd"] = var_cmd;
  doc["pca_dims"] = pca_dims;
  doc["explained_variance_ratio"] = explained_variance_ratio;
  return doc.dump(2) + "\n";
}

CmdReport cmd_study(const FeatureMatrix& x, const LabelVector& y, std::size_t pca_dims) {
  validate_features(x);
  validate_labels(y);
  check_paired(x, y);
  if (pca_dims == 0 || pca_dims > x.cols()) {
    std::ostringstream os;
    os << "pca_dims " << pca_dims << " must be in [1, " << x.cols() << "]";
    throw ValidationError(os.str());
  }
  const std::size_t k = y.num_classes;
  std::vector<std::size_t> counts(k, 0);
  for (auto label : y.labels) ++counts[label];
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] < pca_dims + 1) {
      std::ostringstream os;
      os << "class " << c << " has " << counts[c] << " samples; need at least " << pca_dims + 1
         << " for a " << pca_dims << "-dimensional covariance";
      throw ValidationError(os.str());
    }
  }

  const ClassStatistics stats = fit_statistics(x, y);
  const CenteredProjection proj = centered_pca(x, y, stats, pca_dims);
  const std::size_t p = pca_dims;

  // Per-class covariance of the projected rows, re-centered on the class mean.
  std::vector<std::vector<CompensatedSum>> mean_acc(k, std::vector<CompensatedSum>(p));
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto z = proj.projected.row(i);
    for (std::size_t a = 0; a < p; ++a) mean_acc[y[i]][a].add(z[a]);
  }
  std::vector<std::vector<double>> class_mean(k, std::vector<double>(p));
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t a = 0; a < p; ++a)
      class_mean[c][a] = mean_acc[c][a].value() / static_cast<double>(counts[c]);

  std::vector<std::vector<CompensatedSum>> cov_acc(k, std::vector<CompensatedSum>(p * p));
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto z = proj.projected.row(i);
    const auto c = y[i];
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b <= a; ++b)
        cov_acc[c][a * p + b].add((z[a] - class_mean[c][a]) * (z[b] - class_mean[c][b]));
  }
  std::vector<SymmetricMatrix> covs(k, SymmetricMatrix(p));
  SymmetricMatrix mean_cov(p);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t a = 0; a < p; ++a)
      for (std::size_t b = 0; b <= a; ++b)
        covs[c].set(a, b, cov_acc[c][a * p + b].value() / static_cast<double>(counts[c]));
  }
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      CompensatedSum s;
      for (std::size_t c = 0; c < k; ++c) s.add(covs[c](a, b));
      mean_cov.set(a, b, s.value() / static_cast<double>(k));
    }
  }

  CmdReport report;
  report.pca_dims = p;
  report.explained_variance_ratio = proj.explained_variance_ratio;
  report.per_class_cmd.resize(k);
  for (std::size_t c = 0; c < k; ++c) report.per_class_cmd[c] = cmd_distance(covs[c], mean_cov);
  report.mean_cmd = stable_sum(report.per_class_cmd) / static_cast<double>(k);
  CompensatedSum var;
  for (double s : report.per_class_cmd) var.add((s - report.mean_cmd) * (s - report.mean_cmd));
  report.var_cmd = var.value() / static_cast<double>(k);
  return report;
}

}  // namespace rgcinit
