#include "chef/fid.hpp"

#include <fmt/format.h>

namespace chef {

GaussianStats fit_gaussian(const Matrix& features) {
  if (features.rows() < 2) {
    throw DataError(fmt::format("Gaussian fit needs at least 2 samples, got {}", features.rows()));
  }
  if (!features.allFinite()) throw DataError("Gaussian fit: non-finite feature values");
  GaussianStats stats;
  stats.n = static_cast<std::size_t>(features.rows());
  stats.mean = features.colwise().mean().transpose();
  const Matrix centered = features.rowwise() - stats.mean.transpose();
  const Matrix cov = (centered.transpose() * centered) / static_cast<double>(features.rows() - 1);
  stats.cov = (cov + cov.transpose()) / 2.0;
  return stats;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError(fmt::format("Frechet distance: dims {} and {} differ", a.dim(), b.dim()));
  }
  if (a.cov.rows() != a.dim() || b.cov.rows() != b.dim()) {
    throw DimensionError("Frechet distance: covariance shape does not match mean");
  }
  const Matrix root_a = sym_sqrt(a.cov);
  Matrix inner = root_a * b.cov * root_a;
  inner = (inner + inner.transpose()) / 2.0;
  const Matrix cross = sym_sqrt(inner);

  const double mean_term = (a.mean - b.mean).squaredNorm();
  const double trace_term = a.cov.trace() + b.cov.trace() - 2.0 * cross.trace();
  const double d = mean_term + trace_term;
  if (d < 0.0) {
    if (d >= -kFidClampTol) return 0.0;
    throw NumericalError(fmt::format("Frechet distance evaluated to {:.6g}; covariance inputs are inconsistent", d));
  }
  return d;
}

double fid_between_sets(const FeatureSet& a, const FeatureSet& b, const std::string& layer_id) {
  const Matrix& za = a.layer(layer_id);
  const Matrix& zb = b.layer(layer_id);
  if (za.cols() != zb.cols()) {
    throw DimensionError(fmt::format("layer '{}' has dim {} in '{}' but dim {} in '{}'", layer_id, za.cols(),
                                     a.split_name, zb.cols(), b.split_name));
  }
  return frechet_distance(fit_gaussian(za), fit_gaussian(zb));
}

}  // namespace chef
