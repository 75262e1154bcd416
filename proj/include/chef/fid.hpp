#pragma once

// Frechet distance between Gaussian fits of two feature populations:
//
//   |mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a^{1/2} S_b S_a^{1/2})^{1/2})
//
// The inner square root is taken of the symmetric product rather than of
// S_a S_b; both have the same trace.

#include <string>

#include "chef/feature_store.hpp"

namespace chef {

struct GaussianStats {
  Vector mean;
  Matrix cov;  // unbiased (n - 1), symmetrised
  std::size_t n = 0;

  Eigen::Index dim() const { return mean.size(); }
};

/// Negative totals down to -kFidClampTol are rounding noise and reported as 0.
inline constexpr double kFidClampTol = 1e-8;

GaussianStats fit_gaussian(const Matrix& features);

double frechet_distance(const GaussianStats& a, const GaussianStats& b);

double fid_between_sets(const FeatureSet& a, const FeatureSet& b, const std::string& layer_id);

}  // namespace chef
