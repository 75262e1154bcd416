#pragma once

// Non-Hebbian heads for learner ablations: brute-force k nearest neighbours
// and a closed-form ridge regression onto one-hot targets.

#include <vector>

#include "chef/hebbian.hpp"

namespace chef {

struct KnnConfig {
  int k = 5;

  void validate() const;
};

struct RidgeConfig {
  double lambda = 1.0;

  void validate() const;
};

/// Scores are neighbour class frequencies (count / k). Neighbours are ranked
/// by squared Euclidean distance, ties by lowest support row; predicted
/// labels break score ties by lowest class index. `classes` defaults to
/// max(support_labels) + 1.
Prediction knn_predict(const Matrix& support, const std::vector<int>& support_labels, const Matrix& queries,
                       const KnnConfig& cfg, int classes = -1);

/// W = Y^T Z (Z^T Z + lambda I)^{-1}, the minimiser of
/// |Y - Z W^T|^2 + lambda |W|^2. Throws NumericalError when the system is
/// singular.
Matrix ridge_fit(const Matrix& features, const Matrix& labels_onehot, const RidgeConfig& cfg);

}  // namespace chef
