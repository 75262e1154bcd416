#include "chef/baselines.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

namespace chef {

void KnnConfig::validate() const {
  if (k < 1) throw ConfigError(fmt::format("k must be >= 1, got {}", k));
}

void RidgeConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError(fmt::format("lambda must be finite and >= 0, got {}", lambda));
  }
}

Prediction knn_predict(const Matrix& support, const std::vector<int>& support_labels, const Matrix& queries,
                       const KnnConfig& cfg, int classes) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(support.rows());
  if (support_labels.size() != n) {
    throw DimensionError(fmt::format("knn: {} support rows but {} labels", n, support_labels.size()));
  }
  if (queries.cols() != support.cols()) {
    throw DimensionError(fmt::format("knn: query dim {} but support dim {}", queries.cols(), support.cols()));
  }
  if (static_cast<std::size_t>(cfg.k) > n) {
    throw ConfigError(fmt::format("knn: k = {} exceeds the support size {}", cfg.k, n));
  }
  if (classes < 0) classes = *std::max_element(support_labels.begin(), support_labels.end()) + 1;

  Prediction out;
  out.scores = Matrix::Zero(queries.rows(), classes);
  std::vector<double> dist(n);
  std::vector<std::size_t> order(n);
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = (support.row(static_cast<Eigen::Index>(i)) - queries.row(q)).squaredNorm();
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + cfg.k, order.end(), [&](std::size_t a, std::size_t b) {
      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
    });
    for (int j = 0; j < cfg.k; ++j) {
      const int label = support_labels[order[static_cast<std::size_t>(j)]];
      if (label < 0 || label >= classes) throw DataError(fmt::format("knn: label {} outside [0, {})", label, classes));
      out.scores(q, label) += 1.0;
    }
  }
  out.scores /= static_cast<double>(cfg.k);
  out.labels = argmax_rows(out.scores);
  return out;
}

Matrix ridge_fit(const Matrix& features, const Matrix& labels_onehot, const RidgeConfig& cfg) {
  cfg.validate();
  if (features.rows() != labels_onehot.rows()) {
    throw DimensionError(fmt::format("ridge: {} feature rows but {} label rows", features.rows(), labels_onehot.rows()));
  }
  const Eigen::Index dim = features.cols();
  Eigen::MatrixXd gram = features.transpose() * features;
  gram.diagonal().array() += cfg.lambda;
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
  if (qr.rank() < dim) {
    throw NumericalError(fmt::format("ridge: normal equations are singular (rank {} of {}, lambda {})", qr.rank(),
                                     dim, cfg.lambda));
  }
  const Eigen::MatrixXd rhs = features.transpose() * labels_onehot;
  const Eigen::MatrixXd wt = qr.solve(rhs);
  return wt.transpose();
}

}  // namespace chef
