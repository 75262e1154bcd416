#include "chef/hebbian.hpp"

#include <set>

#include <fmt/format.h>

namespace chef {

void HebbianConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError(fmt::format("alpha must be > 0, got {}", alpha));
  if (steps < 1) throw ConfigError(fmt::format("Hebb steps must be >= 1, got {}", steps));
}

Matrix hebb_step(const Matrix& features, const Matrix& labels_onehot, const Matrix& weights, double alpha) {
  if (features.rows() != labels_onehot.rows()) {
    throw DimensionError(fmt::format("hebb_rule: {} feature rows but {} label rows", features.rows(),
                                     labels_onehot.rows()));
  }
  if (weights.rows() != labels_onehot.cols() || weights.cols() != features.cols()) {
    throw DimensionError(fmt::format("hebb_rule: weights are {}x{}, expected {}x{}", weights.rows(), weights.cols(),
                                     labels_onehot.cols(), features.cols()));
  }
  const Matrix logits = features * weights.transpose();
  const Matrix post = ce_grad_wrt_logits(labels_onehot, logits);
  const Matrix update = post.transpose() * features;
  return weights - alpha * update;
}

Matrix hebb_rule(const Matrix& features, const Matrix& labels_onehot, const HebbianConfig& cfg) {
  cfg.validate();
  Matrix w = Matrix::Zero(labels_onehot.cols(), features.cols());
  for (int step = 1; step <= cfg.steps; ++step) {
    w = hebb_step(features, labels_onehot, w, cfg.alpha);
    if (!w.allFinite() || (w.size() > 0 && w.cwiseAbs().maxCoeff() > kDivergenceLimit)) {
      throw NumericalError(fmt::format("Hebb rule diverged at step {} (alpha {})", step, cfg.alpha));
    }
  }
  return w;
}

Matrix zscore_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mean = logits.row(r).mean();
    const Eigen::RowVectorXd centered = logits.row(r).array() - mean;
    const double sd = std::sqrt(centered.squaredNorm() / static_cast<double>(logits.cols()));
    out.row(r) = sd > 0.0 ? Eigen::RowVectorXd(centered / sd) : Eigen::RowVectorXd::Zero(logits.cols());
  }
  return out;
}

Matrix HebbianHead::logits(const Matrix& features) const {
  if (features.cols() != weights.cols()) {
    throw DimensionError(fmt::format("layer '{}': query dim {} but head expects {}", layer_id, features.cols(),
                                     weights.cols()));
  }
  return features * weights.transpose();
}

Matrix EnsembleModel::head_logits(std::size_t h, const LabeledLayers& queries) const {
  const HebbianHead& head = heads.at(h);
  const auto idx = queries.index_of(head.layer_id);
  if (!idx) throw DataError(fmt::format("queries lack layer '{}'", head.layer_id));
  Matrix logits = head.logits(queries.layers[*idx]);
  return zscore_logits ? zscore_rows(logits) : logits;
}

EnsembleModel fit_ensemble(const Episode& ep, const std::vector<std::string>& layer_ids, const HebbianConfig& cfg) {
  cfg.validate();
  if (layer_ids.empty()) throw ConfigError("ensemble needs at least one layer");
  std::set<std::string> seen;
  for (const auto& id : layer_ids) {
    if (!seen.insert(id).second) throw ConfigError(fmt::format("layer '{}' listed twice in the ensemble", id));
  }
  const int ways = static_cast<int>(ep.class_map.size());
  const Matrix y = one_hot(ep.support.labels, ways);

  EnsembleModel model;
  model.zscore_logits = cfg.zscore_logits;
  for (const auto& id : layer_ids) {
    model.heads.push_back({id, hebb_rule(ep.support.layer(id), y, cfg)});
  }
  return model;
}

Matrix sum_in_order(const std::vector<Matrix>& parts) {
  if (parts.empty()) throw ConfigError("nothing to sum");
  Matrix total = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    require_same_shape(total, parts[i], "sum_in_order");
    total += parts[i];
  }
  return total;
}

Prediction predict(const EnsembleModel& model, const LabeledLayers& queries) {
  if (model.heads.empty()) throw ConfigError("empty ensemble");
  std::vector<Matrix> parts;
  parts.reserve(model.heads.size());
  for (std::size_t h = 0; h < model.heads.size(); ++h) parts.push_back(model.head_logits(h, queries));
  Prediction out;
  out.scores = sum_in_order(parts);
  out.labels = argmax_rows(out.scores);
  return out;
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& truth) {
  if (predictions.size() != truth.size()) {
    throw DimensionError(fmt::format("accuracy: {} predictions for {} targets", predictions.size(), truth.size()));
  }
  if (truth.empty()) throw DataError("accuracy of an empty prediction set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predictions[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace chef
