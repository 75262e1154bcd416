#pragma once

// Per-layer Hebbian heads and their logit-sum ensemble.
//
// A head is a K x D weight matrix W started at zero and updated M times by
//
//   V <- softmax(Z W^T) - Y        (gradient of the summed cross-entropy
//                                   with respect to the logits)
//   W <- W - alpha V^T Z
//
// where Z holds the support features of one layer (one row per sample) and
// Y their one-hot labels. The ensemble scores queries with the sum over
// layers of Z_query,l W_l^T.

#include <string>
#include <vector>

#include "chef/episode.hpp"
#include "chef/linalg.hpp"

namespace chef {

struct HebbianConfig {
  double alpha = 0.01;
  int steps = 400;
  // Z-score each head's logit rows before summing. Off reproduces the
  // literal raw-logit sum.
  bool zscore_logits = false;

  void validate() const;
};

/// Absolute weight magnitude treated as divergence.
inline constexpr double kDivergenceLimit = 1e12;

/// Runs the Hebbian rule from W = 0. Throws NumericalError naming the step
/// when W leaves the finite range.
Matrix hebb_rule(const Matrix& features, const Matrix& labels_onehot, const HebbianConfig& cfg);

/// One update of the rule from an arbitrary starting W.
Matrix hebb_step(const Matrix& features, const Matrix& labels_onehot, const Matrix& weights, double alpha);

/// Row-wise z-score (mean 0, unit population std); constant rows become 0.
Matrix zscore_rows(const Matrix& logits);

struct HebbianHead {
  std::string layer_id;
  Matrix weights;  // K x D

  int ways() const { return static_cast<int>(weights.rows()); }
  Matrix logits(const Matrix& features) const;
};

struct Prediction {
  Matrix scores;        // rows x K
  std::vector<int> labels;
};

struct EnsembleModel {
  std::vector<HebbianHead> heads;
  bool zscore_logits = false;

  /// Logit contribution of head h for the given query block.
  Matrix head_logits(std::size_t h, const LabeledLayers& queries) const;
};

/// Trains one head per requested layer on the episode's support set.
EnsembleModel fit_ensemble(const Episode& ep, const std::vector<std::string>& layer_ids, const HebbianConfig& cfg);

/// Element-wise sum of equally shaped score blocks, accumulated left to
/// right so the result does not depend on how the parts were produced.
Matrix sum_in_order(const std::vector<Matrix>& parts);

/// Sums head logits in head order and takes the argmax (lowest index on ties).
Prediction predict(const EnsembleModel& model, const LabeledLayers& queries);

double accuracy(const std::vector<int>& predictions, const std::vector<int>& truth);

}  // namespace chef
