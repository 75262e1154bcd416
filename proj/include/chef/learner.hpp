#pragma once

// Uniform fit/score interface over the Hebbian, k-NN and ridge heads, and
// layer fusion by summing per-layer scores in layer order.

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "chef/baselines.hpp"

namespace chef {

enum class LearnerKind { hebbian, knn, ridge };

LearnerKind parse_learner_kind(std::string_view name);
std::string_view to_string(LearnerKind kind);

struct LearnerConfig {
  LearnerKind kind = LearnerKind::hebbian;
  HebbianConfig hebbian;
  KnnConfig knn;
  RidgeConfig ridge;

  void validate() const;
};

class Learner {
 public:
  virtual ~Learner() = default;
  virtual LearnerKind kind() const = 0;
  virtual void fit(const Matrix& support, const Labels& labels, int classes) = 0;
  /// Scores for each query row, one column per class. Requires fit().
  virtual Matrix score(const Matrix& queries) const = 0;
};

std::unique_ptr<Learner> learner_for(const LearnerConfig& cfg);

/// Fits one learner per layer on the episode support and scores the
/// episode queries; results are in the order of `layers`.
std::vector<Matrix> layer_scores(const LearnerConfig& cfg, const Episode& ep, const std::vector<std::string>& layers);

/// Sum of score blocks in order, then argmax with lowest-index ties.
Prediction fuse(const std::vector<Matrix>& parts);

}  // namespace chef
