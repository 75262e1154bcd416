#include "chef/learner.hpp"

#include <set>

#include <fmt/format.h>

namespace chef {

LearnerKind parse_learner_kind(std::string_view name) {
  if (name == "hebbian") return LearnerKind::hebbian;
  if (name == "knn") return LearnerKind::knn;
  if (name == "ridge") return LearnerKind::ridge;
  throw ConfigError(fmt::format("unknown learner '{}' (expected hebbian, knn or ridge)", name));
}

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::hebbian: return "hebbian";
    case LearnerKind::knn: return "knn";
    case LearnerKind::ridge: return "ridge";
  }
  return "?";
}

void LearnerConfig::validate() const {
  switch (kind) {
    case LearnerKind::hebbian: hebbian.validate(); break;
    case LearnerKind::knn: knn.validate(); break;
    case LearnerKind::ridge: ridge.validate(); break;
  }
}

namespace {

void require_fitted(bool fitted, LearnerKind kind) {
  if (!fitted) throw ConfigError(fmt::format("{} learner scored before fit", to_string(kind)));
}

class HebbianLearner final : public Learner {
 public:
  explicit HebbianLearner(HebbianConfig cfg) : cfg_(cfg) {}
  LearnerKind kind() const override { return LearnerKind::hebbian; }

  void fit(const Matrix& support, const Labels& labels, int classes) override {
    head_.weights = hebb_rule(support, one_hot(labels, classes), cfg_);
    fitted_ = true;
  }

  Matrix score(const Matrix& queries) const override {
    require_fitted(fitted_, kind());
    Matrix logits = head_.logits(queries);
    return cfg_.zscore_logits ? zscore_rows(logits) : logits;
  }

 private:
  HebbianConfig cfg_;
  HebbianHead head_;
  bool fitted_ = false;
};

class KnnLearner final : public Learner {
 public:
  explicit KnnLearner(KnnConfig cfg) : cfg_(cfg) {}
  LearnerKind kind() const override { return LearnerKind::knn; }

  void fit(const Matrix& support, const Labels& labels, int classes) override {
    if (static_cast<std::size_t>(cfg_.k) > labels.size()) {
      throw ConfigError(fmt::format("knn: k = {} exceeds the support size {}", cfg_.k, labels.size()));
    }
    support_ = support;
    labels_ = labels;
    classes_ = classes;
  }

  Matrix score(const Matrix& queries) const override {
    require_fitted(classes_ > 0, kind());
    return knn_predict(support_, labels_, queries, cfg_, classes_).scores;
  }

 private:
  KnnConfig cfg_;
  Matrix support_;
  Labels labels_;
  int classes_ = 0;
};

class RidgeLearner final : public Learner {
 public:
  explicit RidgeLearner(RidgeConfig cfg) : cfg_(cfg) {}
  LearnerKind kind() const override { return LearnerKind::ridge; }

  void fit(const Matrix& support, const Labels& labels, int classes) override {
    weights_ = ridge_fit(support, one_hot(labels, classes), cfg_);
    fitted_ = true;
  }

  Matrix score(const Matrix& queries) const override {
    require_fitted(fitted_, kind());
    if (queries.cols() != weights_.cols()) {
      throw DimensionError(fmt::format("ridge: query dim {} but weights expect {}", queries.cols(), weights_.cols()));
    }
    return queries * weights_.transpose();
  }

 private:
  RidgeConfig cfg_;
  Matrix weights_;
  bool fitted_ = false;
};

}  // namespace

std::unique_ptr<Learner> learner_for(const LearnerConfig& cfg) {
  cfg.validate();
  switch (cfg.kind) {
    case LearnerKind::hebbian: return std::make_unique<HebbianLearner>(cfg.hebbian);
    case LearnerKind::knn: return std::make_unique<KnnLearner>(cfg.knn);
    case LearnerKind::ridge: return std::make_unique<RidgeLearner>(cfg.ridge);
  }
  throw ConfigError("unknown learner kind");
}

std::vector<Matrix> layer_scores(const LearnerConfig& cfg, const Episode& ep, const std::vector<std::string>& layers) {
  if (layers.empty()) throw ConfigError("no layers selected");
  std::set<std::string> seen;
  const int classes = static_cast<int>(ep.class_map.size());
  std::vector<Matrix> out;
  out.reserve(layers.size());
  for (const auto& id : layers) {
    if (!seen.insert(id).second) throw ConfigError(fmt::format("layer '{}' listed twice", id));
    auto learner = learner_for(cfg);
    learner->fit(ep.support.layer(id), ep.support.labels, classes);
    out.push_back(learner->score(ep.query.layer(id)));
  }
  return out;
}

Prediction fuse(const std::vector<Matrix>& parts) {
  Prediction out;
  out.scores = sum_in_order(parts);
  out.labels = argmax_rows(out.scores);
  return out;
}

}  // namespace chef
