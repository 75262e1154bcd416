#pragma once

// Desk-scale feature source: Gaussian class clusters with optional domain
// shift, a small ReLU MLP trained on them, and export of every layer's
// activations into the feature store.

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "chef/feature_store.hpp"

namespace chef {

/// Class frequencies change; class-conditional inputs do not.
struct PriorShift {
  std::vector<double> class_weights;
};

/// x -> scale * R x + translation * 1, with R rotating every coordinate pair
/// (0,1), (2,3), ... by rotation_angle radians. Labels are untouched.
struct CovariateShift {
  double rotation_angle = 0.0;
  double translation = 0.0;
  double scale = 1.0;
};

/// A fraction of labels is reassigned to a different class.
struct ConceptShift {
  double flip_fraction = 0.0;
};

using DomainShift = std::variant<std::monostate, PriorShift, CovariateShift, ConceptShift>;

struct SyntheticSpec {
  int classes = 10;
  int input_dim = 16;
  int samples_per_class = 100;
  double cluster_spread = 1.0;
  double center_scale = 3.0;  // std of the class-center coordinates
  DomainShift shift;
  std::uint64_t seed = 0;           // fixes class centers
  std::uint64_t sample_stream = 0;  // independent draws around the same centers

  void validate() const;
};

struct SyntheticData {
  Matrix inputs;
  Labels labels;
  Matrix centers;  // classes x input_dim, before any shift
};

/// Unshifted class centers for spec.seed.
Matrix class_centers(const SyntheticSpec& spec);

SyntheticData gen_synthetic(const SyntheticSpec& spec);

Matrix apply_covariate_shift(const Matrix& inputs, const CovariateShift& shift);
Matrix invert_covariate_shift(const Matrix& inputs, const CovariateShift& shift);

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;
};

struct MlpBackbone {
  std::vector<DenseLayer> layers;  // hidden layers (ReLU) followed by the output layer

  std::vector<int> dims() const;  // input, hidden..., output
  std::size_t hidden_count() const { return layers.empty() ? 0 : layers.size() - 1; }
  /// Post-ReLU activations of every hidden layer followed by output logits.
  std::vector<Matrix> activations(const Matrix& inputs) const;
  Matrix logits(const Matrix& inputs) const;
  /// Ids matching activations(): h1..hN, out.
  std::vector<std::string> layer_ids() const;
};

/// Weights and biases uniform in +-1/sqrt(fan_in).
MlpBackbone init_backbone(const std::vector<int>& dims, std::uint64_t seed);

struct TrainConfig {
  std::vector<int> hidden = {64, 64, 32};
  int epochs = 200;
  double lr = 0.05;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  MlpBackbone backbone;
  double train_accuracy = 0.0;
  double final_loss = 0.0;  // mean cross-entropy on the full training set
};

/// Mini-batch gradient descent on mean softmax cross-entropy, reshuffling
/// every epoch.
TrainResult train_backbone(const Matrix& inputs, const Labels& labels, const TrainConfig& cfg);

FeatureSet backbone_features(const MlpBackbone& bb, const Matrix& inputs, const Labels& labels,
                             std::vector<std::string> class_names, std::string split_name);

Manifest export_features(const MlpBackbone& bb, const Matrix& inputs, const Labels& labels,
                         const std::filesystem::path& dir, const std::string& split_name = "source");

std::vector<std::string> default_class_names(int classes);

struct ToyGenConfig {
  SyntheticSpec source;
  TrainConfig train;
  CovariateShift covariate{1.0, 1.0, 1.5};
  PriorShift prior;  // empty: weights proportional to class index + 1
  ConceptShift concept_shift{0.2};
};

struct ToyGenSummary {
  double train_accuracy = 0.0;
  std::vector<std::pair<std::string, std::filesystem::path>> domains;  // name -> manifest
};

/// Builds the source domain, trains the backbone on it and exports source,
/// prior-, covariate- and concept-shifted domains to out_dir/<domain>/.
ToyGenSummary run_toy_gen(const ToyGenConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace chef
