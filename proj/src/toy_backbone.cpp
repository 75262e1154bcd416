#include "chef/toy_backbone.hpp"

#include <numeric>

#include <fmt/format.h>

#include "chef/hebbian.hpp"
#include "chef/rng.hpp"

namespace chef {

namespace {

enum Stream : std::uint64_t { kCenters = 0, kShift = 1, kInit = 2, kShuffle = 3, kSamples = 16 };

Matrix relu(const Matrix& m) { return m.cwiseMax(0.0); }

Matrix affine(const Matrix& x, const DenseLayer& layer) {
  Matrix out = x * layer.weights.transpose();
  out.rowwise() += layer.bias.transpose();
  return out;
}

int sample_class(CounterRng& rng, const std::vector<double>& cumulative) {
  const double u = rng.uniform() * cumulative.back();
  for (std::size_t c = 0; c < cumulative.size(); ++c) {
    if (u < cumulative[c]) return static_cast<int>(c);
  }
  return static_cast<int>(cumulative.size() - 1);
}

}  // namespace

void SyntheticSpec::validate() const {
  if (classes < 2) throw ConfigError(fmt::format("need >= 2 classes, got {}", classes));
  if (input_dim < 1) throw ConfigError(fmt::format("input_dim must be >= 1, got {}", input_dim));
  if (samples_per_class < 1) throw ConfigError(fmt::format("samples_per_class must be >= 1, got {}", samples_per_class));
  if (!(cluster_spread > 0.0)) throw ConfigError("cluster_spread must be > 0");
  if (!(center_scale > 0.0)) throw ConfigError("center_scale must be > 0");
  if (const auto* prior = std::get_if<PriorShift>(&shift)) {
    if (prior->class_weights.size() != static_cast<std::size_t>(classes)) {
      throw ConfigError(fmt::format("prior shift has {} weights for {} classes", prior->class_weights.size(), classes));
    }
    double total = 0.0;
    for (double w : prior->class_weights) {
      if (!(w > 0.0)) throw ConfigError("prior shift weights must be positive");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError(fmt::format("prior shift weights sum to {}, not 1", total));
  } else if (const auto* cov = std::get_if<CovariateShift>(&shift)) {
    if (!(cov->scale > 0.0)) throw ConfigError("covariate shift scale must be > 0");
  } else if (const auto* flip = std::get_if<ConceptShift>(&shift)) {
    if (!(flip->flip_fraction >= 0.0 && flip->flip_fraction < 0.5)) {
      throw ConfigError(fmt::format("flip fraction must lie in [0, 0.5), got {}", flip->flip_fraction));
    }
  }
}

Matrix class_centers(const SyntheticSpec& spec) {
  CounterRng rng(spec.seed, kCenters);
  Matrix centers(spec.classes, spec.input_dim);
  for (Eigen::Index c = 0; c < centers.rows(); ++c)
    for (Eigen::Index d = 0; d < centers.cols(); ++d) centers(c, d) = spec.center_scale * rng.normal();
  return centers;
}

Matrix apply_covariate_shift(const Matrix& inputs, const CovariateShift& shift) {
  const double c = std::cos(shift.rotation_angle), s = std::sin(shift.rotation_angle);
  Matrix out = inputs;
  for (Eigen::Index d = 0; d + 1 < inputs.cols(); d += 2) {
    out.col(d) = c * inputs.col(d) - s * inputs.col(d + 1);
    out.col(d + 1) = s * inputs.col(d) + c * inputs.col(d + 1);
  }
  out *= shift.scale;
  out.array() += shift.translation;
  return out;
}

Matrix invert_covariate_shift(const Matrix& inputs, const CovariateShift& shift) {
  Matrix x = (inputs.array() - shift.translation).matrix() / shift.scale;
  const double c = std::cos(shift.rotation_angle), s = std::sin(shift.rotation_angle);
  Matrix out = x;
  for (Eigen::Index d = 0; d + 1 < x.cols(); d += 2) {
    out.col(d) = c * x.col(d) + s * x.col(d + 1);
    out.col(d + 1) = -s * x.col(d) + c * x.col(d + 1);
  }
  return out;
}

SyntheticData gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticData data;
  data.centers = class_centers(spec);
  const auto n = static_cast<Eigen::Index>(spec.classes) * spec.samples_per_class;
  data.inputs.resize(n, spec.input_dim);
  data.labels.resize(static_cast<std::size_t>(n));

  CounterRng noise(spec.seed, kSamples + spec.sample_stream);
  CounterRng shift_rng(spec.seed ^ 0x5eedULL, kShift + spec.sample_stream);

  std::vector<double> cumulative;
  if (const auto* prior = std::get_if<PriorShift>(&spec.shift)) {
    cumulative.resize(prior->class_weights.size());
    std::partial_sum(prior->class_weights.begin(), prior->class_weights.end(), cumulative.begin());
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = cumulative.empty() ? static_cast<int>(i / spec.samples_per_class) : sample_class(shift_rng, cumulative);
    data.labels[static_cast<std::size_t>(i)] = label;
    for (Eigen::Index d = 0; d < data.inputs.cols(); ++d) {
      data.inputs(i, d) = data.centers(label, d) + spec.cluster_spread * noise.normal();
    }
  }

  if (const auto* cov = std::get_if<CovariateShift>(&spec.shift)) {
    data.inputs = apply_covariate_shift(data.inputs, *cov);
  } else if (const auto* flip = std::get_if<ConceptShift>(&spec.shift)) {
    const auto flips = static_cast<std::size_t>(std::floor(flip->flip_fraction * static_cast<double>(n)));
    std::vector<std::size_t> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    shift_rng.partial_shuffle(std::span<std::size_t>(rows), flips);
    for (std::size_t j = 0; j < flips; ++j) {
      int& label = data.labels[rows[j]];
      label = static_cast<int>((static_cast<std::uint64_t>(label) + 1 + shift_rng.below(spec.classes - 1)) %
                               static_cast<std::uint64_t>(spec.classes));
    }
  }
  return data;
}

std::vector<int> MlpBackbone::dims() const {
  std::vector<int> out;
  if (layers.empty()) return out;
  out.push_back(static_cast<int>(layers.front().weights.cols()));
  for (const auto& l : layers) out.push_back(static_cast<int>(l.weights.rows()));
  return out;
}

std::vector<Matrix> MlpBackbone::activations(const Matrix& inputs) const {
  if (layers.empty()) throw ConfigError("backbone has no layers");
  if (inputs.cols() != layers.front().weights.cols()) {
    throw DimensionError(fmt::format("backbone expects {} inputs, got {}", layers.front().weights.cols(), inputs.cols()));
  }
  std::vector<Matrix> out;
  Matrix h = inputs;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix a = affine(h, layers[l]);
    h = l + 1 < layers.size() ? relu(a) : a;
    out.push_back(h);
  }
  return out;
}

Matrix MlpBackbone::logits(const Matrix& inputs) const { return activations(inputs).back(); }

std::vector<std::string> MlpBackbone::layer_ids() const {
  std::vector<std::string> ids;
  for (std::size_t l = 0; l < hidden_count(); ++l) ids.push_back(fmt::format("h{}", l + 1));
  ids.emplace_back("out");
  return ids;
}

MlpBackbone init_backbone(const std::vector<int>& dims, std::uint64_t seed) {
  if (dims.size() < 2) throw ConfigError("backbone needs an input and an output dimension");
  for (int d : dims) {
    if (d < 1) throw ConfigError(fmt::format("layer widths must be >= 1, got {}", d));
  }
  CounterRng rng(seed, kInit);
  MlpBackbone bb;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    DenseLayer layer{Matrix(dims[l + 1], dims[l]), Vector(dims[l + 1])};
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = rng.uniform(-bound, bound);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = rng.uniform(-bound, bound);
    bb.layers.push_back(std::move(layer));
  }
  return bb;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be finite and >= 0");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  for (int h : hidden) {
    if (h < 1) throw ConfigError("hidden widths must be >= 1");
  }
}

TrainResult train_backbone(const Matrix& inputs, const Labels& labels, const TrainConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(inputs.rows()) != labels.size() || labels.empty()) {
    throw DimensionError(fmt::format("training set has {} inputs and {} labels", inputs.rows(), labels.size()));
  }
  const int classes = *std::max_element(labels.begin(), labels.end()) + 1;
  if (classes < 2) throw DataError("training needs at least 2 classes");

  std::vector<int> dims{static_cast<int>(inputs.cols())};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(classes);

  TrainResult result{init_backbone(dims, cfg.seed), 0.0, 0.0};
  MlpBackbone& bb = result.backbone;
  const Matrix targets = one_hot(labels, classes);
  const std::size_t depth = bb.layers.size();

  CounterRng rng(cfg.seed, kShuffle);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(inputs.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<Eigen::Index>(order));
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const auto batch = static_cast<Eigen::Index>(stop - start);
      Matrix x(batch, inputs.cols()), y(batch, classes);
      for (Eigen::Index i = 0; i < batch; ++i) {
        x.row(i) = inputs.row(order[start + static_cast<std::size_t>(i)]);
        y.row(i) = targets.row(order[start + static_cast<std::size_t>(i)]);
      }

      // Forward, keeping layer inputs and pre-activations.
      std::vector<Matrix> layer_in{x}, pre;
      for (std::size_t l = 0; l < depth; ++l) {
        pre.push_back(affine(layer_in.back(), bb.layers[l]));
        if (l + 1 < depth) layer_in.push_back(relu(pre.back()));
      }

      Matrix grad = ce_grad_wrt_logits(y, pre.back()) / static_cast<double>(batch);
      for (std::size_t l = depth; l-- > 0;) {
        const Matrix grad_w = grad.transpose() * layer_in[l];
        const Vector grad_b = grad.colwise().sum().transpose();
        if (l > 0) {
          grad = (grad * bb.layers[l].weights).cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
        }
        bb.layers[l].weights -= cfg.lr * grad_w;
        bb.layers[l].bias -= cfg.lr * grad_b;
      }
    }
    const double loss = summed_cross_entropy(targets, bb.logits(inputs)) / static_cast<double>(inputs.rows());
    if (!std::isfinite(loss)) throw NumericalError(fmt::format("backbone training diverged in epoch {}", epoch + 1));
  }

  const Matrix logits = bb.logits(inputs);
  result.final_loss = summed_cross_entropy(targets, logits) / static_cast<double>(inputs.rows());
  result.train_accuracy = accuracy(argmax_rows(logits), labels);
  return result;
}

FeatureSet backbone_features(const MlpBackbone& bb, const Matrix& inputs, const Labels& labels,
                             std::vector<std::string> class_names, std::string split_name) {
  FeatureSet fs;
  fs.split_name = std::move(split_name);
  fs.class_names = std::move(class_names);
  fs.layer_ids = bb.layer_ids();
  fs.layers = bb.activations(inputs);
  fs.labels = labels;
  fs.validate();
  return fs;
}

std::vector<std::string> default_class_names(int classes) {
  std::vector<std::string> names;
  for (int c = 0; c < classes; ++c) names.push_back(fmt::format("c{}", c));
  return names;
}

Manifest export_features(const MlpBackbone& bb, const Matrix& inputs, const Labels& labels,
                         const std::filesystem::path& dir, const std::string& split_name) {
  const int classes = static_cast<int>(bb.layers.back().weights.rows());
  return write_feature_set(backbone_features(bb, inputs, labels, default_class_names(classes), split_name), dir);
}

ToyGenSummary run_toy_gen(const ToyGenConfig& cfg, const std::filesystem::path& out_dir) {
  SyntheticSpec source = cfg.source;
  source.shift = std::monostate{};
  const SyntheticData src = gen_synthetic(source);
  const TrainResult trained = train_backbone(src.inputs, src.labels, cfg.train);

  PriorShift prior = cfg.prior;
  if (prior.class_weights.empty()) {
    const double total = source.classes * (source.classes + 1) / 2.0;
    for (int c = 0; c < source.classes; ++c) prior.class_weights.push_back((c + 1) / total);
  }

  ToyGenSummary summary;
  summary.train_accuracy = trained.train_accuracy;
  const std::vector<std::pair<std::string, DomainShift>> domains{
      {"source", std::monostate{}}, {"prior", prior}, {"covariate", cfg.covariate}, {"concept", cfg.concept_shift}};
  for (const auto& [name, shift] : domains) {
    SyntheticSpec spec = source;
    spec.shift = shift;
    spec.sample_stream = name == "source" ? 0 : 1;
    const SyntheticData data = name == "source" ? src : gen_synthetic(spec);
    export_features(trained.backbone, data.inputs, data.labels, out_dir / name, name);
    summary.domains.emplace_back(name, out_dir / name / Manifest::kFileName);
  }
  return summary;
}

}  // namespace chef
