#include "chef/episode.hpp"

#include <numeric>

#include <fmt/format.h>

#include "chef/rng.hpp"

namespace chef {

void EpisodeSpec::validate() const {
  if (ways < 2) throw ConfigError(fmt::format("ways must be >= 2, got {}", ways));
  if (queries < 1) throw ConfigError(fmt::format("queries per class must be >= 1, got {}", queries));
  if (class_ratio) {
    if (class_ratio->size() != static_cast<std::size_t>(ways)) {
      throw ConfigError(fmt::format("class ratio has {} entries for {} ways", class_ratio->size(), ways));
    }
    for (int c : *class_ratio) {
      if (c < 1) throw ConfigError(fmt::format("class ratio entries must be >= 1, got {}", c));
    }
  } else if (shots < 1) {
    throw ConfigError(fmt::format("shots must be >= 1, got {}", shots));
  }
}

int EpisodeSpec::support_count(int episode_label) const {
  return class_ratio ? (*class_ratio)[static_cast<std::size_t>(episode_label)] : shots;
}

int EpisodeSpec::support_size() const {
  return class_ratio ? std::accumulate(class_ratio->begin(), class_ratio->end(), 0) : shots * ways;
}

namespace {

LabeledLayers gather(const FeatureSet& fs, const std::vector<std::size_t>& rows, const Labels& labels) {
  LabeledLayers out;
  out.layer_ids = fs.layer_ids;
  out.labels = labels;
  out.layers.reserve(fs.layers.size());
  for (const Matrix& z : fs.layers) {
    Matrix picked(static_cast<Eigen::Index>(rows.size()), z.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      picked.row(static_cast<Eigen::Index>(i)) = z.row(static_cast<Eigen::Index>(rows[i]));
    }
    out.layers.push_back(std::move(picked));
  }
  return out;
}

}  // namespace

Episode sample_episode(const FeatureSet& fs, const EpisodeSpec& spec) {
  spec.validate();
  const int class_count = fs.class_count();
  if (class_count < spec.ways) {
    throw DataError(fmt::format("episode needs {} classes but the feature set has {}", spec.ways, class_count));
  }

  CounterRng rng(spec.master_seed, spec.episode_index);

  std::vector<int> classes(static_cast<std::size_t>(class_count));
  std::iota(classes.begin(), classes.end(), 0);
  rng.partial_shuffle(std::span<int>(classes), static_cast<std::size_t>(spec.ways));

  Episode ep;
  ep.index = spec.episode_index;
  ep.class_map.assign(classes.begin(), classes.begin() + spec.ways);

  Labels support_labels, query_labels;
  for (int label = 0; label < spec.ways; ++label) {
    const int cls = ep.class_map[static_cast<std::size_t>(label)];
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < fs.labels.size(); ++i) {
      if (fs.labels[i] == cls) members.push_back(i);
    }
    const auto shots = static_cast<std::size_t>(spec.support_count(label));
    const auto queries = static_cast<std::size_t>(spec.queries);
    if (members.size() < shots + queries) {
      throw DataError(fmt::format("class {} ('{}') has {} samples; episode needs {} support + {} query", cls,
                                  fs.class_names[static_cast<std::size_t>(cls)], members.size(), shots, queries));
    }
    rng.partial_shuffle(std::span<std::size_t>(members), shots + queries);
    ep.support_rows.insert(ep.support_rows.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(shots));
    ep.query_rows.insert(ep.query_rows.end(), members.begin() + static_cast<std::ptrdiff_t>(shots),
                         members.begin() + static_cast<std::ptrdiff_t>(shots + queries));
    support_labels.insert(support_labels.end(), shots, label);
    query_labels.insert(query_labels.end(), queries, label);
  }

  ep.support = gather(fs, ep.support_rows, support_labels);
  ep.query = gather(fs, ep.query_rows, query_labels);
  return ep;
}

EpisodeStream::EpisodeStream(const FeatureSet& fs, EpisodeSpec base_spec, std::size_t count)
    : fs_(&fs), spec_(std::move(base_spec)), count_(count) {
  spec_.validate();
}

Episode EpisodeStream::operator[](std::size_t i) const {
  EpisodeSpec spec = spec_;
  spec.episode_index = i;
  return sample_episode(*fs_, spec);
}

EpisodeStream episode_stream(const FeatureSet& fs, const EpisodeSpec& base_spec, std::size_t count) {
  return EpisodeStream(fs, base_spec, count);
}

}  // namespace chef
