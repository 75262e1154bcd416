#pragma once

// Seeded N-shot K-way episode sampling.
//
// Episode i of a run is a pure function of (feature set, spec, master seed,
// i): its random stream is keyed by (master_seed, episode_index), so
// episodes can be drawn in any order or on any number of threads.

#include <cstdint>
#include <iterator>
#include <optional>
#include <vector>

#include "chef/feature_store.hpp"

namespace chef {

struct EpisodeSpec {
  int ways = 5;
  int shots = 5;
  int queries = 5;
  // Per-class support counts, indexed by episode label. When present it
  // replaces `shots` and its sum is the support size.
  std::optional<std::vector<int>> class_ratio;
  std::uint64_t master_seed = 0;
  std::uint64_t episode_index = 0;

  void validate() const;
  int support_count(int episode_label) const;
  int support_size() const;
};

struct Episode {
  LabeledLayers support;  // labels are episode labels 0..K-1
  LabeledLayers query;
  std::vector<int> class_map;  // episode label -> original class index
  std::vector<std::size_t> support_rows;  // original sample indices
  std::vector<std::size_t> query_rows;
  std::uint64_t index = 0;
};

Episode sample_episode(const FeatureSet& fs, const EpisodeSpec& spec);

/// Lazily evaluated sequence of episodes 0..count-1 sharing base_spec.
/// Holds a reference to fs, which must outlive the stream.
class EpisodeStream {
 public:
  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Episode;
    using difference_type = std::ptrdiff_t;

    iterator(const EpisodeStream* stream, std::size_t pos) : stream_(stream), pos_(pos) {}
    Episode operator*() const { return (*stream_)[pos_]; }
    iterator& operator++() {
      ++pos_;
      return *this;
    }
    bool operator==(const iterator& other) const { return pos_ == other.pos_; }

   private:
    const EpisodeStream* stream_;
    std::size_t pos_;
  };

  EpisodeStream(const FeatureSet& fs, EpisodeSpec base_spec, std::size_t count);

  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  Episode operator[](std::size_t i) const;
  iterator begin() const { return {this, 0}; }
  iterator end() const { return {this, count_}; }

 private:
  const FeatureSet* fs_;
  EpisodeSpec spec_;
  std::size_t count_;
};

EpisodeStream episode_stream(const FeatureSet& fs, const EpisodeSpec& base_spec, std::size_t count);

}  // namespace chef
