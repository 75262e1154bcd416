#include "doctest.h"

#include <map>
#include <set>

#include "chef/episode.hpp"
#include "test_util.hpp"

using namespace chef;

namespace {

// Sample i of class c carries the feature value 1000 * c + i so rows can be
// traced back after sampling.
FeatureSet traceable_set(int classes, int per_class) {
  FeatureSet s;
  s.split_name = "trace";
  for (int c = 0; c < classes; ++c) s.class_names.push_back("k" + std::to_string(c));
  s.layer_ids = {"id", "twice"};
  const int n = classes * per_class;
  Matrix id(n, 1), twice(n, 2);
  for (int i = 0; i < n; ++i) {
    s.labels.push_back(i % classes);
    id(i, 0) = i;
    twice(i, 0) = 2 * i;
    twice(i, 1) = -i;
  }
  s.layers = {id, twice};
  return s;
}

void check_contract(const FeatureSet& fs, const EpisodeSpec& spec, const Episode& ep) {
  const auto k = static_cast<std::size_t>(spec.ways);
  REQUIRE(ep.class_map.size() == k);
  CHECK(std::set<int>(ep.class_map.begin(), ep.class_map.end()).size() == k);

  std::set<std::size_t> support(ep.support_rows.begin(), ep.support_rows.end());
  CHECK(support.size() == ep.support_rows.size());
  for (std::size_t r : ep.query_rows) CHECK(support.count(r) == 0);

  std::map<int, int> support_counts, query_counts;
  for (std::size_t i = 0; i < ep.support_rows.size(); ++i) {
    const int label = ep.support.labels[i];
    ++support_counts[label];
    CHECK(fs.labels[ep.support_rows[i]] == ep.class_map[static_cast<std::size_t>(label)]);
    CHECK(ep.support.layers[0](static_cast<Eigen::Index>(i), 0) == static_cast<double>(ep.support_rows[i]));
  }
  for (std::size_t i = 0; i < ep.query_rows.size(); ++i) {
    const int label = ep.query.labels[i];
    ++query_counts[label];
    CHECK(fs.labels[ep.query_rows[i]] == ep.class_map[static_cast<std::size_t>(label)]);
    CHECK(ep.query.layers[1](static_cast<Eigen::Index>(i), 1) == -static_cast<double>(ep.query_rows[i]));
  }
  for (int label = 0; label < spec.ways; ++label) {
    CHECK(support_counts[label] == spec.support_count(label));
    CHECK(query_counts[label] == spec.queries);
  }
}

}  // namespace

TEST_CASE("5-way 5-shot episode has 25 support and 25 query rows") {
  const FeatureSet fs = traceable_set(10, 20);
  EpisodeSpec spec;
  spec.master_seed = 42;
  const Episode ep = sample_episode(fs, spec);
  CHECK(ep.support.rows() == 25);
  CHECK(ep.query.rows() == 25);
  CHECK(ep.support.layers[1].rows() == 25);
  check_contract(fs, spec, ep);
}

TEST_CASE("class ratio 5/45 builds an imbalanced support set") {
  const FeatureSet fs = traceable_set(4, 60);
  EpisodeSpec spec;
  spec.ways = 2;
  spec.class_ratio = std::vector<int>{5, 45};
  for (std::uint64_t i = 0; i < 50; ++i) {
    spec.episode_index = i;
    const Episode ep = sample_episode(fs, spec);
    CHECK(ep.support.rows() == 50);
    CHECK(std::count(ep.support.labels.begin(), ep.support.labels.end(), 0) == 5);
    CHECK(std::count(ep.support.labels.begin(), ep.support.labels.end(), 1) == 45);
    CHECK(ep.query.rows() == 10);
    check_contract(fs, spec, ep);
  }
}

TEST_CASE("sampling is deterministic per episode index") {
  const FeatureSet fs = traceable_set(10, 20);
  EpisodeSpec spec;
  spec.master_seed = 7;
  spec.episode_index = 3;
  const Episode a = sample_episode(fs, spec), b = sample_episode(fs, spec);
  CHECK(a.support_rows == b.support_rows);
  CHECK(a.query_rows == b.query_rows);
  CHECK(a.class_map == b.class_map);
  spec.episode_index = 4;
  CHECK(sample_episode(fs, spec).support_rows != a.support_rows);
  spec.episode_index = 3;
  spec.master_seed = 8;
  CHECK(sample_episode(fs, spec).support_rows != a.support_rows);
}

TEST_CASE("episode streams") {
  const FeatureSet fs = traceable_set(10, 20);
  EpisodeSpec spec;
  spec.master_seed = 99;

  CHECK(episode_stream(fs, spec, 0).empty());

  const EpisodeStream first = episode_stream(fs, spec, 10), second = episode_stream(fs, spec, 10);
  CHECK(first[7].support_rows == second[7].support_rows);
  CHECK(first[7].index == 7);

  // Serial consumption agrees with random access in reverse.
  std::vector<std::vector<std::size_t>> serial;
  for (const Episode& ep : first) serial.push_back(ep.query_rows);
  for (std::size_t i = first.size(); i-- > 0;) CHECK(first[i].query_rows == serial[i]);

  std::size_t n = 0;
  for (const Episode& ep : episode_stream(fs, spec, 800)) {
    check_contract(fs, spec, ep);
    ++n;
  }
  CHECK(n == 800);
}

TEST_CASE("class selection is close to uniform over 10000 episodes") {
  const FeatureSet fs = traceable_set(10, 12);
  EpisodeSpec spec;
  spec.master_seed = 2024;
  std::vector<int> hits(10, 0);
  for (const Episode& ep : episode_stream(fs, spec, 10000)) {
    for (int c : ep.class_map) ++hits[static_cast<std::size_t>(c)];
  }
  // Each class is picked with probability 1/2 per episode.
  for (int h : hits) {
    CHECK(h >= 4750);
    CHECK(h <= 5250);
  }
}

TEST_CASE("sampler errors") {
  const FeatureSet fs = traceable_set(4, 8);
  EpisodeSpec spec;
  CHECK_THROWS_WITH_AS(sample_episode(fs, spec), doctest::Contains("needs 5 classes"), DataError);
  spec.ways = 3;
  spec.shots = 5;
  spec.queries = 5;
  CHECK_THROWS_WITH_AS(sample_episode(fs, spec), doctest::Contains("has 8 samples"), DataError);

  EpisodeSpec bad;
  bad.ways = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = EpisodeSpec{};
  bad.queries = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = EpisodeSpec{};
  bad.class_ratio = std::vector<int>{1, 2};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.ways = 2;
  bad.class_ratio = std::vector<int>{0, 2};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
