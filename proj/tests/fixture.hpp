#pragma once

// The in-repo toy fixture: a small backbone trained on synthetic clusters and
// its four exported domains, regenerated once per test process.

#include <map>

#include "chef/toy_backbone.hpp"
#include "test_util.hpp"

namespace chef::test {

inline ToyGenConfig fixture_config() {
  ToyGenConfig cfg;
  cfg.source.classes = 10;
  cfg.source.input_dim = 16;
  cfg.source.samples_per_class = 60;
  cfg.source.seed = 7;
  cfg.train.hidden = {32, 32, 16};
  cfg.train.epochs = 60;
  cfg.train.seed = 7;
  return cfg;
}

inline const std::filesystem::path& fixture_dir() {
  static const std::filesystem::path dir = [] {
    auto d = scratch_dir("fixture");
    run_toy_gen(fixture_config(), d);
    return d;
  }();
  return dir;
}

inline const FeatureSet& fixture_domain(const std::string& name) {
  static std::map<std::string, FeatureSet> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, read_feature_set(fixture_dir() / name)).first;
  return it->second;
}

}  // namespace chef::test
