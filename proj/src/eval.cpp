#include "chef/eval.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "chef/fid.hpp"
#include "json.hpp"

using json = nlohmann::json;

namespace chef {

OutputFormat parse_output_format(std::string_view name) {
  if (name == "csv") return OutputFormat::csv;
  if (name == "json") return OutputFormat::json;
  throw ConfigError(fmt::format("unknown output format '{}' (expected csv or json)", name));
}

void RunConfig::validate() const {
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (learners.empty()) throw ConfigError("no learner configured");
  for (const auto& l : learners) l.validate();
  episode.validate();
}

AccuracySummary summarize(const std::vector<double>& accuracies) {
  if (accuracies.empty()) throw DataError("no accuracies to summarize");
  const auto e = static_cast<double>(accuracies.size());
  AccuracySummary s;
  double total = 0.0;
  for (double a : accuracies) total += a;
  s.mean = total / e;
  if (accuracies.size() < 2) {
    s.degenerate_ci = true;
    return s;
  }
  double ss = 0.0;
  for (double a : accuracies) ss += (a - s.mean) * (a - s.mean);
  s.ci95_halfwidth = 1.96 * std::sqrt(ss / (e - 1.0)) / std::sqrt(e);
  return s;
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& work) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        work(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(jobs, 1), std::max<std::size_t>(count, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!errors[i]) continue;
    const std::string prefix = fmt::format("episode {}: ", i);
    try {
      std::rethrow_exception(errors[i]);
    } catch (const ConfigError& e) {
      throw ConfigError(prefix + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError(prefix + e.what());
    } catch (const DataError& e) {
      throw DataError(prefix + e.what());
    }
  }
}

namespace {

std::vector<std::string> resolve_layers(const FeatureSet& fs, const RunConfig& cfg) {
  if (cfg.layers.empty()) return fs.layer_ids;
  for (const auto& id : cfg.layers) fs.layer(id);
  return cfg.layers;
}

template <typename Fn>
EvalReport timed(Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  EvalReport report = fn();
  report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

EvalReport base_report(const FeatureSet& fs, const RunConfig& cfg) {
  cfg.validate();
  EvalReport report;
  report.split_name = fs.split_name;
  report.layers = resolve_layers(fs, cfg);
  report.config = cfg;
  report.config.layers = report.layers;
  report.accuracies.assign(cfg.episodes, 0.0);
  report.class_maps.assign(cfg.episodes, {});
  return report;
}

EpisodeSpec spec_for(const RunConfig& cfg, std::size_t i) {
  EpisodeSpec spec = cfg.episode;
  spec.episode_index = i;
  return spec;
}

json learner_json(const LearnerConfig& l) {
  json j{{"kind", std::string(to_string(l.kind))}};
  switch (l.kind) {
    case LearnerKind::hebbian:
      j["alpha"] = l.hebbian.alpha;
      j["steps"] = l.hebbian.steps;
      j["zscore_logits"] = l.hebbian.zscore_logits;
      break;
    case LearnerKind::knn: j["k"] = l.knn.k; break;
    case LearnerKind::ridge: j["lambda"] = l.ridge.lambda; break;
  }
  return j;
}

json config_json(const EvalReport& r) {
  const RunConfig& c = r.config;
  json learners = json::array();
  for (const auto& l : c.learners) learners.push_back(learner_json(l));
  json j{{"manifest", c.manifest.string()},
         {"split", r.split_name},
         {"learners", learners},
         {"layers", r.layers},
         {"ways", c.episode.ways},
         {"shots", c.episode.shots},
         {"queries", c.episode.queries},
         {"episodes", c.episodes},
         {"seed", c.episode.master_seed}};
  j["class_ratio"] = c.episode.class_ratio ? json(*c.episode.class_ratio) : json(nullptr);
  return j;
}

json summary_json(const AccuracySummary& s) {
  return json{{"mean_accuracy", s.mean}, {"ci95_halfwidth", s.ci95_halfwidth}, {"degenerate_ci", s.degenerate_ci}};
}

json body_json(const EvalReport& r) {
  json episodes = json::array();
  for (std::size_t i = 0; i < r.accuracies.size(); ++i) {
    episodes.push_back({{"index", i}, {"class_map", r.class_maps[i]}, {"accuracy", r.accuracies[i]}});
  }
  json results = summary_json(r.summary);
  results["episodes"] = episodes;
  if (!r.columns.empty()) {
    json cols = json::array();
    for (const auto& c : r.columns) {
      json col = summary_json(c.summary);
      col["learner"] = c.learner;
      col["layer"] = c.layer;
      col["accuracies"] = c.accuracies;
      cols.push_back(col);
    }
    results["columns"] = cols;
  }
  return json{{"config", config_json(r)}, {"results", results}};
}

std::string config_comment(const EvalReport& r, std::string_view command) {
  const RunConfig& c = r.config;
  std::vector<std::string> learners;
  for (const auto& l : c.learners) learners.push_back(learner_json(l).dump());
  return fmt::format("# chef {} split={} layers={} ways={} shots={} queries={} episodes={} seed={} class_ratio={} "
                     "learners={}\n",
                     command, r.split_name, fmt::join(r.layers, ";"), c.episode.ways, c.episode.shots,
                     c.episode.queries, c.episodes, c.episode.master_seed,
                     c.episode.class_ratio ? fmt::format("{}", fmt::join(*c.episode.class_ratio, ";")) : "none",
                     fmt::join(learners, ";"));
}

}  // namespace

EvalReport run_eval(const FeatureSet& fs, const RunConfig& cfg) {
  return timed([&] {
    EvalReport report = base_report(fs, cfg);
    if (cfg.learners.size() != 1) throw ConfigError("eval takes exactly one learner");
    const LearnerConfig& learner = cfg.learners.front();
    parallel_for(cfg.episodes, cfg.jobs, [&](std::size_t i) {
      const Episode ep = sample_episode(fs, spec_for(cfg, i));
      const Prediction pred = fuse(layer_scores(learner, ep, report.layers));
      report.accuracies[i] = accuracy(pred.labels, ep.query.labels);
      report.class_maps[i] = ep.class_map;
    });
    report.summary = summarize(report.accuracies);
    return report;
  });
}

EvalReport run_eval(const RunConfig& cfg) { return run_eval(read_feature_set(cfg.manifest), cfg); }

EvalReport run_ablation(const FeatureSet& fs, const RunConfig& cfg) {
  return timed([&] {
    EvalReport report = base_report(fs, cfg);
    const std::size_t layer_count = report.layers.size();
    const std::size_t per_learner = layer_count + 1;
    for (const auto& l : cfg.learners) {
      for (std::size_t c = 0; c <= layer_count; ++c) {
        ColumnResult col;
        col.learner = std::string(to_string(l.kind));
        col.layer = c < layer_count ? report.layers[c] : "ensemble";
        col.accuracies.assign(cfg.episodes, 0.0);
        col.class_maps.assign(cfg.episodes, {});
        report.columns.push_back(std::move(col));
      }
    }

    parallel_for(cfg.episodes, cfg.jobs, [&](std::size_t i) {
      const Episode ep = sample_episode(fs, spec_for(cfg, i));
      report.class_maps[i] = ep.class_map;
      for (std::size_t li = 0; li < cfg.learners.size(); ++li) {
        const std::vector<Matrix> parts = layer_scores(cfg.learners[li], ep, report.layers);
        for (std::size_t c = 0; c <= layer_count; ++c) {
          ColumnResult& col = report.columns[li * per_learner + c];
          const std::vector<int> predicted = c < layer_count ? argmax_rows(parts[c]) : fuse(parts).labels;
          col.accuracies[i] = accuracy(predicted, ep.query.labels);
          col.class_maps[i] = ep.class_map;
        }
      }
      report.accuracies[i] = report.columns[layer_count].accuracies[i];
    });

    for (auto& col : report.columns) col.summary = summarize(col.accuracies);
    report.summary = summarize(report.accuracies);
    return report;
  });
}

EvalReport run_ablation(const RunConfig& cfg) { return run_ablation(read_feature_set(cfg.manifest), cfg); }

std::string report_body_json(const EvalReport& report) { return body_json(report).dump(2) + "\n"; }

std::string report_json(const EvalReport& report) {
  json j = body_json(report);
  j["run"] = {{"jobs", report.config.jobs}, {"wall_time_seconds", report.wall_time_seconds}};
  return j.dump(2) + "\n";
}

std::string eval_csv(const EvalReport& report) {
  std::string out = config_comment(report, "eval");
  out += "learner,layers,ways,shots,queries,episodes,mean_accuracy,ci95_halfwidth,degenerate_ci\n";
  const RunConfig& c = report.config;
  out += fmt::format("{},{},{},{},{},{},{:.6f},{:.6f},{}\n", to_string(c.learners.front().kind),
                     fmt::join(report.layers, ";"), c.episode.ways, c.episode.shots, c.episode.queries, c.episodes,
                     report.summary.mean, report.summary.ci95_halfwidth, report.summary.degenerate_ci ? 1 : 0);
  return out;
}

std::string ablation_csv(const EvalReport& report) {
  std::string out = config_comment(report, "ablate");
  out += "learner,layer,mean_accuracy,ci95_halfwidth,episodes\n";
  for (const auto& col : report.columns) {
    out += fmt::format("{},{},{:.6f},{:.6f},{}\n", col.learner, col.layer, col.summary.mean,
                       col.summary.ci95_halfwidth, col.accuracies.size());
  }
  return out;
}

FidReport run_fid(const std::filesystem::path& manifest_a, const std::filesystem::path& manifest_b,
                  const std::string& layer_id) {
  const FeatureSet a = read_feature_set(manifest_a);
  const FeatureSet b = read_feature_set(manifest_b);
  FidReport r;
  r.layer = layer_id;
  r.split_a = a.split_name;
  r.split_b = b.split_name;
  r.samples_a = a.rows();
  r.samples_b = b.rows();
  r.dim = a.layer(layer_id).cols();
  r.fid = fid_between_sets(a, b, layer_id);
  return r;
}

std::string fid_csv(const FidReport& r) {
  return fmt::format("layer,split_a,split_b,samples_a,samples_b,dim,fid\n{},{},{},{},{},{},{:.10g}\n", r.layer,
                     r.split_a, r.split_b, r.samples_a, r.samples_b, r.dim, r.fid);
}

std::string fid_json(const FidReport& r) {
  return json{{"layer", r.layer},         {"split_a", r.split_a},     {"split_b", r.split_b},
              {"samples_a", r.samples_a}, {"samples_b", r.samples_b}, {"dim", r.dim},
              {"fid", r.fid}}
             .dump(2) +
         "\n";
}

std::string inspect_feature_set(const std::filesystem::path& manifest_path) {
  const FeatureSet fs = read_feature_set(manifest_path);
  std::map<int, std::size_t> counts;
  for (int label : fs.labels) ++counts[label];
  std::string out = fmt::format("split: {}\nsamples: {}\nclasses: {}\nlayers: {}\n", fs.split_name, fs.rows(),
                                fs.class_count(), fs.layer_ids.size());
  for (std::size_t l = 0; l < fs.layer_ids.size(); ++l) {
    out += fmt::format("  {:<12} dim {}\n", fs.layer_ids[l], fs.layers[l].cols());
  }
  out += "class counts:\n";
  for (int c = 0; c < fs.class_count(); ++c) {
    out += fmt::format("  {:<12} {}\n", fs.class_names[static_cast<std::size_t>(c)], counts[c]);
  }
  return out;
}

}  // namespace chef
