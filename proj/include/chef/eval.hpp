#pragma once

// Episode-batch evaluation: accuracy with normal-approximation 95% CIs,
// paired per-layer ablations and FID reports.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "chef/episode.hpp"
#include "chef/learner.hpp"

namespace chef {

enum class OutputFormat { csv, json };

OutputFormat parse_output_format(std::string_view name);

struct RunConfig {
  std::filesystem::path manifest;
  std::vector<LearnerConfig> learners{LearnerConfig{}};  // run_eval uses exactly one
  std::vector<std::string> layers;                       // empty: every layer of the set
  EpisodeSpec episode;  // episode_index is ignored; episodes 0..episodes-1 are drawn
  std::size_t episodes = 800;
  std::filesystem::path output;
  OutputFormat format = OutputFormat::csv;
  std::size_t jobs = 1;

  void validate() const;
};

struct AccuracySummary {
  double mean = 0.0;
  double ci95_halfwidth = 0.0;
  bool degenerate_ci = false;  // fewer than two episodes
};

/// Mean and 1.96 * s / sqrt(E) with the (E - 1) sample standard deviation.
AccuracySummary summarize(const std::vector<double>& accuracies);

struct ColumnResult {
  std::string learner;
  std::string layer;  // a layer id, or "ensemble" for the fused column
  std::vector<double> accuracies;
  std::vector<std::vector<int>> class_maps;  // the episodes this column was scored on
  AccuracySummary summary;
};

struct EvalReport {
  std::string split_name;
  std::vector<std::string> layers;
  RunConfig config;

  // Fused prediction over `layers` with the first learner.
  std::vector<double> accuracies;
  AccuracySummary summary;
  std::vector<std::vector<int>> class_maps;

  // Ablation only: per learner, one column per layer followed by "ensemble".
  std::vector<ColumnResult> columns;

  double wall_time_seconds = 0.0;
};

/// Calls work(i) for i in [0, count) on up to `jobs` threads. If any call
/// throws, the exception from the lowest index is rethrown with the index
/// prepended, preserving its error family.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& work);

EvalReport run_eval(const FeatureSet& fs, const RunConfig& cfg);
EvalReport run_eval(const RunConfig& cfg);

EvalReport run_ablation(const FeatureSet& fs, const RunConfig& cfg);
EvalReport run_ablation(const RunConfig& cfg);

/// Everything except run metadata (thread count, wall time); identical for
/// identical data and configuration.
std::string report_body_json(const EvalReport& report);
std::string report_json(const EvalReport& report);
std::string eval_csv(const EvalReport& report);
std::string ablation_csv(const EvalReport& report);

struct FidReport {
  std::string layer;
  std::string split_a, split_b;
  std::size_t samples_a = 0, samples_b = 0;
  Eigen::Index dim = 0;
  double fid = 0.0;
};

FidReport run_fid(const std::filesystem::path& manifest_a, const std::filesystem::path& manifest_b,
                  const std::string& layer_id);
std::string fid_csv(const FidReport& report);
std::string fid_json(const FidReport& report);

/// Human-readable manifest summary; loading validates every file.
std::string inspect_feature_set(const std::filesystem::path& manifest_path);

}  // namespace chef
