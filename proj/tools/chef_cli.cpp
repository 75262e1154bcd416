// chef: toy feature generation, few-shot evaluation, layer ablation, FID and
// manifest inspection over feature-store directories.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>

#include "CLI11.hpp"

#include "chef/eval.hpp"
#include "chef/fid.hpp"
#include "chef/toy_backbone.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct EvalFlags {
  std::string manifest;
  std::vector<std::string> learners{"hebbian"};
  std::vector<std::string> layers;
  int ways = 5, shots = 5, queries = 5;
  std::size_t episodes = 800;
  std::uint64_t seed = 0;
  double alpha = 0.01;
  int steps = 400;
  bool zscore = false;
  int k = 5;
  double lambda = 1.0;
  std::vector<int> class_ratio;
  std::string format = "csv";
  std::string out;
  std::size_t jobs = 1;
};

void add_eval_flags(CLI::App* cmd, EvalFlags& f, bool many_learners) {
  cmd->add_option("--manifest", f.manifest, "Feature-store manifest (or its directory)")->required();
  auto* learner = cmd->add_option("--learner", f.learners,
                                  many_learners ? "Comma-separated learners: hebbian, knn, ridge"
                                                : "Learner: hebbian, knn or ridge");
  learner->delimiter(',');
  if (!many_learners) learner->expected(1);
  cmd->add_option("--layers", f.layers, "Comma-separated layer ids (default: all)")->delimiter(',');
  cmd->add_option("--ways", f.ways, "Classes per episode (K)")->capture_default_str();
  cmd->add_option("--shots", f.shots, "Support samples per class (N); presets 1, 5, 20, 50")->capture_default_str();
  cmd->add_option("--queries", f.queries, "Query samples per class")->capture_default_str();
  cmd->add_option("--episodes", f.episodes, "Number of episodes")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Master seed")->capture_default_str();
  cmd->add_option("--alpha", f.alpha, "Hebbian learning rate")->capture_default_str();
  cmd->add_option("--steps", f.steps, "Hebb rule steps")->capture_default_str();
  cmd->add_flag("--zscore-logits", f.zscore, "Z-score each layer's Hebbian logits before summing");
  cmd->add_option("--k", f.k, "Neighbours for knn")->capture_default_str();
  cmd->add_option("--lambda", f.lambda, "Ridge regularisation")->capture_default_str();
  cmd->add_option("--class-ratio", f.class_ratio, "Per-class support counts, e.g. 5,45 (overrides --shots)")
      ->delimiter(',');
  cmd->add_option("--format", f.format, "csv or json")->capture_default_str();
  cmd->add_option("--out", f.out, "Output file (default: stdout)");
  cmd->add_option("--jobs", f.jobs, "Worker threads")->capture_default_str();
}

chef::RunConfig to_run_config(const EvalFlags& f) {
  chef::RunConfig cfg;
  cfg.manifest = f.manifest;
  cfg.learners.clear();
  for (const auto& name : f.learners) {
    chef::LearnerConfig l;
    l.kind = chef::parse_learner_kind(name);
    l.hebbian = {f.alpha, f.steps, f.zscore};
    l.knn.k = f.k;
    l.ridge.lambda = f.lambda;
    cfg.learners.push_back(l);
  }
  cfg.layers = f.layers;
  cfg.episode.ways = f.ways;
  cfg.episode.shots = f.shots;
  cfg.episode.queries = f.queries;
  cfg.episode.master_seed = f.seed;
  if (!f.class_ratio.empty()) cfg.episode.class_ratio = f.class_ratio;
  cfg.episodes = f.episodes;
  cfg.output = f.out;
  cfg.format = chef::parse_output_format(f.format);
  cfg.jobs = f.jobs;
  cfg.validate();
  return cfg;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw chef::DataError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw chef::DataError("write to " + path + " failed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hebbian ensemble few-shot toolkit"};
  app.require_subcommand(1);

  // toy-gen
  chef::ToyGenConfig toy;
  std::string toy_out;
  std::string hidden = "64,64,32";
  double rotation_deg = toy.covariate.rotation_angle * 180.0 / std::numbers::pi;
  auto* gen = app.add_subcommand("toy-gen", "Generate synthetic domains, train the toy backbone, export features");
  gen->add_option("--out", toy_out, "Output directory")->required();
  gen->add_option("--classes", toy.source.classes)->capture_default_str();
  gen->add_option("--input-dim", toy.source.input_dim)->capture_default_str();
  gen->add_option("--samples-per-class", toy.source.samples_per_class)->capture_default_str();
  gen->add_option("--spread", toy.source.cluster_spread, "Cluster standard deviation")->capture_default_str();
  gen->add_option("--center-scale", toy.source.center_scale)->capture_default_str();
  gen->add_option("--hidden", hidden, "Comma-separated hidden widths")->capture_default_str();
  gen->add_option("--epochs", toy.train.epochs)->capture_default_str();
  gen->add_option("--lr", toy.train.lr)->capture_default_str();
  gen->add_option("--batch-size", toy.train.batch_size)->capture_default_str();
  gen->add_option("--seed", toy.source.seed, "Seed for data and training")->capture_default_str();
  gen->add_option("--rotation-deg", rotation_deg, "Covariate shift rotation")->capture_default_str();
  gen->add_option("--translation", toy.covariate.translation, "Covariate shift offset")->capture_default_str();
  gen->add_option("--scale", toy.covariate.scale, "Covariate shift scale")->capture_default_str();
  gen->add_option("--flip-fraction", toy.concept_shift.flip_fraction, "Concept shift label flips")
      ->capture_default_str();

  EvalFlags eval_flags, ablate_flags;
  auto* eval = app.add_subcommand("eval", "Evaluate one learner over seeded episodes");
  add_eval_flags(eval, eval_flags, false);
  auto* ablate = app.add_subcommand("ablate", "Per-layer and ensemble accuracy on a paired episode stream");
  add_eval_flags(ablate, ablate_flags, true);

  std::vector<std::string> fid_manifests;
  std::string fid_layer, fid_format = "csv", fid_out;
  auto* fid = app.add_subcommand("fid", "Frechet distance between two feature sets on one layer");
  fid->add_option("--manifest", fid_manifests, "Two manifests (repeat the flag)")->required()->expected(2);
  fid->add_option("--layer,--layers", fid_layer, "Layer id")->required();
  fid->add_option("--format", fid_format)->capture_default_str();
  fid->add_option("--out", fid_out);

  std::string inspect_manifest;
  auto* inspect = app.add_subcommand("inspect", "Validate a feature-store manifest and summarize it");
  inspect->add_option("--manifest", inspect_manifest)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) {
      toy.train.seed = toy.source.seed;
      toy.train.hidden.clear();
      std::stringstream ss(hidden);
      for (std::string tok; std::getline(ss, tok, ',');) {
        try {
          toy.train.hidden.push_back(std::stoi(tok));
        } catch (const std::exception&) {
          throw chef::ConfigError("bad --hidden entry '" + tok + "'");
        }
      }
      toy.covariate.rotation_angle = rotation_deg * std::numbers::pi / 180.0;
      const chef::ToyGenSummary summary = chef::run_toy_gen(toy, toy_out);
      std::cout << fmt::format("backbone training accuracy: {:.4f}\n", summary.train_accuracy);
      for (const auto& [name, path] : summary.domains) std::cout << fmt::format("{}: {}\n", name, path.string());
    } else if (*eval || *ablate) {
      const bool is_ablate = static_cast<bool>(*ablate);
      const chef::RunConfig cfg = to_run_config(is_ablate ? ablate_flags : eval_flags);
      const chef::EvalReport report = is_ablate ? chef::run_ablation(cfg) : chef::run_eval(cfg);
      const std::string text = cfg.format == chef::OutputFormat::json
                                   ? chef::report_json(report)
                                   : (is_ablate ? chef::ablation_csv(report) : chef::eval_csv(report));
      emit(text, cfg.output.string());
    } else if (*fid) {
      const chef::OutputFormat format = chef::parse_output_format(fid_format);
      const chef::FidReport r = chef::run_fid(fid_manifests[0], fid_manifests[1], fid_layer);
      emit(format == chef::OutputFormat::json ? chef::fid_json(r) : chef::fid_csv(r), fid_out);
    } else if (*inspect) {
      std::cout << chef::inspect_feature_set(inspect_manifest);
    }
  } catch (const chef::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const chef::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const chef::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
