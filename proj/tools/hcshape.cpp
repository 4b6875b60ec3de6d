// hcshape: command-line driver for the clustering-shape pipeline.
//
//   hcshape ingest   --data-dir data/mnist-5k --images 2000
//   hcshape features --out-dir out
//   hcshape run      --experiment all
//
// Settings resolve as defaults < --config FILE < explicit flags. Failures exit
// nonzero with {"error": CODE, "message": TEXT} on stderr.

#include <CLI11.hpp>

#include <array>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "hcshape/error.hpp"
#include "hcshape/parallel.hpp"
#include "hcshape/pipeline.hpp"
#include "hcshape/random.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Flags {
  std::optional<std::string> data_dir, out_dir, config, experiment;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> images, trees, regress_trees, top_k;
  std::optional<int> folds, instances, threshold;
  std::optional<double> noise_cutoff;
  std::optional<unsigned> workers;
  bool keep_intermediates = false;
  bool quiet = false;
};

void add_common(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config, "JSON config file (explicit flags win)");
  cmd.add_option("--data-dir", f.data_dir, "directory holding the IDX files");
  cmd.add_option("--out-dir", f.out_dir, "output and cache directory");
  cmd.add_option("--seed", f.seed, "master seed");
  cmd.add_option("--images", f.images, "number of images (stratified by digit)");
  cmd.add_option("--trees", f.trees, "trees per forest");
  cmd.add_option("--regress-trees", f.regress_trees, "trees per regression forest (0: --trees)");
  cmd.add_option("--top-k", f.top_k, "features kept after importance ranking");
  cmd.add_option("--folds", f.folds, "cross-validation folds");
  cmd.add_option("--instances", f.instances, "sample instances per setting");
  cmd.add_option("--threshold", f.threshold, "binarization threshold (pixel > T is kept)")->check(CLI::Range(0, 254));
  cmd.add_option("--noise-cutoff", f.noise_cutoff, "minimum persistence of a counted cycle");
  cmd.add_option("--workers", f.workers, "worker threads (0: all cores)");
  cmd.add_flag("--keep-intermediates", f.keep_intermediates, "also cache samples and distance vectors");
  cmd.add_flag("-q,--quiet", f.quiet, "no progress output");
}

hcshape::ExperimentConfig resolve(const Flags& f) {
  hcshape::ExperimentConfig cfg;
  if (f.config) cfg = hcshape::ExperimentConfig::from_json(hcshape::read_text_file(*f.config), cfg);
  if (f.data_dir) cfg.data_dir = *f.data_dir;
  if (f.out_dir) cfg.out_dir = *f.out_dir;
  if (f.seed) cfg.seed = *f.seed;
  if (f.images) cfg.images = *f.images;
  if (f.trees) cfg.trees = *f.trees;
  if (f.regress_trees) cfg.regress_trees = *f.regress_trees;
  if (f.top_k) cfg.top_k = *f.top_k;
  if (f.folds) cfg.folds = *f.folds;
  if (f.instances) cfg.features.n_instances = *f.instances;
  if (f.threshold) cfg.features.threshold = *f.threshold;
  if (f.noise_cutoff) cfg.features.noise_cutoff = *f.noise_cutoff;
  if (f.workers) cfg.workers = *f.workers;
  if (f.keep_intermediates) cfg.keep_intermediates = true;
  cfg.validate();
  return cfg;
}

hcshape::ProgressFn progress(const Flags& f) {
  if (f.quiet) return {};
  const auto start = std::chrono::steady_clock::now();
  return [start](std::string_view msg) {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "[%8.1fs] %.*s\n", s, static_cast<int>(msg.size()), msg.data());
  };
}

int cmd_ingest(const Flags& f) {
  const auto cfg = resolve(f);
  const auto data = hcshape::load_dataset(cfg);
  std::array<std::size_t, 10> per_digit{};
  std::size_t points = 0, min_points = SIZE_MAX, max_points = 0;
  for (std::size_t i = 0; i < data.digits.size(); ++i) {
    ++per_digit[data.digits[i]];
    const auto n = hcshape::image_to_point_cloud(data.images.image(i), data.images.rows, data.images.cols,
                                                 static_cast<std::uint8_t>(cfg.features.threshold))
                       .size();
    points += n;
    min_points = std::min(min_points, n);
    max_points = std::max(max_points, n);
  }
  json out{{"images", data.digits.size()},
           {"per_digit", per_digit},
           {"points", {{"min", min_points}, {"max", max_points},
                       {"mean", data.digits.empty() ? 0.0 : double(points) / double(data.digits.size())}}}};
  fs::create_directories(cfg.out_dir);
  hcshape::write_text_file(cfg.out_dir / "ingest.json", out.dump(2) + "\n");
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_sample(const Flags& f) {
  auto cfg = resolve(f);
  const auto data = hcshape::load_dataset(cfg);
  const auto dir = cfg.out_dir / "cache" / cfg.feature_hash() / "samples";
  hcshape::parallel_for(data.digits.size(), cfg.effective_workers(), [&](std::size_t i) {
    const auto id = data.source_index[i];
    const auto cloud = hcshape::image_to_point_cloud(data.images.image(i), data.images.rows, data.images.cols,
                                                     static_cast<std::uint8_t>(cfg.features.threshold));
    const auto samples = hcshape::sample_image(cloud, cfg.features, hcshape::derive_seed(cfg.seed, id));
    hcshape::write_text_file(dir / ("img_" + std::to_string(id) + ".json"), hcshape::sample_set_to_json(samples));
  });
  std::cout << json{{"images", data.digits.size()}, {"samples_dir", dir.string()}}.dump() << "\n";
  return 0;
}

int cmd_features(const Flags& f) {
  hcshape::Pipeline p(resolve(f), progress(f));
  const auto& m = p.features();
  std::cout << json{{"rows", m.rows},
                    {"columns", m.cols()},
                    {"dim0_columns", m.dim0_width},
                    {"dim1_columns", m.cols() - m.dim0_width},
                    {"features_csv", (p.config().out_dir / "features.csv").string()}}
                   .dump()
            << "\n";
  return 0;
}

int cmd_train(const Flags& f) {
  hcshape::Pipeline p(resolve(f), progress(f));
  const auto& m = p.features();
  const auto& sel = p.selection();
  std::vector<std::size_t> rows(m.rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::vector<double> y(m.digit.begin(), m.digit.end());
  hcshape::ForestParams params;
  params.n_trees = p.config().trees;
  params.seed = hcshape::derive_seed(p.config().seed, 3);
  params.workers = p.config().effective_workers();
  const auto forest =
      hcshape::RandomForest::train(hcshape::take(m, rows, sel.indices), y, hcshape::ForestMode::Classify, params);
  std::string columns;
  for (auto c : sel.indices) columns += m.columns[c] + "\n";
  const auto path = p.config().out_dir / "model.json";
  hcshape::write_text_file(path, forest.to_json(hcshape::fnv1a_hex(columns)));
  std::cout << json{{"model", path.string()}, {"trees", params.n_trees}, {"columns", sel.indices.size()},
                    {"dim0", sel.dim0}, {"dim1", sel.dim1}}
                   .dump()
            << "\n";
  return 0;
}

int cmd_run(const Flags& f) {
  hcshape::Pipeline p(resolve(f), progress(f));
  std::vector<hcshape::Experiment> which;
  const std::string name = f.experiment.value_or("all");
  if (name == "all") {
    which.assign(std::begin(hcshape::kAllExperiments), std::end(hcshape::kAllExperiments));
  } else if (auto e = hcshape::parse_experiment(name)) {
    which.push_back(*e);
  } else {
    throw hcshape::Error(hcshape::Errc::InvalidConfig, "unknown experiment: " + name);
  }
  json report = json::object();
  for (auto e : which) {
    const auto files = p.run(e);
    json entry;
    for (const auto& path : files) entry["files"].push_back(path.string());
    for (const auto& set : p.last_scores()) {
      double sum = 0.0;
      for (const auto& row : set.folds) sum += row.overall;
      entry["mean_overall_f1"][set.feature_set] = set.folds.empty() ? 0.0 : sum / double(set.folds.size());
    }
    report[std::string(hcshape::to_string(e))] = entry;
  }
  std::cout << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical-clustering shape features for MNIST point clouds"};
  app.require_subcommand(1);
  Flags flags;

  auto* ingest = app.add_subcommand("ingest", "parse the IDX files and summarize the point clouds");
  auto* sample = app.add_subcommand("sample", "write per-image sample sets into the cache");
  auto* features = app.add_subcommand("features", "build features.csv (cached per image)");
  auto* train = app.add_subcommand("train", "rank features and train a digit classifier on the top-k");
  auto* evaluate = app.add_subcommand("evaluate", "cross-validate one experiment (or all)");
  auto* run = app.add_subcommand("run", "full pipeline for one experiment (or all)");
  for (auto* cmd : {ingest, sample, features, train, evaluate, run}) add_common(*cmd, flags);
  for (auto* cmd : {evaluate, run}) {
    cmd->add_option("--experiment", flags.experiment,
                    "digits-dim0 | digits-dim1-supplement | holes-classify | dim1-regress | "
                    "dim1-predict-feedback | all");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*ingest) return cmd_ingest(flags);
    if (*sample) return cmd_sample(flags);
    if (*features) return cmd_features(flags);
    if (*train) return cmd_train(flags);
    return cmd_run(flags);
  } catch (const hcshape::Error& e) {
    std::cerr << json{{"error", std::string(hcshape::to_string(e.code()))}, {"message", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "Internal"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
}
