#include <doctest.h>

#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>

#include "hcshape/pipeline.hpp"
#include "support/errors.hpp"
#include "support/generators.hpp"
#include "support/synthetic_mnist.hpp"

using namespace hcshape;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("hcshape_test_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig small_config(const fs::path& root) {
  ExperimentConfig cfg;
  cfg.data_dir = root / "data";
  cfg.out_dir = root / "out";
  cfg.images = 40;
  cfg.features.n_instances = 3;
  cfg.features.resolutions = {2, 4};
  cfg.trees = 15;
  cfg.top_k = 40;
  cfg.folds = 2;
  cfg.workers = 2;
  return cfg;
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

fs::path p_cache(const ExperimentConfig& cfg) { return cfg.out_dir / "cache" / cfg.feature_hash() / "blocks"; }

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("config json round trip, overlay and validation") {
    ExperimentConfig cfg;
    cfg.images = 123;
    cfg.features.resolutions = {2, 3};
    cfg.features.noise_cutoff = 0.25;
    const auto back = ExperimentConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());
    CHECK(back.config_hash() == cfg.config_hash());

    const auto overlaid = ExperimentConfig::from_json(R"({"trees": 7})", cfg);
    CHECK(overlaid.trees == 7);
    CHECK(overlaid.images == 123);
    CHECK(overlaid.feature_hash() == cfg.feature_hash());
    CHECK(overlaid.config_hash() != cfg.config_hash());

    auto other = cfg;
    other.features.n_instances = 4;
    CHECK(other.feature_hash() != cfg.feature_hash());
    other = cfg;
    other.workers = 3;
    other.out_dir = "elsewhere";
    CHECK(other.config_hash() == cfg.config_hash());

    CHECK(code_of([] { ExperimentConfig::from_json(R"({"bogus": 1})"); }) == Errc::InvalidConfig);
    CHECK(code_of([] { ExperimentConfig::from_json(R"({"trees": "many"})"); }) == Errc::InvalidConfig);
    CHECK(code_of([] { ExperimentConfig::from_json("{"); }) == Errc::InvalidConfig);
    auto bad = cfg;
    bad.folds = 1;
    CHECK(code_of([&] { bad.validate(); }) == Errc::InvalidConfig);
    bad = cfg;
    bad.features.n_instances = 1;
    CHECK(code_of([&] { bad.validate(); }) == Errc::InvalidConfig);
  }

  TEST_CASE("experiment names") {
    for (auto e : kAllExperiments) CHECK(parse_experiment(to_string(e)) == e);
    CHECK(to_string(Experiment::HolesClassify) == "holes-classify");
    CHECK_FALSE(parse_experiment("nope").has_value());
  }

  TEST_CASE("cache payloads round-trip and detect corruption") {
    Rng rng(30);
    const auto cloud = gen::cloud(rng, 60);
    FeatureConfig fc;
    fc.n_instances = 3;
    ImageIntermediates inter;
    const auto block = featurize_cloud(cloud, fc, 5, &inter);
    CHECK(block.summaries.size() == 45);
    CHECK(block.dim1.size() == 45);
    CHECK(inter.distances.size() == 45);
    CHECK(inter.distances[0][0].size() == 3);

    const auto text = image_block_to_json(block, "h1");
    const auto back = image_block_from_json(text, "h1");
    CHECK(image_block_to_json(back, "h1") == text);
    CHECK(code_of([&] { image_block_from_json(text, "h2"); }) == Errc::CacheCorrupt);
    auto doc = nlohmann::json::parse(text);
    doc["payload"]["dim1"][0][0] = 123.0;
    CHECK(code_of([&] { image_block_from_json(doc.dump(), "h1"); }) == Errc::CacheCorrupt);

    ImageIntermediates again;
    again.samples = inter.samples;
    const auto bytes = distances_to_binary(inter);
    distances_from_binary(bytes, again);
    CHECK(again.distances == inter.distances);
    auto truncated = bytes;
    truncated.resize(truncated.size() - 3);
    CHECK(code_of([&] { distances_from_binary(truncated, again); }) == Errc::CacheCorrupt);

    // Stages composed by hand give the same block.
    ImageIntermediates staged;
    staged.samples = sample_image(cloud, fc, 5);
    compute_bottleneck_distances(staged);
    CHECK(image_block_to_json(block_from_intermediates(staged, fc), "h") == image_block_to_json(block, "h"));
  }

  TEST_CASE("tiny clouds still featurize") {
    FeatureConfig fc;
    fc.n_instances = 2;
    for (std::size_t n : {1u, 2u, 3u}) {
      const auto block = featurize_cloud(PointCloud(gen::circle(n)), fc, 1);
      CHECK(block.summaries.size() == 45);
      for (const auto& d : block.dim1) CHECK(d.cycle_count == 0);
    }
  }

  TEST_CASE("missing data is reported") {
    const auto root = scratch_dir("missing");
    auto cfg = small_config(root);
    CHECK(code_of([&] { load_dataset(cfg); }) == Errc::MissingData);
  }

  TEST_CASE("stratified dataset loading") {
    const auto root = scratch_dir("load");
    synth::write(root / "data", 6);
    auto cfg = small_config(root);
    cfg.images = 25;
    const auto data = load_dataset(cfg);
    REQUIRE(data.digits.size() == 25);
    std::vector<int> per(10, 0);
    for (auto d : data.digits) ++per[d];
    for (int d = 0; d < 10; ++d) CHECK(per[d] == (d < 5 ? 3 : 2));
    for (std::size_t i = 1; i < data.source_index.size(); ++i) CHECK(data.source_index[i] > data.source_index[i - 1]);
  }

  TEST_CASE("end to end: outputs, caching and determinism") {
    const auto root = scratch_dir("e2e");
    synth::write(root / "data", 4);
    auto cfg = small_config(root);
    std::map<std::string, std::string> first;
    {
      Pipeline p(cfg);
      const auto& m = p.features();
      CHECK(m.rows == 40);
      CHECK(m.cols() == 2 * 9 * 4 * 7 + 2 * 9 * 3);
      CHECK(validate_feature_manifest(slurp(cfg.out_dir / "features_manifest.json"), m).empty());
      for (auto e : kAllExperiments) {
        for (const auto& f : p.run(e)) first[f.filename().string()] = slurp(f);
      }
      CHECK(first.count("scores_digits-dim1-supplement.csv") == 1);
      CHECK(first.count("ttests_dim1-predict-feedback.csv") == 1);
      first["features.csv"] = slurp(cfg.out_dir / "features.csv");

      const auto manifest = nlohmann::json::parse(first["manifest.json"]);
      CHECK(manifest["experiments"].size() == 5);
      CHECK(manifest["config_hash"] == cfg.config_hash());
    }
    const std::size_t blocks = std::distance(fs::directory_iterator(p_cache(cfg)), fs::directory_iterator{});
    CHECK(blocks == 40);

    auto rerun = [&](ExperimentConfig c) {
      Pipeline p(c);
      std::map<std::string, std::string> out;
      for (auto e : kAllExperiments) {
        for (const auto& f : p.run(e)) out[f.filename().string()] = slurp(f);
      }
      out["features.csv"] = slurp(c.out_dir / "features.csv");
      return out;
    };

    // Served from cache.
    CHECK(rerun(cfg) == first);

    // Cache wiped entirely, different worker count, different directory.
    auto fresh = cfg;
    fresh.out_dir = root / "out2";
    fresh.workers = 1;
    auto second = rerun(fresh);
    CHECK(second == first);

    // Deleting part of the cache reproduces the same bytes.
    for (const auto& entry : fs::directory_iterator(p_cache(cfg))) {
      if (entry.path().filename().string().ends_with("3.json")) fs::remove(entry.path());
    }
    for (const auto& entry : fs::directory_iterator(cfg.out_dir / "cache" / cfg.feature_hash())) {
      if (entry.path().filename().string().starts_with("regression_")) fs::remove(entry.path());
    }
    CHECK(rerun(cfg) == first);

    // A corrupted block is reported, not silently used.
    const auto victim = p_cache(cfg) / "img_0.json";
    auto doc = nlohmann::json::parse(slurp(victim));
    doc["feature_hash"] = "0000";
    write_text_file(victim, doc.dump());
    Pipeline broken(cfg);
    CHECK(code_of([&] { broken.features(); }) == Errc::CacheCorrupt);
  }

  TEST_CASE("intermediates are cached when asked") {
    const auto root = scratch_dir("keep");
    synth::write(root / "data", 1);
    auto cfg = small_config(root);
    cfg.images = 10;
    cfg.keep_intermediates = true;
    Pipeline p(cfg);
    const auto csv_rows = p.features().rows;
    CHECK(csv_rows == 10);
    const auto dir = cfg.out_dir / "cache" / cfg.feature_hash();
    CHECK(fs::exists(dir / "samples" / "img_0.json"));
    CHECK(fs::exists(dir / "distances" / "img_0.bin"));

    // Blocks rebuilt from cached samples and distances match.
    const auto before = slurp(cfg.out_dir / "features.csv");
    fs::remove_all(dir / "blocks");
    Pipeline again(cfg);
    again.features();
    CHECK(slurp(cfg.out_dir / "features.csv") == before);
  }
}
