#include "hcshape/pipeline.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>
#include <thread>

#include "hcshape/bottleneck.hpp"
#include "hcshape/error.hpp"
#include "hcshape/parallel.hpp"
#include "hcshape/random.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hcshape {

// ---------------------------------------------------------------------------
// Configuration

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::InvalidConfig, what);
}

json feature_config_json(const FeatureConfig& f) {
  return {{"threshold", f.threshold},         {"resolutions", f.resolutions},
          {"instances", f.n_instances},       {"sampling_bins", f.sampling_bins},
          {"hist_bins", f.hist_bins},         {"noise_cutoff", f.noise_cutoff}};
}

}  // namespace

void ExperimentConfig::validate() const {
  require(images >= 1, "images must be >= 1");
  require(features.threshold >= 0 && features.threshold <= 254, "threshold must lie in [0, 254]");
  require(!features.resolutions.empty(), "at least one resolution is required");
  for (int k : features.resolutions) require(k >= 1, "resolutions must be >= 1");
  require(features.n_instances >= 2, "instances must be >= 2 (pairwise distances need two diagrams)");
  require(features.sampling_bins >= 1, "sampling_bins must be >= 1");
  require(features.hist_bins >= 1, "hist_bins must be >= 1");
  require(features.noise_cutoff >= 0.0 && std::isfinite(features.noise_cutoff), "noise_cutoff must be >= 0");
  require(trees >= 1, "trees must be >= 1");
  require(top_k >= 1, "top_k must be >= 1");
  require(folds >= 2, "folds must be >= 2");
}

unsigned ExperimentConfig::effective_workers() const {
  if (workers) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string ExperimentConfig::to_json() const {
  json doc = feature_config_json(features);
  doc["data_dir"] = data_dir.string();
  doc["out_dir"] = out_dir.string();
  doc["images_file"] = images_file;
  doc["labels_file"] = labels_file;
  doc["images"] = images;
  doc["trees"] = trees;
  doc["regress_trees"] = regress_trees;
  doc["top_k"] = top_k;
  doc["folds"] = folds;
  doc["seed"] = seed;
  doc["workers"] = workers;
  doc["keep_intermediates"] = keep_intermediates;
  return doc.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text, ExperimentConfig base) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "data_dir") base.data_dir = value.get<std::string>();
      else if (key == "out_dir") base.out_dir = value.get<std::string>();
      else if (key == "images_file") base.images_file = value.get<std::string>();
      else if (key == "labels_file") base.labels_file = value.get<std::string>();
      else if (key == "images") base.images = value.get<std::size_t>();
      else if (key == "threshold") base.features.threshold = value.get<int>();
      else if (key == "resolutions") base.features.resolutions = value.get<std::vector<int>>();
      else if (key == "instances") base.features.n_instances = value.get<int>();
      else if (key == "sampling_bins") base.features.sampling_bins = value.get<int>();
      else if (key == "hist_bins") base.features.hist_bins = value.get<int>();
      else if (key == "noise_cutoff") base.features.noise_cutoff = value.get<double>();
      else if (key == "trees") base.trees = value.get<std::size_t>();
      else if (key == "regress_trees") base.regress_trees = value.get<std::size_t>();
      else if (key == "top_k") base.top_k = value.get<std::size_t>();
      else if (key == "folds") base.folds = value.get<int>();
      else if (key == "seed") base.seed = value.get<std::uint64_t>();
      else if (key == "workers") base.workers = value.get<unsigned>();
      else if (key == "keep_intermediates") base.keep_intermediates = value.get<bool>();
      else throw Error(Errc::InvalidConfig, "unknown config key: " + key);
    }
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("bad config value: ") + e.what());
  }
  return base;
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string ExperimentConfig::feature_hash() const {
  json doc = feature_config_json(features);
  doc["seed"] = seed;
  doc["landmarks"] = "grid3x3";
  return fnv1a_hex(doc.dump());
}

std::string ExperimentConfig::config_hash() const {
  json doc = feature_config_json(features);
  doc["seed"] = seed;
  doc["landmarks"] = "grid3x3";
  doc["images"] = images;
  doc["trees"] = trees;
  doc["regress_trees"] = effective_regress_trees();
  doc["top_k"] = top_k;
  doc["folds"] = folds;
  return fnv1a_hex(doc.dump());
}

std::string_view to_string(Experiment which) noexcept {
  switch (which) {
    case Experiment::DigitsDim0: return "digits-dim0";
    case Experiment::DigitsDim1Supplement: return "digits-dim1-supplement";
    case Experiment::HolesClassify: return "holes-classify";
    case Experiment::Dim1Regress: return "dim1-regress";
    case Experiment::Dim1PredictFeedback: return "dim1-predict-feedback";
  }
  return "unknown";
}

std::optional<Experiment> parse_experiment(std::string_view name) {
  for (auto e : kAllExperiments) {
    if (to_string(e) == name) return e;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Per-image featurization

SampleSet sample_image(const PointCloud& cloud, const FeatureConfig& cfg, std::uint64_t image_seed) {
  return generate_sample_set(cloud, landmark_grid(), cfg.resolutions, cfg.n_instances, image_seed,
                             cfg.sampling_bins);
}

void compute_bottleneck_distances(ImageIntermediates& inter) {
  const auto& samples = inter.samples;
  inter.distances.assign(samples.settings.size(), {});
  for (std::size_t s = 0; s < samples.settings.size(); ++s) {
    std::array<std::vector<ClusteringDiagram>, 4> diagrams;
    for (const auto& cloud : samples.clouds[s]) {
      if (cloud.size() < 2) {
        for (auto& d : diagrams) d.emplace_back();
        continue;
      }
      const auto dm = pairwise_distances(cloud);
      for (std::size_t l = 0; l < 4; ++l) diagrams[l].push_back(clustering_diagram(linkage(dm, kAllLinkages[l])));
    }
    for (std::size_t l = 0; l < 4; ++l) inter.distances[s][l] = pairwise_bottleneck(diagrams[l]);
  }
}

ImageBlock block_from_intermediates(const ImageIntermediates& inter, const FeatureConfig& cfg) {
  const auto& samples = inter.samples;
  ImageBlock block;
  block.summaries.resize(samples.settings.size());
  block.dim1.resize(samples.settings.size());
  for (std::size_t s = 0; s < samples.settings.size(); ++s) {
    for (std::size_t l = 0; l < 4; ++l) {
      block.summaries[s][l] = summarize_bottleneck_distribution(inter.distances.at(s)[l], cfg.hist_bins);
    }
    std::vector<Dim1Features> per_instance;
    for (const auto& cloud : samples.clouds[s]) {
      if (cloud.size() < 3) {
        per_instance.emplace_back();
        continue;
      }
      per_instance.push_back(dim1_features(rips_dim1(pairwise_distances(cloud)), cfg.noise_cutoff));
    }
    block.dim1[s] = mean_features(per_instance);
  }
  return block;
}

ImageBlock featurize_cloud(const PointCloud& cloud, const FeatureConfig& cfg, std::uint64_t image_seed,
                           ImageIntermediates* keep) {
  ImageIntermediates local;
  ImageIntermediates& inter = keep ? *keep : local;
  inter.samples = sample_image(cloud, cfg, image_seed);
  compute_bottleneck_distances(inter);
  return block_from_intermediates(inter, cfg);
}

std::string image_block_to_json(const ImageBlock& block, const std::string& feature_hash) {
  json payload;
  auto& summaries = payload["summaries"] = json::array();
  for (const auto& per_linkage : block.summaries) {
    json row = json::array();
    for (const auto& s : per_linkage) {
      row.push_back({s.min, s.max, s.mean, s.sd, s.skewness, s.kurtosis, s.largest_bin});
    }
    summaries.push_back(std::move(row));
  }
  auto& dim1 = payload["dim1"] = json::array();
  for (const auto& f : block.dim1) dim1.push_back({f.cycle_count, f.avg_persistence, f.max_persistence});
  const std::string body = payload.dump();
  json doc{{"feature_hash", feature_hash}, {"checksum", fnv1a_hex(body)}, {"payload", payload}};
  return doc.dump();
}

ImageBlock image_block_from_json(const std::string& text, const std::string& feature_hash) {
  ImageBlock block;
  try {
    const auto doc = json::parse(text);
    if (doc.at("feature_hash").get<std::string>() != feature_hash) {
      throw Error(Errc::CacheCorrupt, "cached block was computed under a different configuration");
    }
    const auto& payload = doc.at("payload");
    if (doc.at("checksum").get<std::string>() != fnv1a_hex(payload.dump())) {
      throw Error(Errc::CacheCorrupt, "cached block checksum mismatch");
    }
    for (const auto& row : payload.at("summaries")) {
      std::array<Summary7, 4> per_linkage;
      for (std::size_t l = 0; l < 4; ++l) {
        const auto& s = row.at(l);
        per_linkage[l] = {s.at(0).get<double>(), s.at(1).get<double>(), s.at(2).get<double>(),
                          s.at(3).get<double>(), s.at(4).get<double>(), s.at(5).get<double>(),
                          s.at(6).get<std::size_t>()};
      }
      block.summaries.push_back(per_linkage);
    }
    for (const auto& f : payload.at("dim1")) {
      block.dim1.push_back({f.at(0).get<double>(), f.at(1).get<double>(), f.at(2).get<double>()});
    }
  } catch (const json::exception& e) {
    throw Error(Errc::CacheCorrupt, std::string("malformed cached block: ") + e.what());
  }
  return block;
}

namespace {

constexpr std::array<std::uint8_t, 4> kDistanceMagic = {'H', 'C', 'B', 'D'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t& pos) {
  if (in.size() < pos + 4) throw Error(Errc::CacheCorrupt, "distance sidecar truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{in[pos + static_cast<std::size_t>(i)]} << (8 * i);
  pos += 4;
  return v;
}

}  // namespace

std::vector<std::uint8_t> distances_to_binary(const ImageIntermediates& inter) {
  // magic, version, settings, linkages, then per (setting, linkage): count
  // followed by that many little-endian IEEE doubles.
  std::vector<std::uint8_t> out(kDistanceMagic.begin(), kDistanceMagic.end());
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(inter.distances.size()));
  put_u32(out, 4);
  for (const auto& per_linkage : inter.distances) {
    for (const auto& list : per_linkage) {
      put_u32(out, static_cast<std::uint32_t>(list.size()));
      for (double d : list) {
        const auto bits = std::bit_cast<std::uint64_t>(d);
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
      }
    }
  }
  return out;
}

void distances_from_binary(std::span<const std::uint8_t> bytes, ImageIntermediates& inter) {
  if (bytes.size() < 4 || !std::equal(kDistanceMagic.begin(), kDistanceMagic.end(), bytes.begin())) {
    throw Error(Errc::CacheCorrupt, "distance sidecar has a bad magic");
  }
  std::size_t pos = 4;
  if (get_u32(bytes, pos) != 1) throw Error(Errc::CacheCorrupt, "unsupported distance sidecar version");
  const std::uint32_t settings = get_u32(bytes, pos);
  if (get_u32(bytes, pos) != 4) throw Error(Errc::CacheCorrupt, "distance sidecar linkage count");
  inter.distances.assign(settings, {});
  for (auto& per_linkage : inter.distances) {
    for (auto& list : per_linkage) {
      const std::uint32_t count = get_u32(bytes, pos);
      if (bytes.size() < pos + 8ULL * count) throw Error(Errc::CacheCorrupt, "distance sidecar truncated");
      list.resize(count);
      for (auto& d : list) {
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= std::uint64_t{bytes[pos + static_cast<std::size_t>(i)]} << (8 * i);
        d = std::bit_cast<double>(bits);
        pos += 8;
      }
    }
  }
  if (pos != bytes.size()) throw Error(Errc::CacheCorrupt, "distance sidecar has trailing bytes");
}

// ---------------------------------------------------------------------------
// Files

void write_text_file(const fs::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  auto tmp = path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(Errc::Io, "short write to " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(Errc::Io, "cannot move " + tmp.string() + " into place: " + ec.message());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Dataset and cross validation

Dataset load_dataset(const ExperimentConfig& cfg) {
  const auto image_path = cfg.data_dir / cfg.images_file;
  const auto label_path = cfg.data_dir / cfg.labels_file;
  if (!fs::exists(image_path) || !fs::exists(label_path)) {
    throw Error(Errc::MissingData, "expected uncompressed MNIST files " + image_path.string() + " and " +
                                       label_path.string());
  }
  const auto images = parse_idx_images(read_file_bytes(image_path));
  const auto labels = parse_idx_labels(read_file_bytes(label_path));
  if (images.size() != labels.size()) {
    throw Error(Errc::LengthMismatch, "image and label files hold different counts");
  }

  std::array<std::size_t, 10> quota{};
  for (std::size_t d = 0; d < 10; ++d) quota[d] = cfg.images / 10 + (d < cfg.images % 10 ? 1 : 0);

  Dataset out;
  out.images.rows = images.rows;
  out.images.cols = images.cols;
  for (std::size_t i = 0; i < images.size() && out.digits.size() < cfg.images; ++i) {
    const auto digit = labels.labels[i];
    if (quota[digit] == 0) continue;
    --quota[digit];
    const auto img = images.image(i);
    out.images.pixels.insert(out.images.pixels.end(), img.begin(), img.end());
    out.digits.push_back(digit);
    out.source_index.push_back(i);
  }
  return out;
}

DenseMatrix take(const FeatureMatrix& m, std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
  DenseMatrix out{rows.size(), cols.size(), {}};
  out.values.reserve(rows.size() * cols.size());
  for (auto r : rows) {
    for (auto c : cols) out.values.push_back(m.at(r, c));
  }
  return out;
}

namespace {

DenseMatrix take_rows(const DenseMatrix& m, std::span<const std::size_t> rows) {
  DenseMatrix out{rows.size(), m.cols, {}};
  out.values.reserve(rows.size() * m.cols);
  for (auto r : rows) {
    auto src = m.row(r);
    out.values.insert(out.values.end(), src.begin(), src.end());
  }
  return out;
}

}  // namespace

CvScores cross_validate_classifier(const DenseMatrix& x, std::span<const int> labels, const FoldAssignment& folds,
                                   std::span<const int> classes, const ForestParams& params,
                                   std::string feature_set) {
  CvScores out{std::move(feature_set), {}};
  for (int f = 0; f < folds.k; ++f) {
    const auto train = folds.train_rows(f);
    const auto test = folds.test_rows(f);
    std::vector<double> y;
    for (auto r : train) y.push_back(labels[r]);
    ForestParams p = params;
    p.seed = derive_seed(params.seed, static_cast<std::uint64_t>(f));
    const auto forest = RandomForest::train(take_rows(x, train), y, ForestMode::Classify, p);
    std::vector<int> predicted, actual;
    for (auto r : test) {
      predicted.push_back(forest.predict_class(x.row(r)));
      actual.push_back(labels[r]);
    }
    out.folds.push_back(f1_scores(predicted, actual, classes));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

// Seed streams for the independent random draws of a run.
constexpr std::uint64_t kStreamSelection = 1;
constexpr std::uint64_t kStreamFolds = 2;
constexpr std::uint64_t kStreamClassify = 3;
constexpr std::uint64_t kStreamHoles = 4;
constexpr std::uint64_t kStreamRegressPretrain = 5;
constexpr std::uint64_t kStreamRegress = 6;

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<double> column_of(const CvScores& scores, std::size_t class_pos) {
  std::vector<double> out;
  for (const auto& row : scores.folds) {
    out.push_back(class_pos < row.per_class.size() ? row.per_class[class_pos] : row.overall);
  }
  return out;
}

std::string class_header(std::span<const int> classes) {
  std::string out;
  for (int c : classes) out += "," + std::to_string(c);
  return out + ",Overall";
}

std::string scores_csv(const std::vector<CvScores>& sets, std::span<const int> classes) {
  std::string out = "feature_set,fold" + class_header(classes) + "\n";
  for (const auto& set : sets) {
    for (std::size_t f = 0; f < set.folds.size(); ++f) {
      out += set.feature_set + "," + std::to_string(f + 1);
      for (double v : set.folds[f].per_class) out += "," + format_double(v);
      out += "," + format_double(set.folds[f].overall) + "\n";
    }
    for (const char* stat : {"Mean", "SD"}) {
      out += set.feature_set + "," + stat;
      for (std::size_t c = 0; c <= classes.size(); ++c) {
        const auto col = column_of(set, c);
        out += "," + format_double(std::string_view(stat) == "Mean" ? mean_of(col) : sd_of(col));
      }
      out += "\n";
    }
  }
  return out;
}

std::string ttests_csv(const std::vector<std::pair<const CvScores*, const CvScores*>>& comparisons,
                       std::span<const int> classes) {
  std::string out = "comparison,statistic" + class_header(classes) + "\n";
  for (const auto& [a, b] : comparisons) {
    std::vector<TTestResult> results;
    for (std::size_t c = 0; c <= classes.size(); ++c) results.push_back(paired_t_test(column_of(*a, c), column_of(*b, c)));
    const std::string name = a->feature_set + "_vs_" + b->feature_set;
    out += name + ",mean_diff";
    for (const auto& r : results) out += "," + format_double(r.mean_diff);
    out += "\n" + name + ",t_statistic";
    for (const auto& r : results) out += "," + format_double(r.t_statistic);
    out += "\n" + name + ",p_value";
    for (const auto& r : results) out += "," + format_double(r.p_value);
    out += "\n" + name + ",df";
    for (const auto& r : results) out += "," + std::to_string(r.df);
    out += "\n";
  }
  return out;
}

std::vector<std::size_t> filter_columns(const FeatureSelection& sel, const FeatureMatrix& m, bool dim1) {
  std::vector<std::size_t> out;
  for (auto c : sel.indices) {
    if (m.is_dim1(c) == dim1) out.push_back(c);
  }
  return out;
}

}  // namespace

Pipeline::Pipeline(ExperimentConfig cfg, ProgressFn progress) : cfg_(std::move(cfg)), progress_(std::move(progress)) {
  cfg_.validate();
}

void Pipeline::log(std::string_view message) const {
  if (progress_) progress_(message);
}

fs::path Pipeline::cache_dir() const { return cfg_.out_dir / "cache" / cfg_.feature_hash(); }

ForestParams Pipeline::forest_params(std::uint64_t stream, std::size_t trees) const {
  ForestParams p;
  p.n_trees = trees;
  p.seed = derive_seed(cfg_.seed, stream);
  p.workers = cfg_.effective_workers();
  return p;
}

const Dataset& Pipeline::dataset() {
  if (!dataset_) {
    dataset_ = load_dataset(cfg_);
    log("loaded " + std::to_string(dataset_->digits.size()) + " images");
  }
  return *dataset_;
}

const FeatureMatrix& Pipeline::features() {
  if (features_) return *features_;
  const auto& data = dataset();
  const auto dir = cache_dir();
  const auto hash = cfg_.feature_hash();
  const std::size_t n = data.digits.size();
  std::vector<ImageBlock> blocks(n);
  std::atomic<std::size_t> done{0};

  parallel_for(n, cfg_.effective_workers(), [&](std::size_t i) {
    const std::size_t id = data.source_index[i];
    const auto block_path = dir / "blocks" / ("img_" + std::to_string(id) + ".json");
    if (fs::exists(block_path)) {
      blocks[i] = image_block_from_json(read_text_file(block_path), hash);
    } else {
      const auto cloud = image_to_point_cloud(data.images.image(i), data.images.rows, data.images.cols,
                                              static_cast<std::uint8_t>(cfg_.features.threshold));
      const auto sample_path = dir / "samples" / ("img_" + std::to_string(id) + ".json");
      const auto dist_path = dir / "distances" / ("img_" + std::to_string(id) + ".bin");
      ImageIntermediates inter;
      if (fs::exists(sample_path)) {
        inter.samples = sample_set_from_json(read_text_file(sample_path));
      } else {
        inter.samples = sample_image(cloud, cfg_.features, derive_seed(cfg_.seed, id));
        if (cfg_.keep_intermediates) write_text_file(sample_path, sample_set_to_json(inter.samples));
      }
      if (fs::exists(dist_path)) {
        distances_from_binary(read_file_bytes(dist_path), inter);
      } else {
        compute_bottleneck_distances(inter);
        if (cfg_.keep_intermediates) {
          const auto bytes = distances_to_binary(inter);
          write_text_file(dist_path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
        }
      }
      blocks[i] = block_from_intermediates(inter, cfg_.features);
      write_text_file(block_path, image_block_to_json(blocks[i], hash));
    }
    const std::size_t k = ++done;
    if (k % 100 == 0 || k == n) log("featurized " + std::to_string(k) + "/" + std::to_string(n) + " images");
  });

  FeatureLayout layout{sampling_settings(landmark_grid().size(), cfg_.features.resolutions)};
  features_ = assemble_feature_matrix(layout, blocks, data.digits);
  write_text_file(cfg_.out_dir / "features.csv", feature_matrix_to_csv(*features_));
  write_text_file(cfg_.out_dir / "features_manifest.json", feature_manifest_json(layout, hash, cfg_.seed));
  return *features_;
}

const FeatureSelection& Pipeline::selection() {
  if (selection_) return *selection_;
  const auto& m = features();
  const auto path = cache_dir() / ("selection_" + cfg_.config_hash() + ".json");
  if (fs::exists(path)) {
    try {
      const auto doc = json::parse(read_text_file(path));
      FeatureSelection sel;
      sel.indices = doc.at("indices").get<std::vector<std::size_t>>();
      sel.dim0 = doc.at("dim0").get<std::size_t>();
      sel.dim1 = doc.at("dim1").get<std::size_t>();
      if (doc.at("checksum").get<std::string>() != fnv1a_hex(json(sel.indices).dump())) {
        throw Error(Errc::CacheCorrupt, "cached feature selection checksum mismatch");
      }
      selection_ = std::move(sel);
      return *selection_;
    } catch (const json::exception& e) {
      throw Error(Errc::CacheCorrupt, std::string("malformed cached selection: ") + e.what());
    }
  }
  log("ranking " + std::to_string(m.cols()) + " features");
  std::vector<std::size_t> rows(m.rows), cols(m.cols());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  std::vector<double> y(m.digit.begin(), m.digit.end());
  const auto forest = RandomForest::train(take(m, rows, cols), y, ForestMode::Classify,
                                          forest_params(kStreamSelection, cfg_.trees));
  selection_ = select_top_features(forest.importances(), std::min(cfg_.top_k, m.cols()), m.dim0_width);
  json doc{{"indices", selection_->indices},
           {"dim0", selection_->dim0},
           {"dim1", selection_->dim1},
           {"checksum", fnv1a_hex(json(selection_->indices).dump())}};
  write_text_file(path, doc.dump());
  return *selection_;
}

const FoldAssignment& Pipeline::digit_folds() {
  if (!digit_folds_) {
    const auto& m = features();
    digit_folds_ = stratified_folds(m.digit, cfg_.folds, derive_seed(cfg_.seed, kStreamFolds));
  }
  return *digit_folds_;
}

const Pipeline::RegressionResult& Pipeline::regression() {
  if (regression_) return *regression_;
  const auto& m = features();
  const auto& sel = selection();
  const auto& folds = digit_folds();
  const auto dim0 = filter_columns(sel, m, false);
  const auto targets = filter_columns(sel, m, true);
  if (dim0.empty() || targets.empty()) {
    throw Error(Errc::InvalidConfig, "feature selection must contain both dimension-0 and dimension-1 columns");
  }

  const auto path = cache_dir() / ("regression_" + cfg_.config_hash() + ".json");
  if (fs::exists(path)) {
    try {
      const auto doc = json::parse(read_text_file(path));
      const auto& payload = doc.at("payload");
      if (doc.at("checksum").get<std::string>() != fnv1a_hex(payload.dump())) {
        throw Error(Errc::CacheCorrupt, "cached regression checksum mismatch");
      }
      RegressionResult r;
      r.targets = payload.at("targets").get<std::vector<std::size_t>>();
      r.inputs = payload.at("inputs").get<std::vector<std::vector<std::size_t>>>();
      r.oof = payload.at("oof").get<std::vector<std::vector<double>>>();
      for (const auto& per_target : payload.at("errors")) {
        auto& row = r.errors.emplace_back();
        for (const auto& e : per_target) row.push_back({e.at(0).get<double>(), e.at(1).get<std::size_t>()});
      }
      regression_ = std::move(r);
      return *regression_;
    } catch (const json::exception& e) {
      throw Error(Errc::CacheCorrupt, std::string("malformed cached regression: ") + e.what());
    }
  }

  std::vector<std::size_t> all_rows(m.rows);
  std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
  // Keep the 50-of-150 ratio of dimension-0 inputs per target.
  const std::size_t n_inputs = std::max<std::size_t>(1, (dim0.size() + 1) / 3);

  RegressionResult r;
  r.targets = targets;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    log("regressing dimension-1 feature " + std::to_string(t + 1) + "/" + std::to_string(targets.size()) + " (" +
        m.columns[targets[t]] + ")");
    std::vector<double> y(m.rows);
    for (std::size_t row = 0; row < m.rows; ++row) y[row] = m.at(row, targets[t]);

    const auto pre = RandomForest::train(take(m, all_rows, dim0), y, ForestMode::Regress,
                                         forest_params(derive_seed(kStreamRegressPretrain, t), cfg_.effective_regress_trees()));
    const auto picked = select_top_features(pre.importances(), n_inputs, dim0.size());
    std::vector<std::size_t> inputs;
    for (auto i : picked.indices) inputs.push_back(dim0[i]);

    std::vector<double> oof(m.rows, 0.0);
    std::vector<RelativeError> errors;
    for (int f = 0; f < folds.k; ++f) {
      const auto train = folds.train_rows(f);
      const auto test = folds.test_rows(f);
      std::vector<double> y_train;
      for (auto row : train) y_train.push_back(y[row]);
      const auto forest = RandomForest::train(
          take(m, train, inputs), y_train, ForestMode::Regress,
          forest_params(derive_seed(derive_seed(kStreamRegress, t), static_cast<std::uint64_t>(f)),
                        cfg_.effective_regress_trees()));
      const auto x_test = take(m, test, inputs);
      std::vector<double> pred = forest.predict_all(x_test), actual;
      for (std::size_t i = 0; i < test.size(); ++i) {
        oof[test[i]] = pred[i];
        actual.push_back(y[test[i]]);
      }
      errors.push_back(mean_relative_error(pred, actual));
    }
    r.inputs.push_back(std::move(inputs));
    r.oof.push_back(std::move(oof));
    r.errors.push_back(std::move(errors));
  }

  json payload;
  payload["targets"] = r.targets;
  payload["inputs"] = r.inputs;
  payload["oof"] = r.oof;
  auto& errs = payload["errors"] = json::array();
  for (const auto& per_target : r.errors) {
    json row = json::array();
    for (const auto& e : per_target) row.push_back({e.mean, e.skipped});
    errs.push_back(std::move(row));
  }
  json doc{{"checksum", fnv1a_hex(payload.dump())}, {"payload", payload}};
  write_text_file(path, doc.dump());
  regression_ = std::move(r);
  return *regression_;
}

std::vector<fs::path> Pipeline::run(Experiment which) {
  const auto& m = features();
  const auto& sel = selection();
  const auto dim0 = filter_columns(sel, m, false);
  const auto dim1 = filter_columns(sel, m, true);
  const std::string name(to_string(which));
  log("running " + name + " (selection: " + std::to_string(sel.dim0) + " dim-0, " + std::to_string(sel.dim1) +
      " dim-1)");

  std::vector<std::size_t> all_rows(m.rows);
  std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
  const std::vector<int> digit_classes = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  const std::vector<int> hole_classes = {0, 1, 2};
  const auto digit_params = forest_params(kStreamClassify, cfg_.trees);

  auto classify_set = [&](const std::vector<std::size_t>& cols, const char* set_name) {
    if (cols.empty()) throw Error(Errc::InvalidConfig, std::string("feature set ") + set_name + " is empty");
    log(std::string("  cross-validating ") + set_name + " (" + std::to_string(cols.size()) + " columns)");
    return cross_validate_classifier(take(m, all_rows, cols), m.digit, digit_folds(), digit_classes, digit_params,
                                     set_name);
  };

  std::string scores, ttests;
  last_scores_.clear();
  switch (which) {
    case Experiment::DigitsDim0: {
      last_scores_.push_back(classify_set(dim0, "dim0"));
      scores = scores_csv(last_scores_, digit_classes);
      ttests = ttests_csv({}, digit_classes);
      break;
    }
    case Experiment::DigitsDim1Supplement: {
      last_scores_.push_back(classify_set(dim0, "dim0"));
      last_scores_.push_back(classify_set(dim1, "dim1"));
      last_scores_.push_back(classify_set(sel.indices, "dim0+dim1"));
      scores = scores_csv(last_scores_, digit_classes);
      ttests = ttests_csv({{&last_scores_[0], &last_scores_[2]}, {&last_scores_[1], &last_scores_[2]}}, digit_classes);
      break;
    }
    case Experiment::HolesClassify: {
      const auto folds = stratified_folds(m.hole_count, cfg_.folds, derive_seed(cfg_.seed, kStreamHoles));
      log("  cross-validating dim0 on hole counts");
      last_scores_.push_back(cross_validate_classifier(take(m, all_rows, dim0), m.hole_count, folds, hole_classes,
                                                       digit_params, "dim0"));
      scores = scores_csv(last_scores_, hole_classes);
      ttests = ttests_csv({}, hole_classes);
      break;
    }
    case Experiment::Dim1Regress: {
      const auto& reg = regression();
      scores = "target,rank,n_inputs";
      for (int f = 0; f < cfg_.folds; ++f) scores += ",fold_" + std::to_string(f + 1);
      scores += ",mean,sd,skipped\n";
      for (std::size_t t = 0; t < reg.targets.size(); ++t) {
        std::vector<double> per_fold;
        std::size_t skipped = 0;
        for (const auto& e : reg.errors[t]) {
          per_fold.push_back(e.mean);
          skipped += e.skipped;
        }
        scores += m.columns[reg.targets[t]] + "," + std::to_string(t + 1) + "," + std::to_string(reg.inputs[t].size());
        for (double v : per_fold) scores += "," + format_double(v);
        scores += "," + format_double(mean_of(per_fold)) + "," + format_double(sd_of(per_fold)) + "," +
                  std::to_string(skipped) + "\n";
      }
      ttests = "comparison,statistic\n";
      break;
    }
    case Experiment::Dim1PredictFeedback: {
      const auto& reg = regression();
      DenseMatrix base = take(m, all_rows, dim0);
      DenseMatrix augmented{m.rows, dim0.size() + reg.targets.size(), {}};
      augmented.values.reserve(augmented.rows * augmented.cols);
      for (std::size_t row = 0; row < m.rows; ++row) {
        auto src = base.row(row);
        augmented.values.insert(augmented.values.end(), src.begin(), src.end());
        for (const auto& oof : reg.oof) augmented.values.push_back(oof[row]);
      }
      log("  cross-validating dim0");
      last_scores_.push_back(
          cross_validate_classifier(base, m.digit, digit_folds(), digit_classes, digit_params, "dim0"));
      log("  cross-validating dim0+predicted_dim1");
      last_scores_.push_back(cross_validate_classifier(augmented, m.digit, digit_folds(), digit_classes,
                                                       digit_params, "dim0+predicted_dim1"));
      scores = scores_csv(last_scores_, digit_classes);
      ttests = ttests_csv({{&last_scores_[0], &last_scores_[1]}}, digit_classes);
      break;
    }
  }

  std::vector<fs::path> files = {cfg_.out_dir / ("scores_" + name + ".csv"), cfg_.out_dir / ("ttests_" + name + ".csv")};
  write_text_file(files[0], scores);
  write_text_file(files[1], ttests);
  write_manifest(which, files);
  files.push_back(cfg_.out_dir / "manifest.json");
  return files;
}

void Pipeline::write_manifest(Experiment which, const std::vector<fs::path>& files) {
  const auto path = cfg_.out_dir / "manifest.json";
  json doc;
  if (fs::exists(path)) {
    try {
      doc = json::parse(read_text_file(path));
      if (doc.value("config_hash", std::string{}) != cfg_.config_hash()) doc = json{};
    } catch (const json::exception&) {
      doc = json{};
    }
  }
  auto cfg_doc = json::parse(cfg_.to_json());
  cfg_doc.erase("out_dir");
  cfg_doc.erase("workers");
  doc["config"] = cfg_doc;
  doc["config_hash"] = cfg_.config_hash();
  doc["feature_hash"] = cfg_.feature_hash();
  doc["seed"] = cfg_.seed;
  doc["images"] = dataset().source_index.size();
  doc["image_source_index_hash"] = fnv1a_hex(json(dataset().source_index).dump());
  doc["features_csv_fnv1a"] = fnv1a_hex(read_text_file(cfg_.out_dir / "features.csv"));
  doc["selection"] = {{"indices", selection().indices}, {"dim0", selection().dim0}, {"dim1", selection().dim1}};

  json entry;
  for (const auto& f : files) entry["files"][f.filename().string()] = fnv1a_hex(read_text_file(f));
  for (const auto& set : last_scores_) {
    std::vector<double> overall;
    for (const auto& row : set.folds) overall.push_back(row.overall);
    entry["overall_f1"][set.feature_set] = {{"mean", mean_of(overall)}, {"sd", sd_of(overall)}};
  }
  doc["experiments"][std::string(to_string(which))] = entry;
  write_text_file(path, doc.dump(2) + "\n");
}

}  // namespace hcshape
