#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hcshape/eval.hpp"
#include "hcshape/features.hpp"
#include "hcshape/forest.hpp"
#include "hcshape/ingest.hpp"

namespace hcshape {

/// Parameters that determine the per-image feature blocks.
struct FeatureConfig {
  int threshold = kDefaultThreshold;
  std::vector<int> resolutions = kDefaultResolutions;
  int n_instances = 10;
  int sampling_bins = kDefaultSamplingBins;
  int hist_bins = kDefaultHistBins;
  double noise_cutoff = 0.0;
};

struct ExperimentConfig {
  std::filesystem::path data_dir = "data/mnist-5k";
  std::filesystem::path out_dir = "out";
  std::string images_file = "train-images-idx3-ubyte";
  std::string labels_file = "train-labels-idx1-ubyte";
  std::size_t images = 2000;
  FeatureConfig features;
  std::size_t trees = 200;
  std::size_t regress_trees = 0;  // 0: same as trees
  std::size_t top_k = 200;
  int folds = 5;
  std::uint64_t seed = 1;
  unsigned workers = 0;  // 0: hardware concurrency
  bool keep_intermediates = false;

  /// Throws Error(InvalidConfig) on out-of-range values.
  void validate() const;
  unsigned effective_workers() const;
  std::size_t effective_regress_trees() const { return regress_trees ? regress_trees : trees; }

  /// Canonical JSON (sorted keys) of every field.
  std::string to_json() const;
  /// Overlays the keys present in `text` onto `base`.
  static ExperimentConfig from_json(const std::string& text, ExperimentConfig base);
  static ExperimentConfig from_json(const std::string& text) { return from_json(text, ExperimentConfig{}); }

  /// Hash of the fields that shape per-image features (keys the block cache).
  std::string feature_hash() const;
  /// Hash of every field that can change an emitted byte.
  std::string config_hash() const;
};

/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view data);

enum class Experiment { DigitsDim0, DigitsDim1Supplement, HolesClassify, Dim1Regress, Dim1PredictFeedback };

std::string_view to_string(Experiment which) noexcept;
std::optional<Experiment> parse_experiment(std::string_view name);
inline constexpr Experiment kAllExperiments[] = {Experiment::DigitsDim0, Experiment::DigitsDim1Supplement,
                                                 Experiment::HolesClassify, Experiment::Dim1Regress,
                                                 Experiment::Dim1PredictFeedback};

/// Everything computed for one image on the way to its feature block.
struct ImageIntermediates {
  SampleSet samples;
  /// distances[setting][linkage]: pairwise bottleneck distances, upper
  /// triangle order.
  std::vector<std::array<std::vector<double>, 4>> distances;
};

/// Sampling, clustering, bottleneck summaries, and averaged degree-1
/// statistics for one point cloud. Samples with fewer than two points yield
/// an empty clustering diagram; fewer than three, an empty degree-1 diagram.
ImageBlock featurize_cloud(const PointCloud& cloud, const FeatureConfig& cfg, std::uint64_t image_seed,
                           ImageIntermediates* keep = nullptr);

// The three stages behind featurize_cloud, exposed so callers can serve any
// of them from a cache.
SampleSet sample_image(const PointCloud& cloud, const FeatureConfig& cfg, std::uint64_t image_seed);
void compute_bottleneck_distances(ImageIntermediates& inter);
ImageBlock block_from_intermediates(const ImageIntermediates& inter, const FeatureConfig& cfg);

std::string image_block_to_json(const ImageBlock& block, const std::string& feature_hash);
/// Throws Error(CacheCorrupt) when the stored hash or checksum disagrees.
ImageBlock image_block_from_json(const std::string& text, const std::string& feature_hash);

/// Flat little-endian sidecar of bottleneck distances.
std::vector<std::uint8_t> distances_to_binary(const ImageIntermediates& inter);
void distances_from_binary(std::span<const std::uint8_t> bytes, ImageIntermediates& inter);

/// The subset of a labelled image file used by a run.
struct Dataset {
  ImageSet images;
  std::vector<std::uint8_t> digits;
  std::vector<std::size_t> source_index;  // position in the original file
};

/// Walks the files in order, keeping at most ceil-share of `cap` per digit
/// (the first cap % 10 digits get one extra).
Dataset load_dataset(const ExperimentConfig& cfg);

/// Gather rows and columns of a feature matrix.
DenseMatrix take(const FeatureMatrix& m, std::span<const std::size_t> rows, std::span<const std::size_t> cols);

struct CvScores {
  std::string feature_set;
  std::vector<F1Row> folds;
};

CvScores cross_validate_classifier(const DenseMatrix& x, std::span<const int> labels, const FoldAssignment& folds,
                                   std::span<const int> classes, const ForestParams& params,
                                   std::string feature_set);

using ProgressFn = std::function<void(std::string_view)>;

/// Orchestrates the full pipeline against an output directory and its cache.
class Pipeline {
 public:
  explicit Pipeline(ExperimentConfig cfg, ProgressFn progress = {});

  const ExperimentConfig& config() const noexcept { return cfg_; }

  const Dataset& dataset();
  /// Feature matrix for the dataset; per-image blocks come from the cache
  /// when present. Writes features.csv and features_manifest.json.
  const FeatureMatrix& features();
  /// Top-k features of a digit classifier trained on every column.
  const FeatureSelection& selection();

  /// Runs one experiment and writes scores_<name>.csv, ttests_<name>.csv and
  /// manifest.json into the output directory. Returns the written paths.
  std::vector<std::filesystem::path> run(Experiment which);

  /// Mean macro-F1 per feature set of the last classification experiment.
  const std::vector<CvScores>& last_scores() const noexcept { return last_scores_; }

  std::filesystem::path cache_dir() const;

 private:
  struct RegressionResult {
    std::vector<std::size_t> targets;                 // feature columns predicted
    std::vector<std::vector<double>> oof;             // oof[target][row]
    std::vector<std::vector<RelativeError>> errors;   // errors[target][fold]
    std::vector<std::vector<std::size_t>> inputs;     // dim-0 columns used per target
  };

  const FoldAssignment& digit_folds();
  const RegressionResult& regression();
  ForestParams forest_params(std::uint64_t stream, std::size_t trees) const;
  void log(std::string_view message) const;
  void write_manifest(Experiment which, const std::vector<std::filesystem::path>& files);

  ExperimentConfig cfg_;
  ProgressFn progress_;
  std::optional<Dataset> dataset_;
  std::optional<FeatureMatrix> features_;
  std::optional<FeatureSelection> selection_;
  std::optional<FoldAssignment> digit_folds_;
  std::optional<RegressionResult> regression_;
  std::vector<CvScores> last_scores_;
};

/// Atomic write (temp file + rename). Throws Error(Io).
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace hcshape
