#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hcshape/hclust.hpp"
#include "hcshape/persistence.hpp"
#include "hcshape/sampling.hpp"

namespace hcshape {

inline constexpr int kDefaultHistBins = 10;

/// Seven summaries of a bottleneck-distance distribution.
struct Summary7 {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double sd = 0.0;        // divisor N - 1, zero when N == 1
  double skewness = 0.0;  // m3 / m2^1.5, zero when m2 == 0
  double kurtosis = 0.0;  // m4 / m2^2 (not excess), zero when m2 == 0
  std::size_t largest_bin = 0;

  static constexpr std::size_t kCount = 7;
  static constexpr std::array<const char*, kCount> kNames = {"min",  "max",      "mean",       "sd",
                                                            "skew", "kurtosis", "largest_bin"};
  std::array<double, kCount> values() const;
};

/// Throws Error(Empty) on an empty input.
Summary7 summarize_bottleneck_distribution(std::span<const double> distances,
                                           int hist_bins = kDefaultHistBins);

inline constexpr std::array<const char*, 3> kDim1StatNames = {"h1_count", "h1_avg", "h1_max"};

/// Everything the feature matrix needs from one image.
struct ImageBlock {
  /// summaries[setting][linkage] in kAllLinkages order.
  std::vector<std::array<Summary7, 4>> summaries;
  /// Per-setting mean over instances of the degree-1 statistics.
  std::vector<Dim1Features> dim1;
};

/// Column layout: for each setting (outer), each linkage, each summary;
/// then for each setting the three degree-1 statistics.
struct FeatureLayout {
  std::vector<SamplingSetting> settings;

  std::size_t dim0_width() const noexcept { return settings.size() * 4 * Summary7::kCount; }
  std::size_t dim1_width() const noexcept { return settings.size() * kDim1StatNames.size(); }
  std::size_t width() const noexcept { return dim0_width() + dim1_width(); }
  bool is_dim1(std::size_t column) const noexcept { return column >= dim0_width(); }
  std::vector<std::string> column_names() const;
};

struct FeatureMatrix {
  std::vector<std::string> columns;
  std::size_t dim0_width = 0;
  std::size_t rows = 0;
  std::vector<double> values;  // row-major, rows x columns.size()
  std::vector<int> digit;
  std::vector<int> hole_count;

  std::size_t cols() const noexcept { return columns.size(); }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values).subspan(r * cols(), cols());
  }
  double at(std::size_t r, std::size_t c) const noexcept { return values[r * cols() + c]; }
  bool is_dim1(std::size_t c) const noexcept { return c >= dim0_width; }
};

/// Throws Error(MissingBlock) when any block lacks a setting, and
/// Error(LengthMismatch) when digits and blocks disagree in length.
FeatureMatrix assemble_feature_matrix(const FeatureLayout& layout, std::span<const ImageBlock> blocks,
                                      std::span<const std::uint8_t> digits);

/// CSV with a header of column names followed by `digit,hole_count`.
/// Numbers use the shortest round-trip representation.
std::string feature_matrix_to_csv(const FeatureMatrix& matrix);
FeatureMatrix feature_matrix_from_csv(const std::string& text);

/// Manifest: config hash, seed, and a column dictionary describing each
/// column's block, setting, linkage, and statistic.
std::string feature_manifest_json(const FeatureLayout& layout, const std::string& config_hash,
                                  std::uint64_t seed);
/// Checks a manifest against a matrix; returns an empty string when valid,
/// otherwise a description of the first problem.
std::string validate_feature_manifest(const std::string& manifest_json, const FeatureMatrix& matrix);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

}  // namespace hcshape
