#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hcshape/ingest.hpp"

namespace hcshape {

inline constexpr int kDefaultSamplingBins = 10;
inline constexpr int kDefaultInstances = 30;
inline const std::vector<int> kDefaultResolutions = {2, 3, 4, 5, 6};

/// 3x3 grid of reference points at {4.5, 13.5, 22.5}^2, row-major
/// (x varies fastest).
std::vector<Point> landmark_grid();

/// A (landmark, resolution) pair.
struct SamplingSetting {
  int landmark_index = 0;
  int resolution = 2;

  /// Short stable tag such as "L0k2", used in column names and cache keys.
  std::string tag() const;
  friend bool operator==(const SamplingSetting&, const SamplingSetting&) = default;
};

/// All settings in canonical order: landmarks outer, resolutions inner.
std::vector<SamplingSetting> sampling_settings(std::size_t n_landmarks,
                                               const std::vector<int>& resolutions);

/// Draws ceil(s/k) points without replacement from every non-empty shell of
/// a `bins`-bin histogram of distances to `landmark`. Returned points keep
/// their source order. Throws Error(EmptyCloud) on an empty cloud.
PointCloud sample_at_resolution(const PointCloud& cloud, Point landmark, int k, int bins,
                                std::uint64_t seed);

struct SampleSet {
  std::vector<SamplingSetting> settings;
  int n_instances = 0;
  std::uint64_t master_seed = 0;
  /// clouds[setting][instance]
  std::vector<std::vector<PointCloud>> clouds;

  std::size_t total_clouds() const noexcept { return settings.size() * static_cast<std::size_t>(n_instances); }
};

/// Seed of one instance: derive_seed(master, setting_index * n_instances + instance).
std::uint64_t instance_seed(std::uint64_t master_seed, std::size_t setting_index, int n_instances,
                            int instance);

SampleSet generate_sample_set(const PointCloud& cloud, const std::vector<Point>& landmarks,
                              const std::vector<int>& resolutions, int n_instances,
                              std::uint64_t master_seed, int bins = kDefaultSamplingBins);

// JSON layout:
// {"master_seed": s, "n_instances": n,
//  "settings": [{"landmark": i, "resolution": k,
//                "instances": [[[x, y], ...], ...]}, ...]}
std::string sample_set_to_json(const SampleSet& samples);
SampleSet sample_set_from_json(const std::string& text);

}  // namespace hcshape
