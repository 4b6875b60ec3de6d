#include "hcshape/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "hcshape/error.hpp"
#include "hcshape/random.hpp"

namespace hcshape {

std::vector<Point> landmark_grid() {
  constexpr double coords[] = {4.5, 13.5, 22.5};
  std::vector<Point> grid;
  for (double y : coords) {
    for (double x : coords) grid.push_back({x, y});
  }
  return grid;
}

std::string SamplingSetting::tag() const {
  return "L" + std::to_string(landmark_index) + "k" + std::to_string(resolution);
}

std::vector<SamplingSetting> sampling_settings(std::size_t n_landmarks,
                                               const std::vector<int>& resolutions) {
  std::vector<SamplingSetting> out;
  for (std::size_t l = 0; l < n_landmarks; ++l) {
    for (int k : resolutions) out.push_back({static_cast<int>(l), k});
  }
  return out;
}

PointCloud sample_at_resolution(const PointCloud& cloud, Point landmark, int k, int bins,
                                std::uint64_t seed) {
  if (cloud.empty()) throw Error(Errc::EmptyCloud, "cannot sample from an empty cloud");
  if (k < 1 || bins < 1) throw Error(Errc::InvalidConfig, "resolution and bin count must be >= 1");

  std::vector<double> dist(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    dist[i] = std::hypot(cloud[i].x - landmark.x, cloud[i].y - landmark.y);
  }
  const double max_dist = *std::max_element(dist.begin(), dist.end());

  std::vector<std::vector<std::size_t>> shells(static_cast<std::size_t>(bins));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    std::size_t b = 0;
    if (max_dist > 0.0) {
      b = static_cast<std::size_t>(dist[i] / max_dist * bins);
      b = std::min(b, static_cast<std::size_t>(bins - 1));
    }
    shells[b].push_back(i);
  }

  Rng rng(seed);
  std::vector<std::size_t> chosen;
  for (auto& shell : shells) {
    if (shell.empty()) continue;
    const std::size_t quota = (shell.size() + static_cast<std::size_t>(k) - 1) / static_cast<std::size_t>(k);
    // Partial Fisher-Yates: the first `quota` slots become the draw.
    for (std::size_t i = 0; i < quota; ++i) {
      std::size_t j = i + uniform_index(rng, shell.size() - i);
      std::swap(shell[i], shell[j]);
    }
    chosen.insert(chosen.end(), shell.begin(), shell.begin() + static_cast<std::ptrdiff_t>(quota));
  }
  std::sort(chosen.begin(), chosen.end());

  PointCloud out;
  out.reserve(chosen.size());
  for (auto i : chosen) out.push_back(cloud[i]);
  return out;
}

std::uint64_t instance_seed(std::uint64_t master_seed, std::size_t setting_index, int n_instances,
                            int instance) {
  return derive_seed(master_seed, setting_index * static_cast<std::uint64_t>(n_instances) +
                                      static_cast<std::uint64_t>(instance));
}

SampleSet generate_sample_set(const PointCloud& cloud, const std::vector<Point>& landmarks,
                              const std::vector<int>& resolutions, int n_instances,
                              std::uint64_t master_seed, int bins) {
  if (cloud.empty()) throw Error(Errc::EmptyCloud, "cannot sample from an empty cloud");
  SampleSet out;
  out.settings = sampling_settings(landmarks.size(), resolutions);
  out.n_instances = n_instances;
  out.master_seed = master_seed;
  out.clouds.resize(out.settings.size());
  for (std::size_t s = 0; s < out.settings.size(); ++s) {
    const auto& setting = out.settings[s];
    auto& row = out.clouds[s];
    row.reserve(static_cast<std::size_t>(n_instances));
    for (int i = 0; i < n_instances; ++i) {
      row.push_back(sample_at_resolution(cloud, landmarks[static_cast<std::size_t>(setting.landmark_index)],
                                         setting.resolution, bins,
                                         instance_seed(master_seed, s, n_instances, i)));
    }
  }
  return out;
}

std::string sample_set_to_json(const SampleSet& samples) {
  nlohmann::json doc;
  doc["master_seed"] = samples.master_seed;
  doc["n_instances"] = samples.n_instances;
  auto& settings = doc["settings"] = nlohmann::json::array();
  for (std::size_t s = 0; s < samples.settings.size(); ++s) {
    nlohmann::json entry;
    entry["landmark"] = samples.settings[s].landmark_index;
    entry["resolution"] = samples.settings[s].resolution;
    auto& instances = entry["instances"] = nlohmann::json::array();
    for (const auto& cloud : samples.clouds[s]) {
      nlohmann::json pts = nlohmann::json::array();
      for (const auto& p : cloud) pts.push_back({p.x, p.y});
      instances.push_back(std::move(pts));
    }
    settings.push_back(std::move(entry));
  }
  return doc.dump();
}

SampleSet sample_set_from_json(const std::string& text) {
  SampleSet out;
  try {
    const auto doc = nlohmann::json::parse(text);
    out.master_seed = doc.at("master_seed").get<std::uint64_t>();
    out.n_instances = doc.at("n_instances").get<int>();
    for (const auto& entry : doc.at("settings")) {
      out.settings.push_back({entry.at("landmark").get<int>(), entry.at("resolution").get<int>()});
      auto& row = out.clouds.emplace_back();
      for (const auto& pts : entry.at("instances")) {
        PointCloud cloud;
        for (const auto& p : pts) cloud.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        row.push_back(std::move(cloud));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CacheCorrupt, std::string("malformed sample set: ") + e.what());
  }
  return out;
}

}  // namespace hcshape
