#include "hcshape/hclust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "hcshape/error.hpp"

namespace hcshape {

DistanceMatrix pairwise_distances(const PointCloud& cloud) {
  if (cloud.size() < 2) throw Error(Errc::TooFewPoints, "need at least two points");
  DistanceMatrix dm(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t j = i + 1; j < cloud.size(); ++j) {
      dm.set(i, j, std::hypot(cloud[i].x - cloud[j].x, cloud[i].y - cloud[j].y));
    }
  }
  return dm;
}

std::string_view to_string(Linkage method) noexcept {
  switch (method) {
    case Linkage::Single: return "single";
    case Linkage::Average: return "average";
    case Linkage::Complete: return "complete";
    case Linkage::Ward: return "ward";
  }
  return "unknown";
}

Dendrogram linkage(const DistanceMatrix& dm, Linkage method) {
  const std::size_t n = dm.size();
  if (n < 2) throw Error(Errc::TooFewPoints, "linkage needs at least two points");

  // Working matrix indexed by slot; a merged cluster reuses the lower slot.
  std::vector<double> d(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = dm(i, j);
      d[i * n + j] = method == Linkage::Ward ? v * v : v;
    }
  }
  std::vector<std::size_t> id(n), size(n, 1);
  std::vector<std::size_t> active(n);
  for (std::size_t i = 0; i < n; ++i) id[i] = active[i] = i;

  Dendrogram out;
  out.n_leaves = n;
  out.merges.reserve(n - 1);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    std::size_t best_lo = 0, best_hi = 0;
    for (std::size_t p = 0; p < active.size(); ++p) {
      const std::size_t i = active[p];
      const double* row = &d[i * n];
      for (std::size_t q = p + 1; q < active.size(); ++q) {
        const std::size_t j = active[q];
        const double v = row[j];
        if (v > best) continue;
        const std::size_t lo = std::min(id[i], id[j]);
        const std::size_t hi = std::max(id[i], id[j]);
        if (v < best || lo < best_lo || (lo == best_lo && hi < best_hi)) {
          best = v;
          bi = i;
          bj = j;
          best_lo = lo;
          best_hi = hi;
        }
      }
    }

    const std::size_t ni = size[bi], nj = size[bj];
    const double dij = d[bi * n + bj];
    for (std::size_t k : active) {
      if (k == bi || k == bj) continue;
      const double dik = d[bi * n + k], djk = d[bj * n + k];
      double v = 0.0;
      switch (method) {
        case Linkage::Single: v = std::min(dik, djk); break;
        case Linkage::Complete: v = std::max(dik, djk); break;
        case Linkage::Average:
          v = (static_cast<double>(ni) * dik + static_cast<double>(nj) * djk) / static_cast<double>(ni + nj);
          break;
        case Linkage::Ward: {
          const double nk = static_cast<double>(size[k]);
          v = ((static_cast<double>(ni) + nk) * dik + (static_cast<double>(nj) + nk) * djk - nk * dij) /
              (static_cast<double>(ni + nj) + nk);
          break;
        }
      }
      d[bi * n + k] = d[k * n + bi] = v;
    }

    const double height = method == Linkage::Ward ? std::sqrt(std::max(best, 0.0)) : best;
    out.merges.push_back({best_lo, best_hi, height, ni + nj});
    id[bi] = n + step;
    size[bi] = ni + nj;
    active.erase(std::find(active.begin(), active.end(), bj));
  }
  return out;
}

ClusteringDiagram clustering_diagram(const Dendrogram& dendrogram) {
  ClusteringDiagram out;
  out.deaths.reserve(dendrogram.merges.size());
  for (const auto& m : dendrogram.merges) out.deaths.push_back(m.height);
  return out;
}

std::string dendrogram_to_json(const Dendrogram& dendrogram) {
  nlohmann::json doc;
  doc["n_leaves"] = dendrogram.n_leaves;
  auto& merges = doc["merges"] = nlohmann::json::array();
  for (const auto& m : dendrogram.merges) merges.push_back({m.a, m.b, m.height, m.size});
  return doc.dump();
}

Dendrogram dendrogram_from_json(const std::string& text) {
  Dendrogram out;
  try {
    const auto doc = nlohmann::json::parse(text);
    out.n_leaves = doc.at("n_leaves").get<std::size_t>();
    for (const auto& m : doc.at("merges")) {
      out.merges.push_back({m.at(0).get<std::size_t>(), m.at(1).get<std::size_t>(),
                            m.at(2).get<double>(), m.at(3).get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CacheCorrupt, std::string("malformed dendrogram: ") + e.what());
  }
  return out;
}

std::string diagram_to_json(const ClusteringDiagram& diagram) {
  auto deaths = diagram.deaths;
  std::sort(deaths.begin(), deaths.end());
  return nlohmann::json{{"deaths", deaths}}.dump();
}

}  // namespace hcshape
