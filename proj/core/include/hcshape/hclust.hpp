#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "hcshape/ingest.hpp"

namespace hcshape {

/// Dense symmetric matrix of pairwise dissimilarities with a zero diagonal.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }
  /// Writes both (i, j) and (j, i).
  void set(std::size_t i, std::size_t j, double v) noexcept {
    data_[i * n_ + j] = v;
    data_[j * n_ + i] = v;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Euclidean distances. Throws Error(TooFewPoints) below two points.
DistanceMatrix pairwise_distances(const PointCloud& cloud);

enum class Linkage { Single, Average, Complete, Ward };

inline constexpr Linkage kAllLinkages[] = {Linkage::Single, Linkage::Average, Linkage::Complete,
                                           Linkage::Ward};

std::string_view to_string(Linkage method) noexcept;

/// One agglomeration step. Leaves are clusters 0..n-1; the cluster created by
/// merge i gets id n + i.
struct Merge {
  std::size_t a = 0;
  std::size_t b = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::size_t n_leaves = 0;
  std::vector<Merge> merges;
};

/// Agglomerative clustering driven by the Lance-Williams update. Ward runs on
/// squared distances and reports square-root heights. Among equally close
/// pairs the one with the lexicographically smallest (a, b) cluster ids wins.
Dendrogram linkage(const DistanceMatrix& dm, Linkage method);

/// Multiset of merge heights {(0, d)}; births are implicitly zero.
struct ClusteringDiagram {
  std::vector<double> deaths;
};

ClusteringDiagram clustering_diagram(const Dendrogram& dendrogram);

// JSON: {"n_leaves": n, "merges": [[a, b, height, size], ...]} and
// {"deaths": [sorted heights]}.
std::string dendrogram_to_json(const Dendrogram& dendrogram);
Dendrogram dendrogram_from_json(const std::string& text);
std::string diagram_to_json(const ClusteringDiagram& diagram);

}  // namespace hcshape
