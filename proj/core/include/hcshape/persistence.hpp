#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hcshape/hclust.hpp"

namespace hcshape {

struct PersistencePair {
  double birth = 0.0;
  double death = 0.0;
  double persistence() const noexcept { return death - birth; }
};

struct PersistenceDiagram {
  int dimension = 0;
  std::vector<PersistencePair> pairs;
};

/// Finite part of the degree-0 Rips diagram: n - 1 pairs (0, w) with w the
/// minimum spanning tree edge weights, ascending. The essential class is
/// omitted. Throws Error(TooFewPoints) for n < 2.
PersistenceDiagram rips_dim0(const DistanceMatrix& dm);

/// Degree-1 Rips diagram over Z/2, filtered by scale with ties broken by a
/// fixed simplex order. Zero-persistence pairs are dropped; pairs are sorted
/// by (birth, death). Only simplices up to the enclosing radius are built,
/// which loses nothing: beyond it the complex is a cone. Throws
/// Error(TooFewPoints) for n < 3.
PersistenceDiagram rips_dim1(const DistanceMatrix& dm);

struct Dim1Features {
  double cycle_count = 0.0;
  double avg_persistence = 0.0;
  double max_persistence = 0.0;
};

/// Statistics over pairs whose persistence strictly exceeds `noise_cutoff`;
/// all zero when none qualify.
Dim1Features dim1_features(const PersistenceDiagram& diagram, double noise_cutoff = 0.0);

/// Component-wise mean; zero for an empty input.
Dim1Features mean_features(const std::vector<Dim1Features>& values);

// {"dimension": d, "pairs": [[birth, death], ...]}
std::string persistence_to_json(const PersistenceDiagram& diagram);
PersistenceDiagram persistence_from_json(const std::string& text);

}  // namespace hcshape
