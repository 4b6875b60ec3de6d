#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hcshape/hclust.hpp"

namespace hcshape {

/// Exact bottleneck distance between two birth-zero diagrams given as death
/// values. A point d costs |d - d'| when matched to d' and d / 2 when sent to
/// the diagonal.
double bottleneck_distance(std::span<const double> a, std::span<const double> b);
double bottleneck_distance(const ClusteringDiagram& a, const ClusteringDiagram& b);

/// Same quantity by exhaustive search over every partial injection.
/// Throws Error(TooLarge) when |a| + |b| > kOracleMaxPoints.
inline constexpr std::size_t kOracleMaxPoints = 16;
double bottleneck_oracle(std::span<const double> a, std::span<const double> b);

/// Distances between every unordered pair, in row-major upper-triangle order:
/// (0,1), (0,2), ..., (0,m-1), (1,2), ... Throws Error(TooFew) when m < 2.
std::vector<double> pairwise_bottleneck(const std::vector<ClusteringDiagram>& diagrams);

/// Feasibility of a bottleneck matching at cost `t` for ascending inputs.
bool bottleneck_feasible(std::span<const double> sorted_a, std::span<const double> sorted_b, double t);

}  // namespace hcshape
