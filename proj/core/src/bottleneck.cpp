#include "hcshape/bottleneck.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

#include "hcshape/error.hpp"

namespace hcshape {
namespace {

// Greedily saturates every point of `from` that cannot reach the diagonal
// (d / 2 > t) with a distinct partner in `to` within distance t. Each point's
// admissible partners form a contiguous run of `to`, and the runs move right
// as d grows, so taking the leftmost free partner is optimal.
bool saturate_far_points(std::span<const double> from, std::span<const double> to, double t) {
  std::size_t j = 0;
  for (double d : from) {
    if (d * 0.5 <= t) continue;
    while (j < to.size() && to[j] < d && d - to[j] > t) ++j;
    if (j == to.size() || std::abs(d - to[j]) > t) return false;
    ++j;
  }
  return true;
}

double sorted_bottleneck(std::span<const double> a, std::span<const double> b) {
  double upper = 0.0;
  if (!a.empty()) upper = std::max(upper, a.back() * 0.5);
  if (!b.empty()) upper = std::max(upper, b.back() * 0.5);
  if (bottleneck_feasible(a, b, 0.0)) return 0.0;

  // The answer is the smallest double t with feasible(t). Non-negative
  // doubles order like their bit patterns, so bisect on those; the search
  // lands exactly on one of the candidate costs.
  auto lo = std::bit_cast<std::uint64_t>(0.0);
  auto hi = std::bit_cast<std::uint64_t>(upper);
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (bottleneck_feasible(a, b, std::bit_cast<double>(mid))) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return std::bit_cast<double>(hi);
}

struct OracleSearch {
  std::span<const double> a;
  std::span<const double> b;
  std::vector<bool> used;
  double best = std::numeric_limits<double>::infinity();

  void run(std::size_t i, double cost) {
    if (cost >= best) return;
    if (i == a.size()) {
      for (std::size_t j = 0; j < b.size(); ++j) {
        if (!used[j]) cost = std::max(cost, b[j] * 0.5);
      }
      best = std::min(best, cost);
      return;
    }
    run(i + 1, std::max(cost, a[i] * 0.5));
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      used[j] = true;
      run(i + 1, std::max(cost, std::abs(a[i] - b[j])));
      used[j] = false;
    }
  }
};

}  // namespace

bool bottleneck_feasible(std::span<const double> sorted_a, std::span<const double> sorted_b, double t) {
  // A matching covering all far points of a and one covering all far points
  // of b combine into one covering both (Mendelsohn-Dulmage).
  return saturate_far_points(sorted_a, sorted_b, t) && saturate_far_points(sorted_b, sorted_a, t);
}

double bottleneck_distance(std::span<const double> a, std::span<const double> b) {
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  return sorted_bottleneck(sa, sb);
}

double bottleneck_distance(const ClusteringDiagram& a, const ClusteringDiagram& b) {
  return bottleneck_distance(a.deaths, b.deaths);
}

double bottleneck_oracle(std::span<const double> a, std::span<const double> b) {
  if (a.size() + b.size() > kOracleMaxPoints) {
    throw Error(Errc::TooLarge, "oracle limited to " + std::to_string(kOracleMaxPoints) + " points");
  }
  if (a.empty() && b.empty()) return 0.0;
  OracleSearch search{a, b, std::vector<bool>(b.size(), false)};
  search.run(0, 0.0);
  return search.best;
}

std::vector<double> pairwise_bottleneck(const std::vector<ClusteringDiagram>& diagrams) {
  const std::size_t m = diagrams.size();
  if (m < 2) throw Error(Errc::TooFew, "pairwise bottleneck needs at least two diagrams");
  std::vector<std::vector<double>> sorted(m);
  for (std::size_t i = 0; i < m; ++i) {
    sorted[i] = diagrams[i].deaths;
    std::sort(sorted[i].begin(), sorted[i].end());
  }
  std::vector<double> out;
  out.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) out.push_back(sorted_bottleneck(sorted[i], sorted[j]));
  }
  return out;
}

}  // namespace hcshape
