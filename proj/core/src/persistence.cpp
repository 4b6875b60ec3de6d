#include "hcshape/persistence.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <unordered_map>

#include "hcshape/error.hpp"

namespace hcshape {

PersistenceDiagram rips_dim0(const DistanceMatrix& dm) {
  const std::size_t n = dm.size();
  if (n < 2) throw Error(Errc::TooFewPoints, "degree-0 persistence needs at least two points");

  // Prim on the dense graph.
  std::vector<double> reach(n, std::numeric_limits<double>::infinity());
  std::vector<bool> in_tree(n, false);
  PersistenceDiagram out{0, {}};
  out.pairs.reserve(n - 1);
  reach[0] = 0.0;
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t next = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (!in_tree[v] && (next == n || reach[v] < reach[next])) next = v;
    }
    in_tree[next] = true;
    if (step > 0) out.pairs.push_back({0.0, reach[next]});
    for (std::size_t v = 0; v < n; ++v) {
      if (!in_tree[v]) reach[v] = std::min(reach[v], dm(next, v));
    }
  }
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const auto& x, const auto& y) { return x.death < y.death; });
  return out;
}

namespace {

struct Edge {
  double value;
  std::uint32_t u, v;  // u < v

  friend bool operator<(const Edge& x, const Edge& y) {
    if (x.value != y.value) return x.value < y.value;
    if (x.u != y.u) return x.u < y.u;
    return x.v < y.v;
  }
};

std::uint32_t find_root(std::vector<std::uint32_t>& parent, std::uint32_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

constexpr std::uint32_t kAbsent = std::numeric_limits<std::uint32_t>::max();

// Triangles are keyed by (rank of their longest edge) * n + (vertex opposite
// it). Edge rank already orders by scale, so key order refines the filtration.
class Coboundary {
 public:
  Coboundary(const DistanceMatrix& dm, double radius) : n_(dm.size()), rank_(n_ * n_, kAbsent) {
    for (std::uint32_t u = 0; u < n_; ++u) {
      for (std::uint32_t v = u + 1; v < n_; ++v) {
        if (dm(u, v) <= radius) edges_.push_back({dm(u, v), u, v});
      }
    }
    std::sort(edges_.begin(), edges_.end());
    for (std::uint32_t e = 0; e < edges_.size(); ++e) {
      rank_[edges_[e].u * n_ + edges_[e].v] = e;
      rank_[edges_[e].v * n_ + edges_[e].u] = e;
    }
  }

  const std::vector<Edge>& edges() const { return edges_; }
  std::uint32_t edge_of(std::uint64_t key) const { return static_cast<std::uint32_t>(key / n_); }

  // Key of triangle {u, v, w} given that edge e = uv, or nothing if a side is
  // missing from the truncated complex.
  std::uint64_t key(std::uint32_t e, std::uint32_t w) const {
    const auto& edge = edges_[e];
    const std::uint32_t ru = rank_[edge.u * n_ + w], rv = rank_[edge.v * n_ + w];
    if (ru == kAbsent || rv == kAbsent) return kNone;
    if (e > ru && e > rv) return std::uint64_t{e} * n_ + w;
    if (ru > rv) return std::uint64_t{ru} * n_ + edge.v;
    return std::uint64_t{rv} * n_ + edge.u;
  }

  std::uint64_t min_cofacet(std::uint32_t e) const {
    std::uint64_t best = kNone;
    const auto& edge = edges_[e];
    for (std::uint32_t w = 0; w < n_; ++w) {
      if (w != edge.u && w != edge.v) best = std::min(best, key(e, w));
    }
    return best;
  }

  void column(std::uint32_t e, std::vector<std::uint64_t>& out) const {
    out.clear();
    const auto& edge = edges_[e];
    for (std::uint32_t w = 0; w < n_; ++w) {
      if (w == edge.u || w == edge.v) continue;
      const auto k = key(e, w);
      if (k != kNone) out.push_back(k);
    }
    std::sort(out.begin(), out.end());
  }

  static constexpr std::uint64_t kNone = std::numeric_limits<std::uint64_t>::max();

 private:
  std::uint32_t n_;
  std::vector<Edge> edges_;
  std::vector<std::uint32_t> rank_;
};

void add_column(std::vector<std::uint64_t>& target, const std::vector<std::uint64_t>& source,
                std::vector<std::uint64_t>& scratch) {
  scratch.clear();
  std::set_symmetric_difference(target.begin(), target.end(), source.begin(), source.end(),
                                std::back_inserter(scratch));
  target.swap(scratch);
}

}  // namespace

PersistenceDiagram rips_dim1(const DistanceMatrix& dm) {
  const std::size_t n = dm.size();
  if (n < 3) throw Error(Errc::TooFewPoints, "degree-1 persistence needs at least three points");

  // Past the enclosing radius the complex is a cone, so every 1-cycle is
  // already dead; simplices above it only contribute zero-persistence pairs.
  double radius = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double row_max = 0.0;
    for (std::size_t j = 0; j < n; ++j) row_max = std::max(row_max, dm(i, j));
    radius = std::min(radius, row_max);
  }
  const Coboundary cob(dm, radius);
  const auto& edges = cob.edges();
  const auto m = static_cast<std::uint32_t>(edges.size());

  // Edges that merge components are paired in degree 0; their coboundary
  // columns are cleared.
  std::vector<bool> cleared(m, false);
  std::vector<std::uint32_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0u);
  for (std::uint32_t e = 0; e < m; ++e) {
    const auto a = find_root(parent, edges[e].u), b = find_root(parent, edges[e].v);
    if (a != b) {
      parent[std::max(a, b)] = std::min(a, b);
      cleared[e] = true;
    }
  }

  // The pairs equal those of the triangle boundary matrix; reducing the
  // coboundary matrix (edges in reverse order, pivot = oldest triangle) is
  // the same reduction on the anti-transpose. Columns of apparent pairs are
  // never modified, so they are regenerated on demand instead of stored.
  struct Owner {
    std::uint32_t edge;
    std::uint32_t slot;  // kAbsent: unreduced coboundary of `edge`
  };
  std::unordered_map<std::uint64_t, Owner> owner;
  owner.reserve(m);
  std::vector<std::vector<std::uint64_t>> stored;
  std::vector<std::uint64_t> col, other, scratch;
  PersistenceDiagram out{1, {}};
  auto record = [&](std::uint32_t e, std::uint64_t pivot) {
    const double death = edges[cob.edge_of(pivot)].value;
    if (death > edges[e].value) out.pairs.push_back({edges[e].value, death});
  };

  for (std::uint32_t e = m; e-- > 0;) {
    if (cleared[e]) continue;
    const auto first = cob.min_cofacet(e);
    if (first == Coboundary::kNone) continue;
    if (cob.edge_of(first) == e) {
      // Apparent pair: e is the youngest face of its oldest cofacet.
      record(e, first);
      owner.emplace(first, Owner{e, kAbsent});
      continue;
    }
    cob.column(e, col);
    while (!col.empty()) {
      const auto it = owner.find(col.front());
      if (it == owner.end()) break;
      if (it->second.slot == kAbsent) {
        cob.column(it->second.edge, other);
        add_column(col, other, scratch);
      } else {
        add_column(col, stored[it->second.slot], scratch);
      }
    }
    if (col.empty()) continue;
    record(e, col.front());
    owner.emplace(col.front(), Owner{e, static_cast<std::uint32_t>(stored.size())});
    stored.push_back(col);
  }
  std::sort(out.pairs.begin(), out.pairs.end(), [](const auto& x, const auto& y) {
    return x.birth != y.birth ? x.birth < y.birth : x.death < y.death;
  });
  return out;
}

Dim1Features dim1_features(const PersistenceDiagram& diagram, double noise_cutoff) {
  Dim1Features out;
  double total = 0.0;
  for (const auto& p : diagram.pairs) {
    const double pers = p.persistence();
    if (pers <= noise_cutoff) continue;
    out.cycle_count += 1.0;
    total += pers;
    out.max_persistence = std::max(out.max_persistence, pers);
  }
  if (out.cycle_count > 0.0) out.avg_persistence = total / out.cycle_count;
  return out;
}

Dim1Features mean_features(const std::vector<Dim1Features>& values) {
  Dim1Features out;
  if (values.empty()) return out;
  for (const auto& v : values) {
    out.cycle_count += v.cycle_count;
    out.avg_persistence += v.avg_persistence;
    out.max_persistence += v.max_persistence;
  }
  const auto m = static_cast<double>(values.size());
  out.cycle_count /= m;
  out.avg_persistence /= m;
  out.max_persistence /= m;
  return out;
}

std::string persistence_to_json(const PersistenceDiagram& diagram) {
  nlohmann::json doc;
  doc["dimension"] = diagram.dimension;
  auto& pairs = doc["pairs"] = nlohmann::json::array();
  for (const auto& p : diagram.pairs) pairs.push_back({p.birth, p.death});
  return doc.dump();
}

PersistenceDiagram persistence_from_json(const std::string& text) {
  PersistenceDiagram out;
  try {
    const auto doc = nlohmann::json::parse(text);
    out.dimension = doc.at("dimension").get<int>();
    for (const auto& p : doc.at("pairs")) out.pairs.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CacheCorrupt, std::string("malformed persistence diagram: ") + e.what());
  }
  return out;
}

}  // namespace hcshape
