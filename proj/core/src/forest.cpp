#include "hcshape/forest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>

#include "hcshape/error.hpp"
#include "hcshape/parallel.hpp"
#include "hcshape/random.hpp"

namespace hcshape {

std::size_t DecisionTree::leaf_for(std::span<const double> x) const {
  std::size_t node = 0;
  while (feature[node] >= 0) {
    node = static_cast<std::size_t>(x[static_cast<std::size_t>(feature[node])] <= threshold[node] ? left[node]
                                                                                                  : right[node]);
  }
  return node;
}

namespace {

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double score = -INFINITY;
  std::size_t n_left = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(const DenseMatrix& x, std::span<const int> cls, std::span<const double> y, ForestMode mode,
              std::size_t n_classes, std::size_t max_features, std::size_t min_leaf, std::uint64_t seed)
      : x_(x), cls_(cls), y_(y), mode_(mode), n_classes_(n_classes), max_features_(max_features),
        min_leaf_(min_leaf), rng_(seed), features_(x.cols), importance_(x.cols, 0.0) {
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  DecisionTree build(std::vector<std::size_t> samples) {
    samples_ = std::move(samples);
    total_ = static_cast<double>(samples_.size());
    tree_.value_width = mode_ == ForestMode::Classify ? n_classes_ : 1;
    struct Task {
      std::size_t node, begin, end;
    };
    std::vector<Task> stack;
    stack.push_back({new_node(0, samples_.size()), 0, samples_.size()});
    while (!stack.empty()) {
      const Task task = stack.back();
      stack.pop_back();
      auto split = best_split(task.begin, task.end);
      if (split.feature < 0) continue;
      const std::size_t mid = partition(task.begin, task.end, split);
      tree_.feature[task.node] = split.feature;
      tree_.threshold[task.node] = split.threshold;
      const std::size_t l = new_node(task.begin, mid);
      const std::size_t r = new_node(mid, task.end);
      tree_.left[task.node] = static_cast<int>(l);
      tree_.right[task.node] = static_cast<int>(r);
      stack.push_back({r, mid, task.end});
      stack.push_back({l, task.begin, mid});
    }
    return std::move(tree_);
  }

  const std::vector<double>& importance() const noexcept { return importance_; }

 private:
  std::size_t new_node(std::size_t begin, std::size_t end) {
    const std::size_t id = tree_.feature.size();
    tree_.feature.push_back(-1);
    tree_.threshold.push_back(0.0);
    tree_.left.push_back(-1);
    tree_.right.push_back(-1);
    const double n = static_cast<double>(end - begin);
    if (mode_ == ForestMode::Classify) {
      std::vector<double> dist(n_classes_, 0.0);
      for (std::size_t i = begin; i < end; ++i) dist[static_cast<std::size_t>(cls_[samples_[i]])] += 1.0;
      for (auto& v : dist) tree_.value.push_back(v / n);
    } else {
      double sum = 0.0;
      for (std::size_t i = begin; i < end; ++i) sum += y_[samples_[i]];
      tree_.value.push_back(sum / n);
    }
    return id;
  }

  bool pure(std::size_t begin, std::size_t end) const {
    for (std::size_t i = begin + 1; i < end; ++i) {
      if (mode_ == ForestMode::Classify ? cls_[samples_[i]] != cls_[samples_[begin]]
                                        : y_[samples_[i]] != y_[samples_[begin]]) {
        return false;
      }
    }
    return true;
  }

  SplitCandidate best_split(std::size_t begin, std::size_t end) {
    SplitCandidate best;
    const std::size_t m = end - begin;
    if (m < 2 * min_leaf_ || pure(begin, end)) return best;

    // Draw features without replacement until max_features of them vary
    // within this node; constant ones do not count toward the budget.
    std::vector<std::size_t> chosen;
    for (std::size_t drawn = 0; drawn < features_.size() && chosen.size() < max_features_; ++drawn) {
      const std::size_t j = drawn + uniform_index(rng_, features_.size() - drawn);
      std::swap(features_[drawn], features_[j]);
      const std::size_t f = features_[drawn];
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t i = begin; i < end; ++i) {
        const double v = x_.at(samples_[i], f);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (lo < hi) chosen.push_back(f);
    }
    if (chosen.empty()) return best;
    std::sort(chosen.begin(), chosen.end());

    double base = 0.0;
    std::vector<double> node_counts(n_classes_, 0.0);
    double node_sum = 0.0;
    if (mode_ == ForestMode::Classify) {
      for (std::size_t i = begin; i < end; ++i) node_counts[static_cast<std::size_t>(cls_[samples_[i]])] += 1.0;
      for (double c : node_counts) base += c * c;
    } else {
      for (std::size_t i = begin; i < end; ++i) node_sum += y_[samples_[i]];
      base = node_sum * node_sum;
    }
    base /= static_cast<double>(m);

    order_.resize(m);
    for (std::size_t f : chosen) {
      for (std::size_t i = 0; i < m; ++i) order_[i] = {x_.at(samples_[begin + i], f), samples_[begin + i]};
      std::sort(order_.begin(), order_.end());
      if (mode_ == ForestMode::Classify) {
        scan_classify(f, node_counts, best);
      } else {
        scan_regress(f, node_sum, best);
      }
    }
    if (best.feature >= 0) importance_[static_cast<std::size_t>(best.feature)] += std::max(0.0, best.score - base) / total_;
    return best;
  }

  void consider(std::size_t f, std::size_t i, double score, SplitCandidate& best) const {
    if (!(score > best.score)) return;
    const double a = order_[i].first, b = order_[i + 1].first;
    double t = a + (b - a) * 0.5;
    if (!(t < b)) t = a;
    best = {static_cast<int>(f), t, score, i + 1};
  }

  void scan_classify(std::size_t f, const std::vector<double>& node_counts, SplitCandidate& best) {
    left_counts_.assign(n_classes_, 0.0);
    right_counts_ = node_counts;
    double sq_left = 0.0, sq_right = 0.0;
    for (double c : node_counts) sq_right += c * c;
    const std::size_t m = order_.size();
    for (std::size_t i = 0; i + 1 < m; ++i) {
      const auto c = static_cast<std::size_t>(cls_[order_[i].second]);
      sq_left += 2.0 * left_counts_[c] + 1.0;
      sq_right -= 2.0 * right_counts_[c] - 1.0;
      left_counts_[c] += 1.0;
      right_counts_[c] -= 1.0;
      const std::size_t nl = i + 1, nr = m - nl;
      if (order_[i].first == order_[i + 1].first || nl < min_leaf_ || nr < min_leaf_) continue;
      consider(f, i, sq_left / static_cast<double>(nl) + sq_right / static_cast<double>(nr), best);
    }
  }

  void scan_regress(std::size_t f, double node_sum, SplitCandidate& best) {
    double sum_left = 0.0;
    const std::size_t m = order_.size();
    for (std::size_t i = 0; i + 1 < m; ++i) {
      sum_left += y_[order_[i].second];
      const std::size_t nl = i + 1, nr = m - nl;
      if (order_[i].first == order_[i + 1].first || nl < min_leaf_ || nr < min_leaf_) continue;
      const double sum_right = node_sum - sum_left;
      consider(f, i, sum_left * sum_left / static_cast<double>(nl) + sum_right * sum_right / static_cast<double>(nr),
               best);
    }
  }

  std::size_t partition(std::size_t begin, std::size_t end, const SplitCandidate& split) {
    auto first = samples_.begin() + static_cast<std::ptrdiff_t>(begin);
    auto last = samples_.begin() + static_cast<std::ptrdiff_t>(end);
    auto f = static_cast<std::size_t>(split.feature);
    auto mid = std::stable_partition(first, last, [&](std::size_t s) { return x_.at(s, f) <= split.threshold; });
    return static_cast<std::size_t>(mid - samples_.begin());
  }

  const DenseMatrix& x_;
  std::span<const int> cls_;
  std::span<const double> y_;
  ForestMode mode_;
  std::size_t n_classes_;
  std::size_t max_features_;
  std::size_t min_leaf_;
  Rng rng_;
  std::vector<std::size_t> features_;
  std::vector<double> importance_;
  std::vector<std::size_t> samples_;
  double total_ = 0.0;
  DecisionTree tree_;
  std::vector<std::pair<double, std::size_t>> order_;
  std::vector<double> left_counts_, right_counts_;
};

const char* mode_name(ForestMode mode) { return mode == ForestMode::Classify ? "classify" : "regress"; }

}  // namespace

RandomForest RandomForest::train(const DenseMatrix& x, std::span<const double> y, ForestMode mode,
                                 const ForestParams& params) {
  if (x.rows == 0) throw Error(Errc::EmptyTrainingSet, "cannot train on zero rows");
  if (y.size() != x.rows) throw Error(Errc::LengthMismatch, "target count differs from row count");
  if (x.cols == 0) throw Error(Errc::EmptyTrainingSet, "cannot train on zero features");

  RandomForest forest;
  forest.mode_ = mode;
  forest.params_ = params;
  forest.n_features_ = x.cols;
  std::vector<int> cls;
  if (mode == ForestMode::Classify) {
    std::map<int, int> index;
    for (double v : y) index.emplace(static_cast<int>(v), 0);
    int next = 0;
    for (auto& [label, i] : index) {
      i = next++;
      forest.classes_.push_back(label);
    }
    cls.reserve(y.size());
    for (double v : y) cls.push_back(index[static_cast<int>(v)]);
  }

  std::size_t max_features = params.max_features;
  if (max_features == 0) {
    const double p = static_cast<double>(x.cols);
    max_features = static_cast<std::size_t>(std::ceil(mode == ForestMode::Classify ? std::sqrt(p) : p / 3.0));
  }
  max_features = std::clamp<std::size_t>(max_features, 1, x.cols);

  forest.trees_.resize(params.n_trees);
  std::vector<std::vector<double>> tree_importance(params.n_trees);
  parallel_for(params.n_trees, params.workers, [&](std::size_t t) {
    const std::uint64_t seed = derive_seed(params.seed, t);
    Rng boot(derive_seed(seed, 0));
    std::vector<std::size_t> samples(x.rows);
    if (params.bootstrap) {
      for (auto& s : samples) s = uniform_index(boot, x.rows);
    } else {
      std::iota(samples.begin(), samples.end(), std::size_t{0});
    }
    TreeBuilder builder(x, cls, y, mode, forest.classes_.size(), max_features, std::max<std::size_t>(1, params.min_leaf),
                        derive_seed(seed, 1));
    forest.trees_[t] = builder.build(std::move(samples));
    tree_importance[t] = builder.importance();
  });

  forest.importances_.assign(x.cols, 0.0);
  for (auto& imp : tree_importance) {
    const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
    if (total <= 0.0) continue;
    for (std::size_t f = 0; f < x.cols; ++f) forest.importances_[f] += imp[f] / total;
  }
  const double total = std::accumulate(forest.importances_.begin(), forest.importances_.end(), 0.0);
  if (total > 0.0) {
    for (auto& v : forest.importances_) v /= total;
  }
  return forest;
}

double RandomForest::predict(std::span<const double> x) const {
  if (x.size() != n_features_) {
    throw Error(Errc::ArityMismatch, "row has " + std::to_string(x.size()) + " features, model expects " +
                                         std::to_string(n_features_));
  }
  if (mode_ == ForestMode::Regress) {
    double sum = 0.0;
    for (const auto& tree : trees_) sum += tree.value[tree.leaf_for(x)];
    return trees_.empty() ? 0.0 : sum / static_cast<double>(trees_.size());
  }
  std::vector<std::size_t> votes(classes_.size(), 0);
  for (const auto& tree : trees_) {
    const std::size_t leaf = tree.leaf_for(x);
    const double* dist = &tree.value[leaf * tree.value_width];
    const auto top = std::max_element(dist, dist + tree.value_width) - dist;
    ++votes[static_cast<std::size_t>(top)];
  }
  const auto winner = std::max_element(votes.begin(), votes.end()) - votes.begin();
  return classes_.empty() ? 0.0 : static_cast<double>(classes_[static_cast<std::size_t>(winner)]);
}

std::vector<double> RandomForest::predict_all(const DenseMatrix& x) const {
  std::vector<double> out;
  out.reserve(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) out.push_back(predict(x.row(r)));
  return out;
}

std::string RandomForest::to_json(const std::string& column_hash) const {
  nlohmann::json doc;
  doc["format"] = "hcshape-forest";
  doc["version"] = 1;
  doc["mode"] = mode_name(mode_);
  doc["column_hash"] = column_hash;
  doc["n_features"] = n_features_;
  doc["classes"] = classes_;
  doc["params"] = {{"n_trees", params_.n_trees},   {"max_features", params_.max_features},
                   {"min_leaf", params_.min_leaf}, {"bootstrap", params_.bootstrap},
                   {"seed", params_.seed}};
  doc["importances"] = importances_;
  auto& trees = doc["trees"] = nlohmann::json::array();
  for (const auto& t : trees_) {
    trees.push_back({{"feature", t.feature},
                     {"threshold", t.threshold},
                     {"left", t.left},
                     {"right", t.right},
                     {"value", t.value},
                     {"value_width", t.value_width}});
  }
  return doc.dump();
}

RandomForest RandomForest::from_json(const std::string& text) {
  RandomForest forest;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format") != "hcshape-forest" || doc.at("version") != 1) {
      throw Error(Errc::CacheCorrupt, "unsupported model format");
    }
    forest.mode_ = doc.at("mode") == "classify" ? ForestMode::Classify : ForestMode::Regress;
    forest.n_features_ = doc.at("n_features").get<std::size_t>();
    forest.classes_ = doc.at("classes").get<std::vector<int>>();
    const auto& p = doc.at("params");
    forest.params_.n_trees = p.at("n_trees").get<std::size_t>();
    forest.params_.max_features = p.at("max_features").get<std::size_t>();
    forest.params_.min_leaf = p.at("min_leaf").get<std::size_t>();
    forest.params_.bootstrap = p.at("bootstrap").get<bool>();
    forest.params_.seed = p.at("seed").get<std::uint64_t>();
    forest.importances_ = doc.at("importances").get<std::vector<double>>();
    for (const auto& t : doc.at("trees")) {
      DecisionTree tree;
      tree.feature = t.at("feature").get<std::vector<int>>();
      tree.threshold = t.at("threshold").get<std::vector<double>>();
      tree.left = t.at("left").get<std::vector<int>>();
      tree.right = t.at("right").get<std::vector<int>>();
      tree.value = t.at("value").get<std::vector<double>>();
      tree.value_width = t.at("value_width").get<std::size_t>();
      forest.trees_.push_back(std::move(tree));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CacheCorrupt, std::string("malformed model: ") + e.what());
  }
  return forest;
}

FeatureSelection select_top_features(std::span<const double> importances, std::size_t k, std::size_t dim1_start) {
  if (k > importances.size()) {
    throw Error(Errc::KTooLarge, "cannot select " + std::to_string(k) + " of " +
                                     std::to_string(importances.size()) + " features");
  }
  std::vector<std::size_t> order(importances.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return importances[a] > importances[b]; });
  FeatureSelection out;
  out.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  for (auto i : out.indices) (i >= dim1_start ? out.dim1 : out.dim0)++;
  return out;
}

}  // namespace hcshape
