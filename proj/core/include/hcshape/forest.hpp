#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hcshape {

/// Row-major dense matrix of training features.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const noexcept { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values).subspan(r * cols, cols);
  }
};

enum class ForestMode { Classify, Regress };

struct ForestParams {
  std::size_t n_trees = 200;
  std::size_t max_features = 0;  // 0: ceil(sqrt(p)) to classify, ceil(p / 3) to regress
  std::size_t min_leaf = 1;
  bool bootstrap = true;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

/// One CART tree in flat arrays. Leaves have feature == -1; `value` holds a
/// class distribution (classify) or a single mean (regress) per node.
struct DecisionTree {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<double> value;  // stride = value_width
  std::size_t value_width = 1;

  std::size_t node_count() const noexcept { return feature.size(); }
  /// Index of the leaf reached by `x` (x[f] <= threshold goes left).
  std::size_t leaf_for(std::span<const double> x) const;
};

class RandomForest {
 public:
  /// Grows params.n_trees trees on bootstrap resamples. In classify mode `y`
  /// holds integer class labels. Throws Error(EmptyTrainingSet) for zero rows
  /// and Error(LengthMismatch) when y and X disagree.
  static RandomForest train(const DenseMatrix& x, std::span<const double> y, ForestMode mode,
                            const ForestParams& params);

  /// Plurality vote (ties -> smallest label) or mean of tree outputs.
  /// Throws Error(ArityMismatch) on a row of the wrong width.
  double predict(std::span<const double> x) const;
  int predict_class(std::span<const double> x) const { return static_cast<int>(predict(x)); }
  std::vector<double> predict_all(const DenseMatrix& x) const;

  /// Mean decrease in impurity, normalized per tree and then overall.
  const std::vector<double>& importances() const noexcept { return importances_; }

  ForestMode mode() const noexcept { return mode_; }
  const ForestParams& params() const noexcept { return params_; }
  const std::vector<int>& classes() const noexcept { return classes_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  std::size_t n_features() const noexcept { return n_features_; }

  /// Versioned JSON; `column_hash` identifies the feature columns trained on.
  std::string to_json(const std::string& column_hash = {}) const;
  static RandomForest from_json(const std::string& text);

 private:
  ForestMode mode_ = ForestMode::Classify;
  ForestParams params_;
  std::size_t n_features_ = 0;
  std::vector<int> classes_;
  std::vector<DecisionTree> trees_;
  std::vector<double> importances_;
};

struct FeatureSelection {
  std::vector<std::size_t> indices;  // descending importance, ties -> lower index
  std::size_t dim0 = 0;
  std::size_t dim1 = 0;
};

/// Top-k features by importance. Columns at or past `dim1_start` count as
/// degree-1 features in the reported split. Throws Error(KTooLarge) for k > p.
FeatureSelection select_top_features(std::span<const double> importances, std::size_t k,
                                     std::size_t dim1_start);

}  // namespace hcshape
