#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hcshape {

struct FoldAssignment {
  int k = 0;
  std::vector<int> fold_of;  // one entry per row

  /// Row indices outside / inside fold `f`.
  std::vector<std::size_t> train_rows(int f) const;
  std::vector<std::size_t> test_rows(int f) const;
};

/// Within each class (ascending label), rows are shuffled by `seed` and dealt
/// round-robin to folds; the dealing position carries over between classes
/// so fold sizes also stay within one of each other. Throws
/// Error(ClassTooSmall) when some class has fewer than k rows.
FoldAssignment stratified_folds(std::span<const int> labels, int k, std::uint64_t seed);

struct F1Row {
  std::vector<double> per_class;
  double overall = 0.0;  // unweighted mean of per_class
};

/// One-vs-rest F1 per entry of `classes`; 0 when precision + recall is 0.
F1Row f1_scores(std::span<const int> predicted, std::span<const int> actual, std::span<const int> classes);

struct TTestResult {
  double mean_diff = 0.0;
  double t_statistic = 0.0;
  double p_value = 1.0;
  int df = 0;
};

/// Paired t-test on d = b - a with a two-sided Student-t p-value.
/// sd(d) = 0 gives p = 1 when mean(d) = 0 and p = 0 otherwise.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// Two-sided tail probability P(|T| >= |t|) for Student's t with `df` degrees
/// of freedom.
double student_t_two_sided_p(double t, double df);

struct RelativeError {
  double mean = 0.0;
  std::size_t skipped = 0;  // rows with actual == 0
};

RelativeError mean_relative_error(std::span<const double> predicted, std::span<const double> actual);

/// Number of holes in the written digit: {1,2,3,5,7} -> 0, {0,4,6,9} -> 1,
/// {8} -> 2. Throws Error(BadDigit) outside 0..9.
int hole_label_map(int digit);

}  // namespace hcshape
