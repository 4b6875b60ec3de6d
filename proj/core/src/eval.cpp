#include "hcshape/eval.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <map>
#include <string>

#include "hcshape/error.hpp"
#include "hcshape/random.hpp"

namespace hcshape {

std::vector<std::size_t> FoldAssignment::train_rows(int f) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != f) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> FoldAssignment::test_rows(int f) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == f) rows.push_back(i);
  }
  return rows;
}

FoldAssignment stratified_folds(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::TooFewFolds, "cross validation needs at least two folds");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  FoldAssignment out{k, std::vector<int>(labels.size(), 0)};
  Rng rng(seed);
  std::size_t deal = 0;
  for (auto& [label, rows] : by_class) {
    if (rows.size() < static_cast<std::size_t>(k)) {
      throw Error(Errc::ClassTooSmall, "class " + std::to_string(label) + " has " +
                                           std::to_string(rows.size()) + " rows, fewer than " +
                                           std::to_string(k) + " folds");
    }
    shuffle_range(rows.begin(), rows.end(), rng);
    for (auto row : rows) out.fold_of[row] = static_cast<int>(deal++ % static_cast<std::size_t>(k));
  }
  return out;
}

F1Row f1_scores(std::span<const int> predicted, std::span<const int> actual, std::span<const int> classes) {
  if (predicted.size() != actual.size()) {
    throw Error(Errc::LengthMismatch, "predicted and actual label vectors differ in length");
  }
  F1Row out;
  for (int c : classes) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
      const bool p = predicted[i] == c, a = actual[i] == c;
      tp += p && a;
      fp += p && !a;
      fn += !p && a;
    }
    const double precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    out.per_class.push_back(precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0);
  }
  if (!out.per_class.empty()) {
    double sum = 0.0;
    for (double v : out.per_class) sum += v;
    out.overall = sum / static_cast<double>(out.per_class.size());
  }
  return out;
}

double student_t_two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::LengthMismatch, "paired samples differ in length");
  if (a.size() < 2) throw Error(Errc::TooFewFolds, "paired t-test needs at least two pairs");
  const auto n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += b[i] - a[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double c = (b[i] - a[i]) - mean;
    ss += c * c;
  }
  const double sd = std::sqrt(ss / (n - 1.0));

  TTestResult out;
  out.mean_diff = mean;
  out.df = static_cast<int>(a.size()) - 1;
  if (sd == 0.0) {
    out.t_statistic = mean == 0.0 ? 0.0 : std::copysign(INFINITY, mean);
    out.p_value = mean == 0.0 ? 1.0 : 0.0;
    return out;
  }
  out.t_statistic = mean / (sd / std::sqrt(n));
  out.p_value = student_t_two_sided_p(out.t_statistic, out.df);
  return out;
}

RelativeError mean_relative_error(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) throw Error(Errc::LengthMismatch, "prediction/target length mismatch");
  RelativeError out;
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0) {
      ++out.skipped;
      continue;
    }
    sum += std::abs(predicted[i] - actual[i]) / std::abs(actual[i]);
    ++used;
  }
  out.mean = used ? sum / static_cast<double>(used) : 0.0;
  return out;
}

int hole_label_map(int digit) {
  switch (digit) {
    case 1: case 2: case 3: case 5: case 7: return 0;
    case 0: case 4: case 6: case 9: return 1;
    case 8: return 2;
    default: throw Error(Errc::BadDigit, "not a digit: " + std::to_string(digit));
  }
}

}  // namespace hcshape
