#include "hcshape/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>

#include "hcshape/error.hpp"
#include "hcshape/eval.hpp"

namespace hcshape {

std::array<double, Summary7::kCount> Summary7::values() const {
  return {min, max, mean, sd, skewness, kurtosis, static_cast<double>(largest_bin)};
}

Summary7 summarize_bottleneck_distribution(std::span<const double> distances, int hist_bins) {
  if (distances.empty()) throw Error(Errc::Empty, "cannot summarize an empty distribution");
  if (hist_bins < 1) throw Error(Errc::InvalidConfig, "histogram needs at least one bin");
  const auto n = static_cast<double>(distances.size());

  Summary7 s;
  const auto [lo, hi] = std::minmax_element(distances.begin(), distances.end());
  s.min = *lo;
  s.max = *hi;
  double sum = 0.0;
  for (double d : distances) sum += d;
  s.mean = sum / n;

  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double d : distances) {
    const double c = d - s.mean;
    const double c2 = c * c;
    m2 += c2;
    m3 += c2 * c;
    m4 += c2 * c2;
  }
  s.sd = distances.size() > 1 ? std::sqrt(m2 / (n - 1.0)) : 0.0;
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 > 0.0) {
    s.skewness = m3 / std::pow(m2, 1.5);
    s.kurtosis = m4 / (m2 * m2);
  }

  std::vector<std::size_t> bins(static_cast<std::size_t>(hist_bins), 0);
  const double width = s.max - s.min;
  for (double d : distances) {
    std::size_t b = 0;
    if (width > 0.0) {
      b = static_cast<std::size_t>((d - s.min) / width * hist_bins);
      b = std::min(b, bins.size() - 1);
    }
    ++bins[b];
  }
  s.largest_bin = *std::max_element(bins.begin(), bins.end());
  return s;
}

std::vector<std::string> FeatureLayout::column_names() const {
  std::vector<std::string> names;
  names.reserve(width());
  for (const auto& setting : settings) {
    for (auto method : kAllLinkages) {
      for (const char* stat : Summary7::kNames) {
        names.push_back(setting.tag() + "_" + std::string(to_string(method)) + "_" + stat);
      }
    }
  }
  for (const auto& setting : settings) {
    for (const char* stat : kDim1StatNames) names.push_back(setting.tag() + "_" + stat);
  }
  return names;
}

FeatureMatrix assemble_feature_matrix(const FeatureLayout& layout, std::span<const ImageBlock> blocks,
                                      std::span<const std::uint8_t> digits) {
  if (blocks.size() != digits.size()) {
    throw Error(Errc::LengthMismatch, "feature blocks and labels differ in length");
  }
  FeatureMatrix m;
  m.columns = layout.column_names();
  m.dim0_width = layout.dim0_width();
  m.rows = blocks.size();
  m.values.reserve(m.rows * m.cols());
  for (std::size_t r = 0; r < blocks.size(); ++r) {
    const auto& block = blocks[r];
    if (block.summaries.size() != layout.settings.size() || block.dim1.size() != layout.settings.size()) {
      throw Error(Errc::MissingBlock, "image " + std::to_string(r) + " lacks summaries for some settings");
    }
    for (const auto& per_linkage : block.summaries) {
      for (const auto& summary : per_linkage) {
        for (double v : summary.values()) m.values.push_back(v);
      }
    }
    for (const auto& f : block.dim1) {
      m.values.push_back(f.cycle_count);
      m.values.push_back(f.avg_persistence);
      m.values.push_back(f.max_persistence);
    }
    m.digit.push_back(digits[r]);
    m.hole_count.push_back(hole_label_map(digits[r]));
  }
  return m;
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string feature_matrix_to_csv(const FeatureMatrix& matrix) {
  std::string out;
  for (const auto& name : matrix.columns) {
    out += name;
    out += ',';
  }
  out += "digit,hole_count\n";
  for (std::size_t r = 0; r < matrix.rows; ++r) {
    for (double v : matrix.row(r)) {
      out += format_double(v);
      out += ',';
    }
    out += std::to_string(matrix.digit[r]);
    out += ',';
    out += std::to_string(matrix.hole_count[r]);
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    fields.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(Errc::CacheCorrupt, "bad number in feature CSV: " + std::string(s));
  }
  return v;
}

}  // namespace

FeatureMatrix feature_matrix_from_csv(const std::string& text) {
  FeatureMatrix m;
  std::string_view rest(text);
  auto next_line = [&rest]() {
    auto pos = rest.find('\n');
    auto line = rest.substr(0, pos);
    rest = pos == std::string_view::npos ? std::string_view{} : rest.substr(pos + 1);
    return line;
  };
  auto header = split_commas(next_line());
  if (header.size() < 2 || header[header.size() - 2] != "digit" || header.back() != "hole_count") {
    throw Error(Errc::CacheCorrupt, "feature CSV header lacks digit,hole_count");
  }
  for (std::size_t i = 0; i + 2 < header.size(); ++i) {
    m.columns.emplace_back(header[i]);
    if (m.dim0_width == i && m.columns.back().find("_h1_") == std::string::npos) m.dim0_width = i + 1;
  }
  while (!rest.empty()) {
    auto line = next_line();
    if (line.empty()) continue;
    auto fields = split_commas(line);
    if (fields.size() != header.size()) throw Error(Errc::CacheCorrupt, "ragged feature CSV row");
    for (std::size_t i = 0; i + 2 < fields.size(); ++i) m.values.push_back(parse_double(fields[i]));
    m.digit.push_back(static_cast<int>(parse_double(fields[fields.size() - 2])));
    m.hole_count.push_back(static_cast<int>(parse_double(fields.back())));
    ++m.rows;
  }
  return m;
}

std::string feature_manifest_json(const FeatureLayout& layout, const std::string& config_hash,
                                  std::uint64_t seed) {
  nlohmann::json doc;
  doc["config_hash"] = config_hash;
  doc["seed"] = seed;
  doc["n_columns"] = layout.width();
  doc["dim0_columns"] = layout.dim0_width();
  doc["dim1_columns"] = layout.dim1_width();
  auto names = layout.column_names();
  auto& dict = doc["columns"] = nlohmann::json::array();
  std::size_t c = 0;
  for (const auto& setting : layout.settings) {
    for (auto method : kAllLinkages) {
      for (const char* stat : Summary7::kNames) {
        dict.push_back({{"index", c}, {"name", names[c]}, {"block", "dim0"},
                        {"landmark", setting.landmark_index}, {"resolution", setting.resolution},
                        {"linkage", to_string(method)}, {"statistic", stat}});
        ++c;
      }
    }
  }
  for (const auto& setting : layout.settings) {
    for (const char* stat : kDim1StatNames) {
      dict.push_back({{"index", c}, {"name", names[c]}, {"block", "dim1"},
                      {"landmark", setting.landmark_index}, {"resolution", setting.resolution},
                      {"statistic", stat}});
      ++c;
    }
  }
  return doc.dump(2);
}

std::string validate_feature_manifest(const std::string& manifest_json, const FeatureMatrix& matrix) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(manifest_json);
  } catch (const nlohmann::json::exception& e) {
    return std::string("manifest is not JSON: ") + e.what();
  }
  const auto& cols = doc.value("columns", nlohmann::json::array());
  if (doc.value("n_columns", std::size_t{0}) != matrix.cols() || cols.size() != matrix.cols()) {
    return "column count mismatch";
  }
  if (doc.value("dim0_columns", std::size_t{0}) != matrix.dim0_width) return "dimension-0 width mismatch";
  if (doc.value("dim0_columns", std::size_t{0}) + doc.value("dim1_columns", std::size_t{0}) != matrix.cols()) {
    return "block widths do not sum to the column count";
  }
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (cols[c].value("index", std::size_t{0}) != c) return "column index out of order at " + std::to_string(c);
    if (cols[c].value("name", std::string{}) != matrix.columns[c]) return "column name mismatch at " + std::to_string(c);
    const bool dim1 = cols[c].value("block", std::string{}) == "dim1";
    if (dim1 != matrix.is_dim1(c)) return "block mismatch at " + std::to_string(c);
  }
  return {};
}

}  // namespace hcshape
