// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.
//
//   hcshape_acceptance --data-dir data/mnist-5k --work-dir /tmp/acc [--only 1,2,3]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "hcshape/bottleneck.hpp"
#include "hcshape/error.hpp"
#include "hcshape/eval.hpp"
#include "hcshape/hclust.hpp"
#include "hcshape/persistence.hpp"
#include "hcshape/pipeline.hpp"
#include "hcshape/random.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace hcshape;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void note(const std::string& msg) { std::fprintf(stderr, "  .. %s\n", msg.c_str()); }

Outcome c1_bottleneck_oracle() {
  const auto t0 = Clock::now();
  Rng rng(derive_seed(2024, 1));
  double worst = 0;
  for (int i = 0; i < 500; ++i) {
    const bool coarse = i % 2 == 0;
    const auto a = gen::diagram(rng, 8, coarse), b = gen::diagram(rng, 8, coarse);
    worst = std::max(worst, std::abs(bottleneck_distance(a, b) - bottleneck_oracle(a, b)));
  }
  const double s = seconds_since(t0);
  return {worst <= 1e-12 && s < 10, fmt("500 pairs, max |fast - oracle| = %.3g, %.2f s", worst, s)};
}

Outcome c2_barcode_identity() {
  const auto t0 = Clock::now();
  Rng rng(derive_seed(2024, 2));
  double worst = 0;
  bool sizes_ok = true;
  for (int i = 0; i < 100; ++i) {
    const auto cloud = gen::cloud(rng, 2 + uniform_index(rng, 39));
    const auto dm = pairwise_distances(cloud);
    auto heights = clustering_diagram(linkage(dm, Linkage::Single)).deaths;
    std::sort(heights.begin(), heights.end());
    const auto rips = rips_dim0(dm);
    sizes_ok &= rips.pairs.size() == heights.size();
    for (std::size_t j = 0; j < std::min(heights.size(), rips.pairs.size()); ++j) {
      worst = std::max(worst, std::abs(heights[j] - rips.pairs[j].death));
    }
  }
  const double s = seconds_since(t0);
  return {sizes_ok && worst <= 1e-9 && s < 30, fmt("100 clouds (2..40 points), max gap %.3g, %.2f s", worst, s)};
}

Outcome c3_dim1() {
  auto same = [](const std::vector<PersistencePair>& a, const std::vector<PersistencePair>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::abs(a[i].birth - b[i].birth) > 1e-9 || std::abs(a[i].death - b[i].death) > 1e-9) return false;
    }
    return true;
  };
  std::vector<std::string> failures;

  const auto sq_dm = pairwise_distances({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  const auto sq = rips_dim1(sq_dm).pairs;
  if (!(sq.size() == 1 && std::abs(sq[0].birth - 1) <= 1e-9 && std::abs(sq[0].death - std::sqrt(2.0)) <= 1e-9))
    failures.push_back("square");
  if (!same(sq, oracle::rips_dim1(sq_dm))) failures.push_back("square vs oracle");

  Rng rng(derive_seed(2024, 3));
  for (int i = 0; i < 50; ++i) {
    const auto dm = pairwise_distances(gen::cloud(rng, 3));
    if (!rips_dim1(dm).pairs.empty() || !oracle::rips_dim1(dm).empty()) failures.push_back("3-point cloud");
  }

  const auto circle_dm = pairwise_distances(gen::circle(8));
  const auto circ = rips_dim1(circle_dm).pairs;
  const auto positive = std::count_if(circ.begin(), circ.end(), [](const auto& p) { return p.death > p.birth; });
  if (positive != 1) failures.push_back("circle count");
  if (!same(circ, oracle::rips_dim1(circle_dm))) failures.push_back("circle vs oracle");

  std::string detail = fmt("square %zu pair(s), circle %zu pair(s)", sq.size(), circ.size());
  if (!sq.empty()) detail += fmt(", square pair (%.12g, %.12g)", sq[0].birth, sq[0].death);
  for (const auto& f : failures) detail += "; failed: " + f;
  return {failures.empty(), detail};
}

Outcome c4_metric_axioms() {
  Rng rng(derive_seed(2024, 4));
  std::size_t bad_symmetry = 0, bad_identity = 0, bad_triangle = 0, bad_separation = 0;
  double worst_slack = 0;
  for (int i = 0; i < 200; ++i) {
    const bool coarse = i % 2 == 0;
    const auto a = gen::diagram(rng, 40, coarse), b = gen::diagram(rng, 40, coarse),
               c = gen::diagram(rng, 40, coarse);
    const double ab = bottleneck_distance(a, b), ba = bottleneck_distance(b, a);
    const double bc = bottleneck_distance(b, c), ac = bottleneck_distance(a, c);
    bad_symmetry += ab != ba;
    auto perm = a;
    shuffle_range(perm.begin(), perm.end(), rng);
    bad_identity += bottleneck_distance(a, perm) != 0.0 || bottleneck_distance(a, a) != 0.0;
    auto sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    // Distinct multisets must be at positive distance (zero deaths aside,
    // which sit on the diagonal).
    auto nonzero = [](std::vector<double> v) {
      v.erase(std::remove(v.begin(), v.end(), 0.0), v.end());
      return v;
    };
    bad_separation += (nonzero(sa) != nonzero(sb)) != (ab > 0);
    for (const auto& [x, y, z] : {std::tuple{ab, bc, ac}, std::tuple{ab, ac, bc}, std::tuple{ac, bc, ab}}) {
      const double slack = z - (x + y);
      worst_slack = std::max(worst_slack, slack);
      bad_triangle += slack > 1e-12;
    }
  }
  return {bad_symmetry + bad_identity + bad_triangle + bad_separation == 0,
          fmt("200 triples: symmetry %zu, identity %zu, separation %zu, triangle %zu violations "
              "(worst excess %.3g)",
              bad_symmetry, bad_identity, bad_separation, bad_triangle, worst_slack)};
}

Outcome c6_golden_linkage() {
  const auto dm = pairwise_distances({{0, 0}, {1, 0}, {3, 0}});
  const std::map<Linkage, std::pair<double, double>> want = {{Linkage::Single, {1, 2}},
                                                             {Linkage::Average, {1, 2.5}},
                                                             {Linkage::Complete, {1, 3}},
                                                             {Linkage::Ward, {1, std::sqrt(25.0 / 3.0)}}};
  bool ok = true;
  std::string detail;
  for (const auto& [method, pair] : want) {
    const auto d = linkage(dm, method);
    const double h0 = d.merges[0].height, h1 = d.merges[1].height;
    ok &= d.merges.size() == 2 && std::abs(h0 - pair.first) <= 1e-12 && std::abs(h1 - pair.second) <= 1e-12;
    detail += fmt("%s(%.15g, %.15g) ", std::string(to_string(method)).c_str(), h0, h1);
  }
  return {ok, detail};
}

Outcome c8_statistics() {
  Rng rng(derive_seed(2024, 8));
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = 2 + uniform_index(rng, 29);
    std::vector<double> a(n), b(n);
    for (std::size_t j = 0; j < n; ++j) {
      a[j] = gen::uniform(rng, 0.3, 0.9);
      b[j] = std::clamp(a[j] + gen::uniform(rng, -0.06, 0.09), 0.0, 1.0);
    }
    const auto r = paired_t_test(a, b);
    worst = std::max(worst, std::abs(r.p_value - oracle::t_two_sided_p(r.t_statistic, double(r.df))));
  }
  const std::vector<double> same = {0.7, 0.71, 0.69};
  const auto degenerate = paired_t_test(same, same);
  const std::vector<int> classes = {0, 1};
  const auto f1 = f1_scores(std::vector<int>{0, 1, 0, 1}, std::vector<int>{0, 0, 1, 1}, classes);
  const bool f1_ok = f1.per_class == std::vector<double>{0.5, 0.5} && f1.overall == 0.5;
  return {worst <= 1e-6 && degenerate.p_value == 1.0 && degenerate.mean_diff == 0.0 && f1_ok,
          fmt("50 pairs, max |p - quadrature| = %.3g; identical -> p = %g; F1 example %s", worst,
              degenerate.p_value, f1_ok ? "exact" : "WRONG")};
}

// ---------------------------------------------------------------------------
// Desk-scale runs (criteria 5, 7, 9)

const Experiment kDeskExperiments[] = {Experiment::DigitsDim0, Experiment::HolesClassify,
                                       Experiment::DigitsDim1Supplement};

struct DeskRun {
  double seconds = 0;
  std::map<std::string, double> f1;  // "<experiment>/<feature set>" -> mean macro F1
  std::map<std::string, std::string> files;
  std::string manifest_problem = "not run";
  std::size_t columns = 0, dim0 = 0, dim1 = 0, rows = 0;
};

ExperimentConfig desk_config(const fs::path& data_dir, const fs::path& out_dir, unsigned workers) {
  ExperimentConfig cfg;  // defaults are the desk-scale settings
  cfg.data_dir = data_dir;
  cfg.out_dir = out_dir;
  cfg.images = 2000;
  cfg.features.n_instances = 10;
  cfg.trees = 200;
  cfg.folds = 5;
  cfg.seed = 1;
  cfg.workers = workers;
  return cfg;
}

DeskRun desk_run(const ExperimentConfig& cfg) {
  fs::remove_all(cfg.out_dir);
  DeskRun out;
  const auto t0 = Clock::now();
  Pipeline p(cfg, [t0](std::string_view msg) { note(fmt("[%7.1fs] ", seconds_since(t0)) + std::string(msg)); });
  const auto& m = p.features();
  for (auto e : kDeskExperiments) {
    for (const auto& f : p.run(e)) {
      if (f.filename() != "manifest.json") out.files[f.filename().string()] = read_text_file(f);
    }
    for (const auto& set : p.last_scores()) {
      double sum = 0;
      for (const auto& row : set.folds) sum += row.overall;
      out.f1[std::string(to_string(e)) + "/" + set.feature_set] = sum / double(set.folds.size());
    }
  }
  out.seconds = seconds_since(t0);
  out.files["features.csv"] = read_text_file(cfg.out_dir / "features.csv");
  out.manifest_problem = validate_feature_manifest(read_text_file(cfg.out_dir / "features_manifest.json"), m);
  out.columns = m.cols();
  out.dim0 = m.dim0_width;
  out.dim1 = m.cols() - m.dim0_width;
  out.rows = m.rows;
  return out;
}

Outcome c5_feature_arithmetic(const DeskRun& run) {
  // The header row of the written CSV must carry the same 1,395 names.
  const auto& csv = run.files.at("features.csv");
  const auto header = csv.substr(0, csv.find('\n'));
  const auto fields = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
  const bool ok = run.columns == 1395 && run.dim0 == 1260 && run.dim1 == 135 && fields == 1395 + 2 &&
                  run.manifest_problem.empty();
  return {ok, fmt("%zu columns (%zu dim-0 + %zu dim-1), CSV header %zu fields, manifest %s", run.columns, run.dim0,
                  run.dim1, fields, run.manifest_problem.empty() ? "valid" : run.manifest_problem.c_str())};
}

Outcome c7_desk_reproduction(const DeskRun& run) {
  const double dim0 = run.f1.at("digits-dim0/dim0");
  const double holes = run.f1.at("holes-classify/dim0");
  const double s_dim0 = run.f1.at("digits-dim1-supplement/dim0");
  const double s_dim1 = run.f1.at("digits-dim1-supplement/dim1");
  const double s_both = run.f1.at("digits-dim1-supplement/dim0+dim1");
  const bool a = dim0 >= 0.55, b = holes >= 0.60, c = s_dim0 > s_dim1 && s_both >= s_dim0,
             t = run.seconds < 3600;
  return {a && b && c && t,
          fmt("(a) digits dim0 F1 %.4f %s 0.55; (b) holes F1 %.4f %s 0.60; (c) dim0 %.4f vs dim1 %.4f vs "
              "dim0+dim1 %.4f %s; runtime %.0f s %s 3600 s (%zu images)",
              dim0, a ? ">=" : "<", holes, b ? ">=" : "<", s_dim0, s_dim1, s_both, c ? "ordered" : "NOT ordered",
              run.seconds, t ? "<" : ">=", run.rows)};
}

Outcome c9_determinism(const DeskRun& a, const DeskRun& b) {
  std::vector<std::string> differing;
  for (const auto& [name, bytes] : a.files) {
    const auto it = b.files.find(name);
    if (it == b.files.end() || it->second != bytes) differing.push_back(name);
  }
  if (a.files.size() != b.files.size()) differing.push_back("(file sets differ)");
  std::string detail = fmt("%zu files compared across two fresh runs (workers 1 vs 4)", a.files.size());
  for (const auto& d : differing) detail += "; differs: " + d;
  return {differing.empty() && !a.files.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  fs::path data_dir = "data/mnist-5k", work_dir = fs::temp_directory_path() / "hcshape_acceptance";
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--data-dir" && i + 1 < argc) data_dir = argv[++i];
    else if (arg == "--work-dir" && i + 1 < argc) work_dir = argv[++i];
    else if (arg == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
    } else {
      std::fprintf(stderr, "usage: %s [--data-dir DIR] [--work-dir DIR] [--only 1,2,...]\n", argv[0]);
      return 2;
    }
  }
  auto wanted = [&](int c) { return only.empty() || only.count(c); };

  static const char* kTitles[10] = {"",
                                    "bottleneck matches the exhaustive oracle",
                                    "single-linkage heights equal degree-0 Rips deaths",
                                    "degree-1 persistence examples and oracle",
                                    "bottleneck metric axioms",
                                    "feature matrix has 1,395 columns, manifest validates",
                                    "linkage golden values",
                                    "desk-scale experiment reproduction",
                                    "statistical kernels",
                                    "byte-identical reruns"};
  std::map<int, Outcome> results;
  auto attempt = [&](int c, const std::function<Outcome()>& fn) {
    if (!wanted(c)) return;
    note(fmt("criterion %d: %s", c, kTitles[c]));
    try {
      results[c] = fn();
    } catch (const std::exception& e) {
      results[c] = {false, std::string("exception: ") + e.what()};
    }
  };

  attempt(1, c1_bottleneck_oracle);
  attempt(2, c2_barcode_identity);
  attempt(3, c3_dim1);
  attempt(4, c4_metric_axioms);
  attempt(6, c6_golden_linkage);
  attempt(8, c8_statistics);

  if (wanted(5) || wanted(7) || wanted(9)) {
    std::optional<DeskRun> first, second;
    std::string error;
    try {
      note("desk run A (workers 1)");
      first = desk_run(desk_config(data_dir, work_dir / "run_a", 1));
      if (wanted(9)) {
        note("desk run B (workers 4)");
        second = desk_run(desk_config(data_dir, work_dir / "run_b", 4));
      }
    } catch (const std::exception& e) {
      error = std::string("exception: ") + e.what();
    }
    auto from_runs = [&](int c, const std::function<Outcome()>& fn) {
      if (!wanted(c)) return;
      if (!first || (c == 9 && !second)) {
        results[c] = {false, error.empty() ? "desk run did not complete" : error};
        return;
      }
      attempt(c, fn);
    };
    from_runs(5, [&] { return c5_feature_arithmetic(*first); });
    from_runs(7, [&] { return c7_desk_reproduction(*first); });
    from_runs(9, [&] { return c9_determinism(*first, *second); });
  }

  int failed = 0;
  for (const auto& [c, r] : results) {
    std::printf("[%s] criterion %d: %s -- %s\n", r.pass ? "PASS" : "FAIL", c, kTitles[c], r.detail.c_str());
    failed += !r.pass;
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
