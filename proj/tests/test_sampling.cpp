#include <doctest.h>

#include <algorithm>
#include <map>

#include "hcshape/sampling.hpp"
#include "support/errors.hpp"
#include "support/generators.hpp"

using namespace hcshape;

namespace {

// Multiset inclusion for point clouds.
bool is_submultiset(const PointCloud& sub, const PointCloud& of) {
  std::map<std::pair<double, double>, int> count;
  for (const auto& p : of) ++count[{p.x, p.y}];
  for (const auto& p : sub)
    if (--count[{p.x, p.y}] < 0) return false;
  return true;
}

}  // namespace

TEST_SUITE("sampling") {
  TEST_CASE("landmark grid") {
    const auto grid = landmark_grid();
    REQUIRE(grid.size() == 9);
    CHECK(grid[0] == Point{4.5, 4.5});
    CHECK(grid[1] == Point{13.5, 4.5});
    CHECK(grid[8] == Point{22.5, 22.5});
    for (const auto& p : grid) {
      CHECK(p.x > 0);
      CHECK(p.x < 27);
      CHECK(p.y > 0);
      CHECK(p.y < 27);
    }
  }

  TEST_CASE("settings: 9 landmarks x 5 resolutions, landmarks outer") {
    const auto s = sampling_settings(9, kDefaultResolutions);
    REQUIRE(s.size() == 45);
    CHECK(s[0] == SamplingSetting{0, 2});
    CHECK(s[4] == SamplingSetting{0, 6});
    CHECK(s[5] == SamplingSetting{1, 2});
    CHECK(s[44].tag() == "L8k6");
  }

  TEST_CASE("k = 1 keeps the whole cloud") {
    Rng rng(3);
    const auto cloud = gen::cloud(rng, 50);
    CHECK(sample_at_resolution(cloud, {4.5, 4.5}, 1, 10, 99) == cloud);
  }

  TEST_CASE("per-bin quota is the ceiling of s / k") {
    PointCloud cloud;
    for (int i = 0; i < 5; ++i) cloud.push_back({1.0, 0.1 * i});
    cloud.push_back({10.0, 0.0});
    cloud.push_back({0.0, 10.0});
    // Two bins over [0, 10]: the first holds 5 points, the second 2.
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto s = sample_at_resolution(cloud, {0, 0}, 2, 2, seed);
      CHECK(s.size() == 4);
      const auto far = std::count_if(s.begin(), s.end(), [](const Point& p) { return p.x == 10 || p.y == 10; });
      CHECK(far == 1);
      CHECK(is_submultiset(s, cloud));
    }
  }

  TEST_CASE("equidistant points fall in one bin") {
    const auto ring = gen::circle(12, 3.0);
    const auto s = sample_at_resolution(ring, {0, 0}, 5, 10, 1);
    CHECK(s.size() == 3);
  }

  TEST_CASE("deterministic in the seed, and seeds matter") {
    Rng rng(5);
    const auto cloud = gen::cloud(rng, 120);
    CHECK(sample_at_resolution(cloud, {13.5, 13.5}, 3, 10, 42) == sample_at_resolution(cloud, {13.5, 13.5}, 3, 10, 42));
    bool any_differs = false;
    for (std::uint64_t seed = 0; seed < 10 && !any_differs; ++seed) {
      any_differs = sample_at_resolution(cloud, {13.5, 13.5}, 3, 10, seed) !=
                    sample_at_resolution(cloud, {13.5, 13.5}, 3, 10, seed + 100);
    }
    CHECK(any_differs);
  }

  TEST_CASE("sample size is non-increasing in k and always a non-empty submultiset") {
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
      auto cloud = gen::cloud(rng, 1 + uniform_index(rng, 80));
      if (trial % 3 == 0) cloud.push_back(cloud.front());  // duplicates are legal
      std::size_t previous = SIZE_MAX;
      for (int k = 1; k <= 6; ++k) {
        const auto s = sample_at_resolution(cloud, {4.5, 22.5}, k, 10, 1234);
        CHECK(!s.empty());
        CHECK(s.size() <= previous);
        CHECK(is_submultiset(s, cloud));
        previous = s.size();
      }
    }
  }

  TEST_CASE("empty cloud") {
    CHECK(code_of([] { sample_at_resolution({}, {0, 0}, 2, 10, 0); }) == Errc::EmptyCloud);
    CHECK(code_of([] { generate_sample_set({}, landmark_grid(), kDefaultResolutions, 2, 0); }) == Errc::EmptyCloud);
  }

  TEST_CASE("sample set shape and seeding scheme") {
    Rng rng(13);
    const auto cloud = gen::cloud(rng, 60);
    const auto set = generate_sample_set(cloud, landmark_grid(), kDefaultResolutions, 30, 77);
    CHECK(set.total_clouds() == 1350);
    REQUIRE(set.clouds.size() == 45);
    for (const auto& row : set.clouds) CHECK(row.size() == 30);

    // Instance (s, i) is the resolution sampler run with the documented seed.
    for (std::size_t s : {0u, 17u, 44u}) {
      for (int i : {0, 29}) {
        const auto& st = set.settings[s];
        CHECK(set.clouds[s][i] == sample_at_resolution(cloud, landmark_grid()[st.landmark_index], st.resolution,
                                                       kDefaultSamplingBins, instance_seed(77, s, 30, i)));
      }
    }
    CHECK(instance_seed(77, 2, 30, 5) == derive_seed(77, 65));

    const auto one = generate_sample_set(cloud, landmark_grid(), kDefaultResolutions, 1, 77);
    CHECK(one.total_clouds() == 45);

    const auto again = generate_sample_set(cloud, landmark_grid(), kDefaultResolutions, 30, 77);
    CHECK(again.clouds == set.clouds);
  }

  TEST_CASE("json round trip") {
    Rng rng(21);
    const auto cloud = gen::cloud(rng, 40);
    const auto set = generate_sample_set(cloud, landmark_grid(), {2, 4}, 3, 5);
    const auto back = sample_set_from_json(sample_set_to_json(set));
    CHECK(back.settings == set.settings);
    CHECK(back.n_instances == set.n_instances);
    CHECK(back.master_seed == set.master_seed);
    CHECK(back.clouds == set.clouds);
  }
}
