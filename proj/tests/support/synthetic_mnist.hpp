#pragma once
// A tiny labelled image set in IDX form, drawn procedurally so tests do not
// depend on the real data: rings for "holes", strokes otherwise.

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hcshape/ingest.hpp"
#include "hcshape/random.hpp"

namespace synth {

inline void ring(std::vector<std::uint8_t>& img, double cx, double cy, double r) {
  for (int a = 0; a < 64; ++a) {
    const double t = 2 * M_PI * a / 64;
    const int col = static_cast<int>(std::lround(cx + r * std::cos(t)));
    const int row = static_cast<int>(std::lround(cy + r * std::sin(t)));
    if (row >= 0 && row < 28 && col >= 0 && col < 28) img[row * 28 + col] = 255;
  }
}

inline void stroke(std::vector<std::uint8_t>& img, double r0, double c0, double r1, double c1) {
  for (int s = 0; s <= 40; ++s) {
    const double t = s / 40.0;
    const int row = static_cast<int>(std::lround(r0 + t * (r1 - r0)));
    const int col = static_cast<int>(std::lround(c0 + t * (c1 - c0)));
    img[row * 28 + col] = 255;
  }
}

inline std::vector<std::uint8_t> digit_image(int digit, hcshape::Rng& rng) {
  std::vector<std::uint8_t> img(784, 0);
  const double j = double(hcshape::uniform_index(rng, 3)) - 1;  // jitter
  switch (digit) {
    case 0: ring(img, 14 + j, 14, 8); break;
    case 8: ring(img, 14, 9 + j, 4.5); ring(img, 14, 19 + j, 4.5); break;
    case 6: ring(img, 13, 18, 5 + j / 2); stroke(img, 4, 15, 17, 9); break;
    case 9: ring(img, 13, 9, 5 + j / 2); stroke(img, 10, 17, 24, 16); break;
    case 4: ring(img, 12, 12, 4); stroke(img, 4, 16, 24, 16 + j); break;
    default:
      stroke(img, 4, 8 + digit + j, 24, 20 - digit);
      if (digit % 2) stroke(img, 14, 6, 14, 21);
      break;
  }
  return img;
}

// Writes `per_class` images of every digit, interleaved, into `dir`.
inline void write(const std::filesystem::path& dir, int per_class, std::uint64_t seed = 1) {
  hcshape::Rng rng(seed);
  hcshape::ImageSet images{28, 28, {}};
  hcshape::LabelSet labels;
  for (int i = 0; i < per_class; ++i) {
    for (int d = 0; d < 10; ++d) {
      const auto img = digit_image(d, rng);
      images.pixels.insert(images.pixels.end(), img.begin(), img.end());
      labels.labels.push_back(static_cast<std::uint8_t>(d));
    }
  }
  std::filesystem::create_directories(dir);
  auto dump = [](const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  };
  dump(dir / "train-images-idx3-ubyte", hcshape::serialize_idx(images));
  dump(dir / "train-labels-idx1-ubyte", hcshape::serialize_idx(labels));
}

}  // namespace synth
