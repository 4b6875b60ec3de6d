#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

namespace hcshape {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Finite multiset of planar points; duplicates are allowed.
using PointCloud = std::vector<Point>;

/// A stack of equally sized grayscale images, stored row-major.
struct ImageSet {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;

  std::size_t size() const noexcept { return rows * cols == 0 ? 0 : pixels.size() / (rows * cols); }
  std::span<const std::uint8_t> image(std::size_t i) const {
    return std::span<const std::uint8_t>(pixels).subspan(i * rows * cols, rows * cols);
  }
};

struct LabelSet {
  std::vector<std::uint8_t> labels;
  std::size_t size() const noexcept { return labels.size(); }
};

enum class IdxKind { Images, Labels };

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
inline constexpr std::uint8_t kDefaultThreshold = 102;

// IDX parsing. Throws Error(WrongMagic) when the magic does not match the
// requested kind and Error(Truncated) when the payload is shorter than the
// header declares. Labels outside 0..9 raise Error(BadDigit).
ImageSet parse_idx_images(std::span<const std::uint8_t> bytes);
LabelSet parse_idx_labels(std::span<const std::uint8_t> bytes);
std::variant<ImageSet, LabelSet> parse_idx(std::span<const std::uint8_t> bytes, IdxKind kind);

std::vector<std::uint8_t> serialize_idx(const ImageSet& images);
std::vector<std::uint8_t> serialize_idx(const LabelSet& labels);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

/// One point per pixel with intensity strictly above `threshold`, placed at
/// (column, rows - 1 - row) and emitted in row-major scan order.
PointCloud image_to_point_cloud(std::span<const std::uint8_t> image, std::size_t rows,
                                std::size_t cols, std::uint8_t threshold = kDefaultThreshold);

}  // namespace hcshape
