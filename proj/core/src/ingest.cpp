#include "hcshape/ingest.hpp"

#include <fstream>
#include <iterator>
#include <string>

#include "hcshape/error.hpp"

namespace hcshape {
namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (bytes.size() < offset + 4) {
    throw Error(Errc::Truncated, "IDX header truncated at byte " + std::to_string(offset));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void expect_magic(std::uint32_t magic, std::uint32_t want, const char* kind) {
  if (magic != want) {
    throw Error(Errc::WrongMagic, std::string("IDX magic ") + std::to_string(magic) +
                                      " does not denote " + kind);
  }
}

}  // namespace

ImageSet parse_idx_images(std::span<const std::uint8_t> bytes) {
  expect_magic(read_be32(bytes, 0), kIdxImagesMagic, "an image file");
  const std::size_t count = read_be32(bytes, 4);
  const std::size_t rows = read_be32(bytes, 8);
  const std::size_t cols = read_be32(bytes, 12);
  const std::size_t payload = count * rows * cols;
  if (bytes.size() - 16 < payload) {
    throw Error(Errc::Truncated, "IDX image payload holds " + std::to_string(bytes.size() - 16) +
                                     " bytes, header declares " + std::to_string(payload));
  }
  ImageSet out;
  out.rows = rows;
  out.cols = cols;
  out.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(payload));
  return out;
}

LabelSet parse_idx_labels(std::span<const std::uint8_t> bytes) {
  expect_magic(read_be32(bytes, 0), kIdxLabelsMagic, "a label file");
  const std::size_t count = read_be32(bytes, 4);
  if (bytes.size() - 8 < count) {
    throw Error(Errc::Truncated, "IDX label payload holds " + std::to_string(bytes.size() - 8) +
                                     " bytes, header declares " + std::to_string(count));
  }
  LabelSet out;
  out.labels.assign(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(count));
  for (auto label : out.labels) {
    if (label > 9) throw Error(Errc::BadDigit, "label " + std::to_string(label) + " is not a digit");
  }
  return out;
}

std::variant<ImageSet, LabelSet> parse_idx(std::span<const std::uint8_t> bytes, IdxKind kind) {
  if (kind == IdxKind::Images) return parse_idx_images(bytes);
  return parse_idx_labels(bytes);
}

std::vector<std::uint8_t> serialize_idx(const ImageSet& images) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + images.pixels.size());
  write_be32(out, kIdxImagesMagic);
  write_be32(out, static_cast<std::uint32_t>(images.size()));
  write_be32(out, static_cast<std::uint32_t>(images.rows));
  write_be32(out, static_cast<std::uint32_t>(images.cols));
  out.insert(out.end(), images.pixels.begin(), images.pixels.end());
  return out;
}

std::vector<std::uint8_t> serialize_idx(const LabelSet& labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.labels.size());
  write_be32(out, kIdxLabelsMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.labels.size()));
  out.insert(out.end(), labels.labels.begin(), labels.labels.end());
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MissingData, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

PointCloud image_to_point_cloud(std::span<const std::uint8_t> image, std::size_t rows,
                                std::size_t cols, std::uint8_t threshold) {
  PointCloud cloud;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (image[r * cols + c] > threshold) {
        cloud.push_back({static_cast<double>(c), static_cast<double>(rows - 1 - r)});
      }
    }
  }
  return cloud;
}

}  // namespace hcshape
