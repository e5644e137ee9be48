#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "aucseg/types.hpp"

namespace aucseg {

/// SEGD container, little-endian throughout:
///   "SEGD" | u32 version = 1 | u32 image_count | u32 K | u32 height
///   | u32 width | u32 channels
///   then per image: f32 features row-major (row, col, channel),
///   followed by u16 labels row-major, 0xFFFF = ignore.
inline constexpr std::uint32_t kSegdVersion = 1;

std::vector<std::byte> encode_segd(const LabeledDataset& dataset);
/// Throws ParseError naming the byte offset of the first problem.
LabeledDataset decode_segd(std::span<const std::byte> bytes);

void write_segd(const std::filesystem::path& path, const LabeledDataset& dataset);
LabeledDataset read_segd(const std::filesystem::path& path);

std::vector<std::byte> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes);

/// Little-endian primitive encoding shared by the binary formats.
class ByteWriter {
 public:
  void bytes(std::span<const std::byte> raw) { out_.insert(out_.end(), raw.begin(), raw.end()); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void f32(float v);
  std::vector<std::byte> take() && { return std::move(out_); }

 private:
  std::vector<std::byte> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::byte> in) : in_(in) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return in_.size() - pos_; }
  void expect_magic(const char (&magic)[5]);
  std::uint16_t u16();
  std::uint32_t u32();
  float f32();
  void expect_end() const;

 private:
  void need(std::size_t n, const char* what) const;

  std::span<const std::byte> in_;
  std::size_t pos_ = 0;
};

}  // namespace aucseg
