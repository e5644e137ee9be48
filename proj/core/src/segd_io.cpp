#include "aucseg/segd_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

namespace aucseg {

void ByteWriter::u16(std::uint16_t v) {
  out_.push_back(std::byte(v & 0xFF));
  out_.push_back(std::byte(v >> 8));
}

void ByteWriter::u32(std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out_.push_back(std::byte((v >> shift) & 0xFF));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteReader::need(std::size_t n, const char* what) const {
  if (remaining() < n) {
    throw ParseError(pos_, std::string("truncated input while reading ") + what);
  }
}

void ByteReader::expect_magic(const char (&magic)[5]) {
  need(4, "magic");
  if (std::memcmp(in_.data() + pos_, magic, 4) != 0) {
    throw ParseError(pos_, std::string("bad magic, expected \"") + magic + "\"");
  }
  pos_ += 4;
}

std::uint16_t ByteReader::u16() {
  need(2, "u16");
  const auto v = static_cast<std::uint16_t>(std::to_integer<unsigned>(in_[pos_]) |
                                            (std::to_integer<unsigned>(in_[pos_ + 1]) << 8));
  pos_ += 2;
  return v;
}

std::uint32_t ByteReader::u32() {
  need(4, "u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::to_integer<std::uint32_t>(in_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

void ByteReader::expect_end() const {
  if (remaining() != 0) throw ParseError(pos_, "trailing bytes after payload");
}

std::vector<std::byte> encode_segd(const LabeledDataset& dataset) {
  dataset.validate();
  ByteWriter w;
  w.bytes(std::as_bytes(std::span("SEGD", 4)));
  w.u32(kSegdVersion);
  w.u32(static_cast<std::uint32_t>(dataset.samples.size()));
  w.u32(static_cast<std::uint32_t>(dataset.num_classes));
  w.u32(static_cast<std::uint32_t>(dataset.height));
  w.u32(static_cast<std::uint32_t>(dataset.width));
  w.u32(static_cast<std::uint32_t>(dataset.channels));
  for (const Sample& s : dataset.samples) {
    for (float v : s.features.values()) w.f32(v);
    for (std::uint16_t v : s.labels.values()) w.u16(v);
  }
  return std::move(w).take();
}

LabeledDataset decode_segd(std::span<const std::byte> bytes) {
  ByteReader r(bytes);
  r.expect_magic("SEGD");
  const std::size_t version_at = r.offset();
  if (const std::uint32_t version = r.u32(); version != kSegdVersion) {
    throw ParseError(version_at, "unsupported SEGD version " + std::to_string(version));
  }
  const std::uint32_t images = r.u32();
  LabeledDataset ds;
  const std::size_t geometry_at = r.offset();
  const std::uint32_t k = r.u32();
  const std::uint32_t h = r.u32();
  const std::uint32_t w = r.u32();
  const std::uint32_t ch = r.u32();
  if (k == 0 || k > kIgnoreLabel || h == 0 || w == 0 || ch == 0 || h > 1u << 15 ||
      w > 1u << 15 || ch > 1u << 12) {
    throw ParseError(geometry_at, "invalid dataset geometry");
  }
  ds.num_classes = int(k);
  ds.height = int(h);
  ds.width = int(w);
  ds.channels = int(ch);

  const std::uint64_t per_image = std::uint64_t(h) * w * (4ull * ch + 2ull);
  if (per_image * images > r.remaining()) {
    throw ParseError(r.offset(), "truncated input: header declares " + std::to_string(images) +
                                     " images");
  }
  ds.samples.reserve(images);
  for (std::uint32_t i = 0; i < images; ++i) {
    Sample s{FeatureGrid(ds.height, ds.width, ds.channels), LabelGrid(ds.height, ds.width)};
    for (float& v : s.features.values()) v = r.f32();
    for (std::uint16_t& v : s.labels.values()) {
      const std::size_t at = r.offset();
      v = r.u16();
      if (v != kIgnoreLabel && v >= k) {
        throw ParseError(at, "label " + std::to_string(v) + " outside class range");
      }
    }
    ds.samples.push_back(std::move(s));
  }
  r.expect_end();
  return ds;
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const std::streamsize size = in.tellg();
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(static_cast<std::size_t>(size));
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), size)) {
    throw IoError("cannot read " + path.string());
  }
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

void write_segd(const std::filesystem::path& path, const LabeledDataset& dataset) {
  write_file(path, encode_segd(dataset));
}

LabeledDataset read_segd(const std::filesystem::path& path) { return decode_segd(read_file(path)); }

}  // namespace aucseg
