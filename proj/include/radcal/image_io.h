#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "radcal/image.h"

namespace radcal::io {

// NRAW container, all integers little-endian:
//   "NRAW" | u8 version | u32 width | u32 height | u8 bit_depth | u8 bayer
//   | width*height u16 samples
inline constexpr std::uint8_t kNrawVersion = 1;
inline constexpr std::size_t kNrawHeaderSize = 4 + 1 + 4 + 4 + 1 + 1;

RawImage ReadRaw(const std::filesystem::path& path);
RawImage DecodeRaw(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> EncodeRaw(const RawImage& image);
void WriteRaw(const RawImage& image, const std::filesystem::path& path);

// Interleaved unsigned samples as stored in a PNG: 1 (gray) or 3 (RGB)
// channels, 8- or 16-bit container.
struct PngImage {
  std::size_t width = 0;
  std::size_t height = 0;
  int channels = 1;
  int container_bits = 16;
  std::vector<std::uint16_t> samples;

  bool operator==(const PngImage&) const = default;
};

// Writes a gray (channels=1) or RGB (channels=3) PNG. container_bits must be
// 8 or 16 and every sample must fit.
void WritePng(const PngImage& image, const std::filesystem::path& path,
              int compression_level = 6);
PngImage ReadPng(const std::filesystem::path& path);

// 16-bit single-channel convenience wrappers.
void WritePng16(std::size_t width, std::size_t height, std::span<const std::uint16_t> samples,
                const std::filesystem::path& path, int compression_level = 6);
PngImage ReadPng16(const std::filesystem::path& path);

// Writes through a temporary sibling file and renames it over `path`, so a
// reader never observes a partially written output.
void WriteAtomically(const std::filesystem::path& path,
                     const std::function<void(const std::filesystem::path& tmp)>& writer);

void WriteFileBytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path);

}  // namespace radcal::io
