#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace radcal {

// Colour filter site of a mosaic pixel. G1 is the green that shares its row
// with red, G2 the green that shares its row with blue; with this labelling
// every pixel keeps its channel when the frame is cropped at any offset.
enum class Channel : std::uint8_t { kR = 0, kG1 = 1, kG2 = 2, kB = 3 };

inline constexpr int kChannelCount = 4;
inline constexpr Channel kAllChannels[kChannelCount] = {Channel::kR, Channel::kG1,
                                                        Channel::kG2, Channel::kB};

std::string_view ChannelName(Channel channel);

// Bayer phase of the top-left 2x2 cell, in raster order. The numeric values
// are the codes stored in NRAW and NCAL headers.
enum class BayerPattern : std::uint8_t { kRGGB = 0, kGRBG = 1, kGBRG = 2, kBGGR = 3 };

std::string_view PatternName(BayerPattern pattern);
BayerPattern ParsePattern(std::string_view name);
BayerPattern PatternFromCode(std::uint8_t code);

// Channel at (x, y); depends only on x mod 2, y mod 2 and the pattern.
constexpr Channel ChannelAt(BayerPattern pattern, std::size_t x, std::size_t y) {
  // Position of red inside the 2x2 cell.
  std::size_t rx = 0, ry = 0;
  switch (pattern) {
    case BayerPattern::kRGGB: rx = 0; ry = 0; break;
    case BayerPattern::kGRBG: rx = 1; ry = 0; break;
    case BayerPattern::kGBRG: rx = 0; ry = 1; break;
    case BayerPattern::kBGGR: rx = 1; ry = 1; break;
  }
  const bool red_col = (x & 1) == rx;
  const bool red_row = (y & 1) == ry;
  if (red_row) return red_col ? Channel::kR : Channel::kG1;
  return red_col ? Channel::kG2 : Channel::kB;
}

// Pattern seen by a frame whose origin sits at (dx, dy) of a frame with
// `pattern`.
BayerPattern ShiftPattern(BayerPattern pattern, std::size_t dx, std::size_t dy);

struct CropRect {
  std::size_t x0 = 0;
  std::size_t y0 = 0;
  std::size_t w = 0;
  std::size_t h = 0;

  // Parses "x0,y0,w,h".
  static CropRect Parse(std::string_view text);
};

// One sample per pixel, row-major, unsigned, below 2^bit_depth.
class RawImage {
 public:
  RawImage() = default;
  RawImage(std::size_t width, std::size_t height, int bit_depth, BayerPattern pattern);
  RawImage(std::size_t width, std::size_t height, int bit_depth, BayerPattern pattern,
           std::vector<std::uint16_t> samples);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return samples_.size(); }
  int bit_depth() const { return bit_depth_; }
  std::uint32_t max_value() const { return (1u << bit_depth_) - 1; }
  BayerPattern pattern() const { return pattern_; }

  Channel channel_at(std::size_t x, std::size_t y) const {
    return ChannelAt(pattern_, x, y);
  }

  std::uint16_t at(std::size_t x, std::size_t y) const { return samples_[y * width_ + x]; }
  std::uint16_t& at(std::size_t x, std::size_t y) { return samples_[y * width_ + x]; }

  std::span<const std::uint16_t> samples() const { return samples_; }
  std::span<std::uint16_t> samples() { return samples_; }
  std::span<const std::uint16_t> row(std::size_t y) const {
    return std::span<const std::uint16_t>(samples_).subspan(y * width_, width_);
  }

  // Throws kRange if any sample exceeds max_value().
  void Validate() const;

  bool operator==(const RawImage&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  int bit_depth_ = 12;
  BayerPattern pattern_ = BayerPattern::kRGGB;
  std::vector<std::uint16_t> samples_;
};

RawImage Crop(const RawImage& image, const CropRect& rect);

// Number of distinct sample values present.
std::size_t OccupiedLevels(std::span<const std::uint16_t> samples);

}  // namespace radcal
