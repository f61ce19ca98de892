#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "radcal/image.h"
#include "radcal/parallel.h"

namespace radcal::lil {

enum class Mode { kPerChannel, kJoint };
enum class Scope { kSingle, kSeries };

Mode ParseMode(std::string_view text);
Scope ParseScope(std::string_view text);

// Integer image with 1 or 3 interleaved channels, or a Bayer mosaic (one
// sample per pixel, channel given by the pattern).
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  int channels = 1;
  int bit_depth = 16;
  std::optional<BayerPattern> bayer;
  std::vector<std::uint16_t> samples;

  // Normalisation groups available in per-channel mode.
  int channel_groups() const { return bayer ? kChannelCount : channels; }
  bool operator==(const Image&) const = default;
};

Image FromRaw(const RawImage& raw);
Image Crop(const Image& image, const CropRect& rect);

// Four half-resolution planes (R, G1, G2, B) of a mosaic.
std::array<Image, kChannelCount> SplitBayerPlanes(const Image& mosaic);

// Occupied levels per normalisation group, sorted ascending.
struct LevelSet {
  Mode mode = Mode::kPerChannel;
  int bit_depth = 16;
  std::vector<std::vector<std::uint16_t>> groups;
};

// Union of occupied levels over all images. In joint mode a level counts
// when any channel uses it.
LevelSet CollectLevels(std::span<const Image> images, Mode mode,
                       Executor& executor = Serial());

// Occupied level -> 8-bit code per group. The k-th occupied level of a
// group with L levels gets round(255 k / (L - 1)), or 0 when L = 1.
class Lut {
 public:
  explicit Lut(const LevelSet& levels);

  Mode mode() const { return mode_; }
  std::size_t group_count() const { return present_.size(); }
  bool contains(std::size_t group, std::uint16_t level) const {
    return level < present_[group].size() && present_[group][level] != 0;
  }
  std::uint8_t code(std::size_t group, std::uint16_t level) const {
    return codes_[group][level];
  }

 private:
  Mode mode_;
  std::vector<std::vector<std::uint8_t>> codes_;
  std::vector<std::vector<std::uint8_t>> present_;
};

Lut BuildLut(const LevelSet& levels);

// Throws kValidation when a sample's level is missing from its group.
Image ApplyLut(const Lut& lut, const Image& image, Executor& executor = Serial());

struct Options {
  Mode mode = Mode::kPerChannel;
  Scope scope = Scope::kSingle;
  std::optional<CropRect> crop;
};

std::vector<Image> Convert(std::span<const Image> images, const Options& options,
                           Executor& executor = Serial());

// Occupied-level statistics of one image, per group.
struct GroupSummary {
  std::string name;
  std::size_t occupied = 0;
  std::uint16_t min_level = 0;
  std::uint16_t max_level = 0;
};

std::vector<GroupSummary> Summarize(const Image& image, Mode mode);

}  // namespace radcal::lil
