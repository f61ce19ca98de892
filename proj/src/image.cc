#include "radcal/image.h"

#include <algorithm>
#include <charconv>

#include "radcal/error.h"

namespace radcal {

std::string_view ChannelName(Channel channel) {
  switch (channel) {
    case Channel::kR: return "R";
    case Channel::kG1: return "G1";
    case Channel::kG2: return "G2";
    case Channel::kB: return "B";
  }
  return "?";
}

std::string_view PatternName(BayerPattern pattern) {
  switch (pattern) {
    case BayerPattern::kRGGB: return "RGGB";
    case BayerPattern::kGRBG: return "GRBG";
    case BayerPattern::kGBRG: return "GBRG";
    case BayerPattern::kBGGR: return "BGGR";
  }
  return "?";
}

BayerPattern ParsePattern(std::string_view name) {
  for (std::uint8_t code = 0; code < 4; ++code) {
    const auto pattern = static_cast<BayerPattern>(code);
    if (PatternName(pattern) == name) return pattern;
  }
  Fail(ErrorCategory::kValidation, "unknown Bayer pattern '" + std::string(name) + "'");
}

BayerPattern PatternFromCode(std::uint8_t code) {
  if (code > 3) Fail(ErrorCategory::kFormat, "invalid Bayer code " + std::to_string(code));
  return static_cast<BayerPattern>(code);
}

BayerPattern ShiftPattern(BayerPattern pattern, std::size_t dx, std::size_t dy) {
  const Channel origin = ChannelAt(pattern, dx, dy);
  const Channel right = ChannelAt(pattern, dx + 1, dy);
  for (std::uint8_t code = 0; code < 4; ++code) {
    const auto candidate = static_cast<BayerPattern>(code);
    if (ChannelAt(candidate, 0, 0) == origin && ChannelAt(candidate, 1, 0) == right) {
      return candidate;
    }
  }
  return pattern;  // unreachable
}

CropRect CropRect::Parse(std::string_view text) {
  std::size_t values[4] = {};
  std::size_t field = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  while (field < 4) {
    auto [next, ec] = std::from_chars(p, end, values[field]);
    if (ec != std::errc()) break;
    ++field;
    p = next;
    if (field < 4) {
      if (p == end || *p != ',') break;
      ++p;
    }
  }
  if (field != 4 || p != end) {
    Fail(ErrorCategory::kUsage, "crop must be x0,y0,w,h, got '" + std::string(text) + "'");
  }
  return CropRect{values[0], values[1], values[2], values[3]};
}

RawImage::RawImage(std::size_t width, std::size_t height, int bit_depth, BayerPattern pattern)
    : RawImage(width, height, bit_depth, pattern,
               std::vector<std::uint16_t>(width * height, 0)) {}

RawImage::RawImage(std::size_t width, std::size_t height, int bit_depth, BayerPattern pattern,
                   std::vector<std::uint16_t> samples)
    : width_(width),
      height_(height),
      bit_depth_(bit_depth),
      pattern_(pattern),
      samples_(std::move(samples)) {
  if (bit_depth < 1 || bit_depth > 16) {
    Fail(ErrorCategory::kValidation, "bit depth " + std::to_string(bit_depth) +
                                         " outside 1..16");
  }
  if (samples_.size() != width * height) {
    Fail(ErrorCategory::kValidation, "sample count does not match width x height");
  }
}

void RawImage::Validate() const {
  const std::uint32_t limit = max_value();
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (samples_[i] > limit) {
      Fail(ErrorCategory::kRange, "sample out of range: " + std::to_string(samples_[i]) +
                                      " at index " + std::to_string(i) + " exceeds " +
                                      std::to_string(bit_depth_) + "-bit maximum");
    }
  }
}

RawImage Crop(const RawImage& image, const CropRect& rect) {
  if (rect.w == 0 || rect.h == 0 || rect.x0 + rect.w > image.width() ||
      rect.y0 + rect.h > image.height()) {
    Fail(ErrorCategory::kRange, "crop rectangle out of bounds");
  }
  std::vector<std::uint16_t> out;
  out.reserve(rect.w * rect.h);
  for (std::size_t y = rect.y0; y < rect.y0 + rect.h; ++y) {
    const auto row = image.row(y).subspan(rect.x0, rect.w);
    out.insert(out.end(), row.begin(), row.end());
  }
  return RawImage(rect.w, rect.h, image.bit_depth(),
                  ShiftPattern(image.pattern(), rect.x0, rect.y0), std::move(out));
}

std::size_t OccupiedLevels(std::span<const std::uint16_t> samples) {
  std::vector<bool> seen(65536, false);
  std::size_t count = 0;
  for (const auto v : samples) {
    if (!seen[v]) {
      seen[v] = true;
      ++count;
    }
  }
  return count;
}

}  // namespace radcal
