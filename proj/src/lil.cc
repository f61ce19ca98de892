#include "radcal/lil.h"

#include <algorithm>
#include <mutex>

#include "radcal/error.h"

namespace radcal::lil {
namespace {

constexpr std::size_t kRowGrain = 32;

std::size_t GroupCount(const Image& image, Mode mode) {
  return mode == Mode::kJoint ? 1 : static_cast<std::size_t>(image.channel_groups());
}

// Calls fn(group, sample) for every sample of rows [y0, y1).
template <typename Fn>
void ForEachSample(const Image& image, Mode mode, std::size_t y0, std::size_t y1, Fn&& fn) {
  const std::size_t row_samples = image.width * static_cast<std::size_t>(image.channels);
  for (std::size_t y = y0; y < y1; ++y) {
    const std::uint16_t* row = image.samples.data() + y * row_samples;
    if (mode == Mode::kJoint) {
      for (std::size_t i = 0; i < row_samples; ++i) fn(std::size_t{0}, i + y * row_samples, row[i]);
    } else if (image.bayer) {
      const std::size_t g[2] = {static_cast<std::size_t>(ChannelAt(*image.bayer, 0, y)),
                                static_cast<std::size_t>(ChannelAt(*image.bayer, 1, y))};
      for (std::size_t x = 0; x < image.width; ++x) fn(g[x & 1], x + y * row_samples, row[x]);
    } else {
      const auto c = static_cast<std::size_t>(image.channels);
      for (std::size_t i = 0; i < row_samples; ++i) fn(i % c, i + y * row_samples, row[i]);
    }
  }
}

void CheckImage(const Image& image) {
  if (image.channels != 1 && image.channels != 3) {
    Fail(ErrorCategory::kValidation, "images must have 1 or 3 channels");
  }
  if (image.bayer && image.channels != 1) {
    Fail(ErrorCategory::kValidation, "a Bayer mosaic has exactly one sample per pixel");
  }
  if (image.bit_depth < 1 || image.bit_depth > 16) {
    Fail(ErrorCategory::kValidation, "bit depth outside 1..16");
  }
  if (image.samples.size() != image.width * image.height * image.channels) {
    Fail(ErrorCategory::kValidation, "sample count does not match image dimensions");
  }
}

void CheckHomogeneous(std::span<const Image> images) {
  if (images.empty()) Fail(ErrorCategory::kValidation, "empty image set");
  for (const auto& image : images) {
    CheckImage(image);
    if (image.channels != images[0].channels || image.bayer != images[0].bayer ||
        image.bit_depth != images[0].bit_depth) {
      Fail(ErrorCategory::kValidation,
           "series is not homogeneous in bit depth, channels or Bayer pattern");
    }
  }
}

}  // namespace

Mode ParseMode(std::string_view text) {
  if (text == "per-channel" || text == "per_channel") return Mode::kPerChannel;
  if (text == "joint") return Mode::kJoint;
  Fail(ErrorCategory::kUsage, "mode must be per-channel or joint");
}

Scope ParseScope(std::string_view text) {
  if (text == "single") return Scope::kSingle;
  if (text == "series") return Scope::kSeries;
  Fail(ErrorCategory::kUsage, "scope must be single or series");
}

Image FromRaw(const RawImage& raw) {
  Image image;
  image.width = raw.width();
  image.height = raw.height();
  image.channels = 1;
  image.bit_depth = raw.bit_depth();
  image.bayer = raw.pattern();
  image.samples.assign(raw.samples().begin(), raw.samples().end());
  return image;
}

Image Crop(const Image& image, const CropRect& rect) {
  CheckImage(image);
  if (rect.w == 0 || rect.h == 0 || rect.x0 + rect.w > image.width ||
      rect.y0 + rect.h > image.height) {
    Fail(ErrorCategory::kRange, "crop rectangle out of bounds");
  }
  Image out = image;
  out.width = rect.w;
  out.height = rect.h;
  if (image.bayer) out.bayer = ShiftPattern(*image.bayer, rect.x0, rect.y0);
  const auto c = static_cast<std::size_t>(image.channels);
  out.samples.clear();
  out.samples.reserve(rect.w * rect.h * c);
  for (std::size_t y = rect.y0; y < rect.y0 + rect.h; ++y) {
    const auto* row = image.samples.data() + (y * image.width + rect.x0) * c;
    out.samples.insert(out.samples.end(), row, row + rect.w * c);
  }
  return out;
}

std::array<Image, kChannelCount> SplitBayerPlanes(const Image& mosaic) {
  CheckImage(mosaic);
  if (!mosaic.bayer) Fail(ErrorCategory::kValidation, "plane split needs a Bayer mosaic");
  std::array<Image, kChannelCount> planes;
  for (int c = 0; c < kChannelCount; ++c) {
    // Locate this channel inside the 2x2 cell.
    std::size_t ox = 0, oy = 0;
    for (std::size_t y = 0; y < 2; ++y) {
      for (std::size_t x = 0; x < 2; ++x) {
        if (ChannelAt(*mosaic.bayer, x, y) == kAllChannels[c]) {
          ox = x;
          oy = y;
        }
      }
    }
    Image& plane = planes[c];
    plane.channels = 1;
    plane.bit_depth = mosaic.bit_depth;
    plane.width = mosaic.width > ox ? (mosaic.width - ox + 1) / 2 : 0;
    plane.height = mosaic.height > oy ? (mosaic.height - oy + 1) / 2 : 0;
    plane.samples.reserve(plane.width * plane.height);
    for (std::size_t y = oy; y < mosaic.height; y += 2) {
      for (std::size_t x = ox; x < mosaic.width; x += 2) {
        plane.samples.push_back(mosaic.samples[y * mosaic.width + x]);
      }
    }
  }
  return planes;
}

LevelSet CollectLevels(std::span<const Image> images, Mode mode, Executor& executor) {
  CheckHomogeneous(images);
  const std::size_t groups = GroupCount(images[0], mode);
  const std::size_t levels = std::size_t{1} << images[0].bit_depth;
  std::vector<std::vector<std::uint8_t>> occupied(groups, std::vector<std::uint8_t>(levels, 0));
  std::mutex merge;

  // Work items are row blocks across all frames. Union is idempotent and
  // commutative, so the result does not depend on scheduling.
  std::vector<std::pair<std::size_t, std::size_t>> blocks;  // (frame, first row)
  for (std::size_t f = 0; f < images.size(); ++f) {
    for (std::size_t y = 0; y < images[f].height; y += kRowGrain * 8) blocks.push_back({f, y});
  }
  executor.ForRange(0, blocks.size(), 1, [&](std::size_t lo, std::size_t hi) {
    std::vector<std::vector<std::uint8_t>> local(groups, std::vector<std::uint8_t>(levels, 0));
    for (std::size_t b = lo; b < hi; ++b) {
      const Image& image = images[blocks[b].first];
      const std::size_t y0 = blocks[b].second;
      const std::size_t y1 = std::min(image.height, y0 + kRowGrain * 8);
      const std::uint32_t limit = (1u << image.bit_depth) - 1;
      ForEachSample(image, mode, y0, y1, [&](std::size_t g, std::size_t, std::uint16_t v) {
        if (v > limit) Fail(ErrorCategory::kRange, "sample exceeds the image bit depth");
        local[g][v] = 1;
      });
    }
    std::lock_guard lock(merge);
    for (std::size_t g = 0; g < groups; ++g) {
      for (std::size_t v = 0; v < levels; ++v) occupied[g][v] |= local[g][v];
    }
  });

  LevelSet set;
  set.mode = mode;
  set.bit_depth = images[0].bit_depth;
  set.groups.resize(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t v = 0; v < levels; ++v) {
      if (occupied[g][v]) set.groups[g].push_back(static_cast<std::uint16_t>(v));
    }
  }
  return set;
}

Lut::Lut(const LevelSet& levels) : mode_(levels.mode) {
  const std::size_t size = std::size_t{1} << levels.bit_depth;
  codes_.assign(levels.groups.size(), std::vector<std::uint8_t>(size, 0));
  present_.assign(levels.groups.size(), std::vector<std::uint8_t>(size, 0));
  for (std::size_t g = 0; g < levels.groups.size(); ++g) {
    const auto& group = levels.groups[g];
    if (group.empty()) continue;  // channel absent from every image (e.g. 1-pixel crop)
    const std::uint64_t span = group.size() - 1;
    for (std::size_t k = 0; k < group.size(); ++k) {
      // round(255 k / span) with halves rounded up, in integers.
      const std::uint64_t code = span == 0 ? 0 : (2 * 255 * k + span) / (2 * span);
      codes_[g][group[k]] = static_cast<std::uint8_t>(code);
      present_[g][group[k]] = 1;
    }
  }
}

Lut BuildLut(const LevelSet& levels) {
  bool any = false;
  for (const auto& group : levels.groups) any = any || !group.empty();
  if (!any) Fail(ErrorCategory::kValidation, "no occupied levels");
  return Lut(levels);
}

Image ApplyLut(const Lut& lut, const Image& image, Executor& executor) {
  CheckImage(image);
  if (GroupCount(image, lut.mode()) != lut.group_count()) {
    Fail(ErrorCategory::kValidation, "lookup table groups do not match the image layout");
  }
  Image out = image;
  out.bit_depth = 8;
  executor.ForRange(0, image.height, kRowGrain, [&](std::size_t y0, std::size_t y1) {
    ForEachSample(image, lut.mode(), y0, y1,
                  [&](std::size_t g, std::size_t i, std::uint16_t v) {
                    if (!lut.contains(g, v)) {
                      Fail(ErrorCategory::kValidation,
                           "level " + std::to_string(v) +
                               " is absent from the lookup table; image is outside the "
                               "series the table was built from");
                    }
                    out.samples[i] = lut.code(g, v);
                  });
  });
  return out;
}

std::vector<Image> Convert(std::span<const Image> images, const Options& options,
                           Executor& executor) {
  CheckHomogeneous(images);
  std::vector<Image> cropped;
  if (options.crop) {
    cropped.reserve(images.size());
    for (const auto& image : images) cropped.push_back(Crop(image, *options.crop));
    images = cropped;
  }
  std::vector<Image> out;
  out.reserve(images.size());
  if (options.scope == Scope::kSeries) {
    const Lut lut = BuildLut(CollectLevels(images, options.mode, executor));
    for (const auto& image : images) out.push_back(ApplyLut(lut, image, executor));
  } else {
    for (const auto& image : images) {
      const Lut lut = BuildLut(CollectLevels(std::span(&image, 1), options.mode, executor));
      out.push_back(ApplyLut(lut, image, executor));
    }
  }
  return out;
}

std::vector<GroupSummary> Summarize(const Image& image, Mode mode) {
  const LevelSet set = CollectLevels(std::span(&image, 1), mode);
  std::vector<GroupSummary> summary;
  for (std::size_t g = 0; g < set.groups.size(); ++g) {
    GroupSummary s;
    if (mode == Mode::kJoint) {
      s.name = "joint";
    } else if (image.bayer) {
      s.name = std::string(ChannelName(kAllChannels[g]));
    } else if (image.channels == 3) {
      s.name = std::string(1, "RGB"[g]);
    } else {
      s.name = "gray";
    }
    const auto& levels = set.groups[g];
    s.occupied = levels.size();
    if (!levels.empty()) {
      s.min_level = levels.front();
      s.max_level = levels.back();
    }
    summary.push_back(std::move(s));
  }
  return summary;
}

}  // namespace radcal::lil
