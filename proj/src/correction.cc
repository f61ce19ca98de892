#include "radcal/correction.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>

#include "radcal/error.h"

namespace radcal::correction {
namespace {

using calib::kKnotScale;
using calib::kLevelCount;

constexpr std::size_t kRowGrain = 16;
constexpr std::size_t kMinDonors = 3;

struct Lookup {
  double photons;
  int range;  // -1 below, 0 inside, +1 above
};

template <typename Knot>
inline Lookup Interpolate(const Knot* knots, double knot_scale, const double* photons,
                          double intensity) {
  // Compare in knot units so integer intensities meet knots exactly.
  const double x = intensity * knot_scale;
  if (x <= static_cast<double>(knots[0])) {
    return {photons[0], x < static_cast<double>(knots[0]) ? -1 : 0};
  }
  if (x >= static_cast<double>(knots[kLevelCount - 1])) {
    return {photons[kLevelCount - 1], x > static_cast<double>(knots[kLevelCount - 1]) ? 1 : 0};
  }
  int upper = 1;
  while (static_cast<double>(knots[upper]) <= x) ++upper;
  const double x0 = static_cast<double>(knots[upper - 1]);
  const double x1 = static_cast<double>(knots[upper]);
  const double t = (x - x0) / (x1 - x0);
  return {photons[upper - 1] + t * (photons[upper] - photons[upper - 1]), 0};
}

}  // namespace

double CorrectPixel(const calib::PixelCurve& curve, double intensity) {
  return Interpolate(curve.intensities.data(), 1.0, curve.photons.data(), intensity).photons;
}

double DefaultFullScale(const calib::PhotonTable& table) { return table.MaxTopLevel(); }

Corrector::Corrector(const calib::CalibrationMap& map, Executor& executor) : map_(map) {
  const std::size_t width = map.width();
  const std::size_t height = map.height();
  std::vector<std::size_t> defective;
  for (std::size_t i = 0; i < map.pixel_count(); ++i) {
    if (map.defective(i)) defective.push_back(i);
  }
  fallbacks_.resize(defective.size());
  executor.ForRange(0, defective.size(), 256, [&](std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> donors;
    std::vector<double> column;
    for (std::size_t d = lo; d < hi; ++d) {
      const std::size_t index = defective[d];
      const auto x = static_cast<long long>(index % width);
      const auto y = static_cast<long long>(index / width);
      donors.clear();
      // Same-channel sites repeat every 2 pixels; ring r covers offsets of
      // Chebyshev radius r on that lattice.
      const long long max_ring = static_cast<long long>(std::max(width, height));
      for (long long r = 1; r <= max_ring && donors.size() < kMinDonors; ++r) {
        for (long long j = -r; j <= r; ++j) {
          for (long long i = -r; i <= r; ++i) {
            if (std::max(std::llabs(i), std::llabs(j)) != r) continue;
            const long long nx = x + 2 * i;
            const long long ny = y + 2 * j;
            if (nx < 0 || ny < 0 || nx >= static_cast<long long>(width) ||
                ny >= static_cast<long long>(height)) {
              continue;
            }
            const auto n = static_cast<std::size_t>(ny) * width + static_cast<std::size_t>(nx);
            if (!map.defective(n)) donors.push_back(n);
          }
        }
      }
      if (donors.empty()) {
        Fail(ErrorCategory::kValidation, "defective pixel " + std::to_string(index) +
                                             " has no valid same-channel neighbour");
      }
      std::array<double, kLevelCount> knots{};
      for (int k = 0; k < kLevelCount; ++k) {
        column.clear();
        for (const auto n : donors) column.push_back(map.knots(n)[k]);
        std::sort(column.begin(), column.end());
        const std::size_t m = column.size();
        knots[k] = m % 2 == 1 ? column[m / 2] : 0.5 * (column[m / 2 - 1] + column[m / 2]);
        knots[k] /= kKnotScale;
      }
      fallbacks_[d] = {index, knots};
    }
  });
}

const std::array<double, kLevelCount>* Corrector::FallbackKnots(std::size_t index) const {
  const auto it = std::lower_bound(
      fallbacks_.begin(), fallbacks_.end(), index,
      [](const auto& entry, std::size_t i) { return entry.first < i; });
  return it != fallbacks_.end() && it->first == index ? &it->second : nullptr;
}

calib::PixelCurve Corrector::EffectiveCurve(std::size_t x, std::size_t y) const {
  calib::PixelCurve curve = map_.curve(x, y);
  if (!curve.ok) {
    curve.intensities = *FallbackKnots(y * map_.width() + x);
    curve.ok = true;
  }
  return curve;
}

template <typename Sample>
PhotonImage Corrector::CorrectSamples(std::size_t width, std::size_t height,
                                      BayerPattern pattern, std::span<const Sample> samples,
                                      Executor& executor, CorrectionStats* stats) const {
  if (width != map_.width() || height != map_.height()) {
    Fail(ErrorCategory::kValidation,
         "frame is " + std::to_string(width) + "x" + std::to_string(height) +
             " but the calibration is " + std::to_string(map_.width()) + "x" +
             std::to_string(map_.height()));
  }
  if (pattern != map_.pattern()) {
    Fail(ErrorCategory::kValidation, "Bayer pattern mismatch: frame " +
                                         std::string(PatternName(pattern)) + ", calibration " +
                                         std::string(PatternName(map_.pattern())));
  }
  PhotonImage out;
  out.width = width;
  out.height = height;
  out.pattern = pattern;
  out.full_scale = DefaultFullScale(map_.photon_table());
  out.values.resize(width * height);

  const auto& table = map_.photon_table();
  const std::size_t chunks = Executor::ChunkCount(0, height, kRowGrain);
  std::vector<CorrectionStats> partial(chunks);
  executor.ForRange(0, height, kRowGrain, [&](std::size_t y0, std::size_t y1) {
    CorrectionStats& local = partial[y0 / kRowGrain];
    for (std::size_t y = y0; y < y1; ++y) {
      const double* row_photons[2] = {
          table.counts[static_cast<int>(ChannelAt(pattern, 0, y))].data(),
          table.counts[static_cast<int>(ChannelAt(pattern, 1, y))].data()};
      for (std::size_t x = 0; x < width; ++x) {
        const std::size_t i = y * width + x;
        const double* photons = row_photons[x & 1];
        double intensity = static_cast<double>(samples[i]);
        if constexpr (std::is_floating_point_v<Sample>) {
          intensity = std::round(intensity * kKnotScale) / kKnotScale;
        }
        Lookup r;
        if (!map_.defective(i)) {
          r = Interpolate(map_.knots(i).data(), kKnotScale, photons, intensity);
        } else {
          r = Interpolate(FallbackKnots(i)->data(), 1.0, photons, intensity);
          ++local.fallback_pixels;
        }
        out.values[i] = r.photons;
        if (r.range < 0) ++local.below_range;
        if (r.range > 0) ++local.above_range;
      }
    }
  });
  if (stats != nullptr) {
    *stats = {};
    for (const auto& p : partial) {
      stats->below_range += p.below_range;
      stats->above_range += p.above_range;
      stats->fallback_pixels += p.fallback_pixels;
    }
  }
  return out;
}

PhotonImage Corrector::Correct(const RawImage& raw, Executor& executor,
                               CorrectionStats* stats) const {
  return CorrectSamples(raw.width(), raw.height(), raw.pattern(), raw.samples(), executor,
                        stats);
}

PhotonImage Corrector::Correct(const calib::MeanImage& image, Executor& executor,
                               CorrectionStats* stats) const {
  return CorrectSamples(image.width, image.height, image.pattern,
                        std::span<const double>(image.values), executor, stats);
}

PhotonImage CorrectImage(const calib::CalibrationMap& map, const RawImage& raw,
                         Executor& executor, CorrectionStats* stats) {
  return Corrector(map, executor).Correct(raw, executor, stats);
}

std::uint16_t QuantizeValue(double value, double full_scale) {
  const double clamped = std::clamp(value, 0.0, full_scale);
  return static_cast<std::uint16_t>(std::floor(kMaxCode14 * (clamped / full_scale) + 0.5));
}

std::vector<std::uint16_t> Quantize14(const PhotonImage& image, double full_scale,
                                      Executor& executor) {
  if (!(full_scale > 0) || !std::isfinite(full_scale)) {
    Fail(ErrorCategory::kValidation, "full scale must be positive");
  }
  std::vector<std::uint16_t> codes(image.values.size());
  const std::size_t width = std::max<std::size_t>(image.width, 1);
  executor.ForRange(0, image.height, kRowGrain, [&](std::size_t y0, std::size_t y1) {
    for (std::size_t i = y0 * width; i < std::min(codes.size(), y1 * width); ++i) {
      codes[i] = QuantizeValue(image.values[i], full_scale);
    }
  });
  return codes;
}

}  // namespace radcal::correction
