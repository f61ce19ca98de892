#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "radcal/calibration.h"
#include "radcal/image.h"
#include "radcal/parallel.h"

namespace radcal::correction {

inline constexpr std::uint16_t kMaxCode14 = 16383;

// Piecewise-linear evaluation of a calibration curve. Intensities below the
// L0 knot give the L0 photons, above the L7 knot the L7 photons.
double CorrectPixel(const calib::PixelCurve& curve, double intensity);

struct PhotonImage {
  std::size_t width = 0;
  std::size_t height = 0;
  BayerPattern pattern = BayerPattern::kRGGB;
  std::vector<double> values;
  double full_scale = 1.0;
};

struct CorrectionStats {
  std::size_t below_range = 0;  // intensity under the pixel's L0 knot
  std::size_t above_range = 0;  // intensity over the pixel's L7 knot
  std::size_t fallback_pixels = 0;
};

// Default photon count mapped to code 16383: the brightest channel at L7.
double DefaultFullScale(const calib::PhotonTable& table);

// Applies a calibration map to frames. Construction resolves a substitute
// curve for every defective pixel: the per-knot median of the nearest
// same-channel valid pixels, searched in growing square rings until at least
// three donors are found.
class Corrector {
 public:
  explicit Corrector(const calib::CalibrationMap& map, Executor& executor = Serial());

  const calib::CalibrationMap& map() const { return map_; }

  // Curve actually used for pixel (x, y), substitute included.
  calib::PixelCurve EffectiveCurve(std::size_t x, std::size_t y) const;

  PhotonImage Correct(const RawImage& raw, Executor& executor = Serial(),
                      CorrectionStats* stats = nullptr) const;
  // Real-valued intensities are first rounded to the 1/16 knot grid.
  PhotonImage Correct(const calib::MeanImage& image, Executor& executor = Serial(),
                      CorrectionStats* stats = nullptr) const;

  std::size_t fallback_count() const { return fallbacks_.size(); }

 private:
  template <typename Sample>
  PhotonImage CorrectSamples(std::size_t width, std::size_t height, BayerPattern pattern,
                             std::span<const Sample> samples, Executor& executor,
                             CorrectionStats* stats) const;
  const std::array<double, calib::kLevelCount>* FallbackKnots(std::size_t index) const;

  const calib::CalibrationMap& map_;
  // Sorted by pixel index; knots in digital counts.
  std::vector<std::pair<std::size_t, std::array<double, calib::kLevelCount>>> fallbacks_;
};

PhotonImage CorrectImage(const calib::CalibrationMap& map, const RawImage& raw,
                         Executor& executor = Serial(), CorrectionStats* stats = nullptr);

// code = round(16383 * min(value, full_scale) / full_scale), half up.
std::uint16_t QuantizeValue(double value, double full_scale);
std::vector<std::uint16_t> Quantize14(const PhotonImage& image, double full_scale,
                                      Executor& executor = Serial());

}  // namespace radcal::correction
