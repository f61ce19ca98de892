#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "radcal/image.h"
#include "radcal/parallel.h"
#include "radcal/spectra.h"

namespace radcal::calib {

using spectra::kLevelCount;
using spectra::PhotonTable;

// Knot intensities are kept in 1/16 digital-count fixed point.
inline constexpr int kKnotScale = 16;

// Real-valued frame, e.g. the mean of several raw frames.
struct MeanImage {
  std::size_t width = 0;
  std::size_t height = 0;
  BayerPattern pattern = BayerPattern::kRGGB;
  std::vector<double> values;

  static MeanImage FromRaw(const RawImage& raw);
};

// Per-pixel mean over frames [center - half_window, center + half_window].
MeanImage MeanLevelImage(std::span<const RawImage> frames, std::size_t center,
                         std::size_t half_window, Executor& executor = Serial());

// Intensity -> photon curve of one pixel: one knot per calibration level.
struct PixelCurve {
  std::array<double, kLevelCount> intensities{};
  std::array<double, kLevelCount> photons{};
  bool ok = true;
};

// True when knot intensities strictly increase, i.e. the curve is invertible.
bool IsInvertible(std::span<const std::uint16_t, kLevelCount> knots);

class CalibrationMap {
 public:
  CalibrationMap() = default;
  CalibrationMap(std::size_t width, std::size_t height, BayerPattern pattern,
                 PhotonTable table, std::vector<std::uint16_t> knots,
                 std::vector<std::uint8_t> defects,
                 std::map<std::string, std::string> metadata);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t pixel_count() const { return width_ * height_; }
  BayerPattern pattern() const { return pattern_; }
  const PhotonTable& photon_table() const { return table_; }
  const std::map<std::string, std::string>& metadata() const { return metadata_; }

  // Fixed-point knots of pixel index i (row-major).
  std::span<const std::uint16_t, kLevelCount> knots(std::size_t i) const {
    return std::span<const std::uint16_t, kLevelCount>(knots_.data() + i * kLevelCount,
                                                       kLevelCount);
  }
  std::span<const std::uint16_t> all_knots() const { return knots_; }
  bool defective(std::size_t i) const { return defects_[i] != 0; }
  std::span<const std::uint8_t> defect_mask() const { return defects_; }

  std::size_t defect_count() const;
  double defect_fraction() const;

  PixelCurve curve(std::size_t x, std::size_t y) const;

  bool operator==(const CalibrationMap&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  BayerPattern pattern_ = BayerPattern::kRGGB;
  PhotonTable table_;
  std::vector<std::uint16_t> knots_;
  std::vector<std::uint8_t> defects_;
  std::map<std::string, std::string> metadata_;
};

// Maximum tolerated fraction of defective pixels.
inline constexpr double kMaxDefectFraction = 0.20;

// Accumulates the eight level images one at a time so that only the
// fixed-point knots stay resident.
class CalibrationBuilder {
 public:
  CalibrationBuilder(std::size_t width, std::size_t height, BayerPattern pattern);

  void SetLevel(int level, const MeanImage& mean, Executor& executor = Serial());
  void SetLevel(int level, const RawImage& frame, Executor& executor = Serial());

  // Marks defects and returns the map. Throws kValidation if a level is
  // missing or more than kMaxDefectFraction of the pixels are defective.
  CalibrationMap Finish(const PhotonTable& table, std::map<std::string, std::string> metadata,
                        Executor& executor = Serial()) &&;

 private:
  void CheckLevel(int level, std::size_t width, std::size_t height, BayerPattern pattern);

  std::size_t width_;
  std::size_t height_;
  BayerPattern pattern_;
  std::vector<std::uint16_t> knots_;
  std::array<bool, kLevelCount> filled_{};
};

CalibrationMap BuildCalibration(std::span<const MeanImage> level_means,
                                const PhotonTable& table, BayerPattern pattern,
                                std::map<std::string, std::string> metadata = {},
                                Executor& executor = Serial());

// NCAL file, integers little-endian:
//   "NCAL" | u8 version | u32 width | u32 height | u8 bayer
//   | 4x8 f64 photon table (R, G1, G2, B; L0..L7)
//   | u32 metadata length | metadata ("key=value\n" lines)
//   | width*height*8 u16 knots (pixel-major) | width*height u8 defect flags
//   | u32 CRC-32 of everything before it
inline constexpr std::uint8_t kNcalVersion = 1;

std::size_t NcalFileSize(std::size_t width, std::size_t height, std::size_t metadata_bytes);

std::vector<std::uint8_t> EncodeCalibration(const CalibrationMap& map);
CalibrationMap DecodeCalibration(std::span<const std::uint8_t> bytes);

void SaveCalibration(const CalibrationMap& map, const std::filesystem::path& path);
// Maps the file read-only and verifies it before copying the pixel data.
CalibrationMap LoadCalibration(const std::filesystem::path& path);

}  // namespace radcal::calib
