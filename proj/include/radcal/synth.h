#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "radcal/image.h"
#include "radcal/parallel.h"
#include "radcal/spectra.h"

namespace radcal::synth {

// Portable uniform doubles in [0, 1) from mt19937_64, whose output sequence
// is fixed by the standard (the std distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  std::uint64_t Next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

struct Defect {
  std::size_t index;
  std::uint16_t value;
};

// Noiseless camera model: sample = clamp(round(gain * photons + offset)),
// except defect pixels, which always read their fixed value.
struct SensorModel {
  std::size_t width = 0;
  std::size_t height = 0;
  BayerPattern pattern = BayerPattern::kRGGB;
  int bit_depth = 12;
  std::uint64_t seed = 0;
  std::vector<double> gain;    // in (0, 1]
  std::vector<double> offset;  // >= 0, digital counts
  std::vector<Defect> defects;  // sorted by index

  std::uint16_t Respond(std::size_t index, double photons) const;
  bool IsDefect(std::size_t index) const;
};

// Identity response: gain 1, offset 0, no defects.
SensorModel MakeIdealSensor(std::size_t width, std::size_t height, BayerPattern pattern,
                            int bit_depth = 12);

struct VignettedSensorOptions {
  std::size_t width = 1024;
  std::size_t height = 1024;
  BayerPattern pattern = BayerPattern::kRGGB;
  int bit_depth = 12;
  double vignette_min = 0.7;  // gain at the corners, 1 at the centre
  double gain_jitter = 0.05;  // per-pixel relative gain spread, +/-
  double offset_max = 300.0;  // offsets uniform in [0, offset_max]
  std::size_t defect_count = 0;
  std::uint64_t seed = 1;
};

SensorModel MakeVignettedSensor(const VignettedSensorOptions& options);

RawImage RenderLevel(const SensorModel& model, const std::array<double, kChannelCount>& photons,
                     Executor& executor = Serial());

// Photon input per pixel.
RawImage RenderScene(const SensorModel& model, std::span<const double> photons,
                     Executor& executor = Serial());

// Frames L0..L7 of a level stack, one per table column.
std::vector<RawImage> RenderStack(const SensorModel& model, const spectra::PhotonTable& table,
                                  Executor& executor = Serial());

// Through-focus stack of a scene: frame i sees the photon field averaged
// over each pixel's same-channel neighbourhood of radius |i - depth/2|, so
// the centre frame is the sharp one. Defocus acts on the optical image only;
// the sensor response (gain, offset, defects) is applied afterwards.
std::vector<RawImage> RenderFocusStack(const SensorModel& model, std::span<const double> photons,
                                       std::size_t depth, Executor& executor = Serial());

// Synthetic lamp, gray filters and Bayer QE curves. The lamp is scaled so
// that the brightest channel collects `top_photons` at L7.
struct SyntheticOptics {
  std::vector<spectra::Spectrum> levels;  // L1..L7
  spectra::QeSet qe;
};

SyntheticOptics MakeSyntheticOptics(double top_photons = 3600.0);

// Smooth, textured scene spanning [low, high] of each channel's L7 photons.
std::vector<double> MakeTexturedScene(const SensorModel& model,
                                      const spectra::PhotonTable& table, std::uint64_t seed,
                                      double low = 0.05, double high = 0.95);

// Uniform scene: photons per channel.
std::vector<double> MakeUniformScene(const SensorModel& model,
                                     const std::array<double, kChannelCount>& photons);

// Human-readable sidecar describing the model and its summary statistics.
std::string FormatGroundTruth(const SensorModel& model, const spectra::PhotonTable& table);

}  // namespace radcal::synth
