#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "radcal/image.h"

namespace radcal::spectra {

struct Sample {
  double wavelength_nm;
  double value;

  bool operator==(const Sample&) const = default;
};

// A curve sampled at strictly increasing wavelengths with non-negative
// values (transmitted flux, transmittance, or quantum efficiency).
class Spectrum {
 public:
  // Throws kValidation unless there are >= 2 samples, wavelengths strictly
  // increase, and every value is finite and >= 0.
  explicit Spectrum(std::vector<Sample> samples);

  const std::vector<Sample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  double min_wavelength() const { return samples_.front().wavelength_nm; }
  double max_wavelength() const { return samples_.back().wavelength_nm; }

  // Linear interpolation; throws kRange outside [min, max].
  double ValueAt(double wavelength_nm) const;

  // Additionally require values <= 1.
  void ValidateAsEfficiency() const;

  bool operator==(const Spectrum&) const = default;

 private:
  std::vector<Sample> samples_;
};

// Two-column table (wavelength, value), separated by whitespace or commas.
// Lines starting with '#' and blank lines are skipped. Rows must already be
// in increasing wavelength order.
Spectrum ParseSpectrum(const std::string& text);
Spectrum LoadSpectrum(const std::filesystem::path& path);
// Inverse of ParseSpectrum, full double precision.
std::string FormatSpectrum(const Spectrum& s);

// Quantum efficiency of the four mosaic channels.
struct QeSet {
  std::array<Spectrum, kChannelCount> channels;

  const Spectrum& operator[](Channel c) const { return channels[static_cast<int>(c)]; }
};

// Four separate files, R, G1, G2, B.
QeSet LoadQeSet(std::span<const std::filesystem::path, 4> paths);
// One file with columns wavelength, R, G1, G2, B.
QeSet LoadQeTable(const std::filesystem::path& path);
QeSet ParseQeTable(const std::string& text);

Spectrum Resample(const Spectrum& s, std::span<const double> grid);

// Pointwise product on the intersection of the two supports, evaluated on
// the nodes of whichever spectrum is sampled more finely there (plus the
// intersection end points).
Spectrum Multiply(const Spectrum& light, const Spectrum& qe);

double IntegrateTrapezoid(const Spectrum& s);

inline constexpr int kLevelCount = 8;

// Relative photon counts per channel for calibration levels L0 (dark) to L7
// (unfiltered). counts[c][0] is always 0.
struct PhotonTable {
  std::array<std::array<double, kLevelCount>, kChannelCount> counts{};

  double at(Channel c, int level) const { return counts[static_cast<int>(c)][level]; }
  double MaxTopLevel() const;

  // Throws kValidation if L0 is non-zero, any entry is negative or not
  // finite, or a channel decreases between consecutive levels.
  void Validate() const;

  bool operator==(const PhotonTable&) const = default;
};

// levels holds L1..L7 (seven spectra, increasing light).
PhotonTable PhotonCounts(std::span<const Spectrum> levels, const QeSet& qe);

// Text form: one line per channel "R c0 c1 ... c7" (and '#' comments).
std::string FormatPhotonTable(const PhotonTable& table);
PhotonTable ParsePhotonTable(const std::string& text);

std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace radcal::spectra
