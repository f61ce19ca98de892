#include "radcal/spectra.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "radcal/error.h"

namespace radcal::spectra {
namespace {

std::string Num(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

// Splits a data line into numbers; commas count as whitespace.
std::vector<double> ParseRow(std::string line, std::size_t line_number) {
  std::replace(line.begin(), line.end(), ',', ' ');
  std::replace(line.begin(), line.end(), ';', ' ');
  std::istringstream in(line);
  in.imbue(std::locale::classic());
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) {
      Fail(ErrorCategory::kFormat, "line " + std::to_string(line_number) +
                                       ": cannot parse '" + token + "' as a number");
    }
    values.push_back(v);
  }
  return values;
}

std::vector<std::vector<double>> ParseTable(const std::string& text, std::size_t columns) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto row = ParseRow(line, line_number);
    if (row.size() != columns) {
      Fail(ErrorCategory::kFormat, "line " + std::to_string(line_number) + ": expected " +
                                       std::to_string(columns) + " columns, found " +
                                       std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Spectrum::Spectrum(std::vector<Sample> samples) : samples_(std::move(samples)) {
  if (samples_.size() < 2) {
    Fail(ErrorCategory::kValidation, "spectrum needs at least 2 samples");
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (!std::isfinite(s.wavelength_nm) || !std::isfinite(s.value)) {
      Fail(ErrorCategory::kValidation, "spectrum contains a non-finite number");
    }
    if (s.value < 0) {
      Fail(ErrorCategory::kValidation, "negative value " + Num(s.value) + " at " +
                                           Num(s.wavelength_nm) + " nm");
    }
    if (i > 0 && !(s.wavelength_nm > samples_[i - 1].wavelength_nm)) {
      Fail(ErrorCategory::kValidation, "wavelengths not increasing at " +
                                           Num(s.wavelength_nm) + " nm");
    }
  }
}

double Spectrum::ValueAt(double wavelength_nm) const {
  if (!(wavelength_nm >= min_wavelength() && wavelength_nm <= max_wavelength())) {
    Fail(ErrorCategory::kRange, "wavelength " + Num(wavelength_nm) +
                                    " nm outside spectrum support [" + Num(min_wavelength()) +
                                    ", " + Num(max_wavelength()) + "]");
  }
  const auto upper = std::upper_bound(
      samples_.begin(), samples_.end(), wavelength_nm,
      [](double w, const Sample& s) { return w < s.wavelength_nm; });
  if (upper == samples_.end()) return samples_.back().value;
  const auto lower = upper - 1;
  if (lower->wavelength_nm == wavelength_nm) return lower->value;
  const double t =
      (wavelength_nm - lower->wavelength_nm) / (upper->wavelength_nm - lower->wavelength_nm);
  return lower->value + t * (upper->value - lower->value);
}

void Spectrum::ValidateAsEfficiency() const {
  for (const auto& s : samples_) {
    if (s.value > 1) {
      Fail(ErrorCategory::kValidation, "quantum efficiency " + Num(s.value) + " at " +
                                           Num(s.wavelength_nm) + " nm exceeds 1");
    }
  }
}

Spectrum ParseSpectrum(const std::string& text) {
  std::vector<Sample> samples;
  for (const auto& row : ParseTable(text, 2)) samples.push_back({row[0], row[1]});
  return Spectrum(std::move(samples));
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCategory::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Spectrum LoadSpectrum(const std::filesystem::path& path) {
  try {
    return ParseSpectrum(ReadTextFile(path));
  } catch (const Error& e) {
    throw Error(e.category(), path.string() + ": " + e.what());
  }
}

QeSet LoadQeSet(std::span<const std::filesystem::path, 4> paths) {
  QeSet qe{{LoadSpectrum(paths[0]), LoadSpectrum(paths[1]), LoadSpectrum(paths[2]),
            LoadSpectrum(paths[3])}};
  for (const auto& s : qe.channels) s.ValidateAsEfficiency();
  return qe;
}

QeSet ParseQeTable(const std::string& text) {
  std::array<std::vector<Sample>, kChannelCount> columns;
  for (const auto& row : ParseTable(text, 5)) {
    for (int c = 0; c < kChannelCount; ++c) columns[c].push_back({row[0], row[c + 1]});
  }
  QeSet qe{{Spectrum(std::move(columns[0])), Spectrum(std::move(columns[1])),
            Spectrum(std::move(columns[2])), Spectrum(std::move(columns[3]))}};
  for (const auto& s : qe.channels) s.ValidateAsEfficiency();
  return qe;
}

QeSet LoadQeTable(const std::filesystem::path& path) {
  try {
    return ParseQeTable(ReadTextFile(path));
  } catch (const Error& e) {
    throw Error(e.category(), path.string() + ": " + e.what());
  }
}

Spectrum Resample(const Spectrum& s, std::span<const double> grid) {
  std::vector<Sample> out;
  out.reserve(grid.size());
  for (const double w : grid) out.push_back({w, s.ValueAt(w)});
  return Spectrum(std::move(out));
}

Spectrum Multiply(const Spectrum& light, const Spectrum& qe) {
  const double lo = std::max(light.min_wavelength(), qe.min_wavelength());
  const double hi = std::min(light.max_wavelength(), qe.max_wavelength());
  if (!(lo < hi)) {
    Fail(ErrorCategory::kValidation, "spectra have no overlapping wavelength range");
  }
  auto nodes_inside = [&](const Spectrum& s) {
    std::vector<double> nodes;
    for (const auto& sample : s.samples()) {
      if (sample.wavelength_nm > lo && sample.wavelength_nm < hi) {
        nodes.push_back(sample.wavelength_nm);
      }
    }
    return nodes;
  };
  const auto light_nodes = nodes_inside(light);
  const auto qe_nodes = nodes_inside(qe);
  std::vector<double> grid;
  grid.reserve(std::max(light_nodes.size(), qe_nodes.size()) + 2);
  grid.push_back(lo);
  const auto& finer = qe_nodes.size() > light_nodes.size() ? qe_nodes : light_nodes;
  grid.insert(grid.end(), finer.begin(), finer.end());
  grid.push_back(hi);

  std::vector<Sample> product;
  product.reserve(grid.size());
  for (const double w : grid) product.push_back({w, light.ValueAt(w) * qe.ValueAt(w)});
  return Spectrum(std::move(product));
}

double IntegrateTrapezoid(const Spectrum& s) {
  const auto& samples = s.samples();
  double area = 0;
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    area += 0.5 * (samples[i].value + samples[i + 1].value) *
            (samples[i + 1].wavelength_nm - samples[i].wavelength_nm);
  }
  return area;
}

double PhotonTable::MaxTopLevel() const {
  double top = 0;
  for (const auto& channel : counts) top = std::max(top, channel[kLevelCount - 1]);
  return top;
}

void PhotonTable::Validate() const {
  for (int c = 0; c < kChannelCount; ++c) {
    const auto name = std::string(ChannelName(kAllChannels[c]));
    if (counts[c][0] != 0) {
      Fail(ErrorCategory::kValidation, "channel " + name + ": L0 photon count must be 0");
    }
    for (int k = 0; k < kLevelCount; ++k) {
      if (!std::isfinite(counts[c][k]) || counts[c][k] < 0) {
        Fail(ErrorCategory::kValidation, "channel " + name + ": invalid photon count at L" +
                                             std::to_string(k));
      }
      if (k > 0 && counts[c][k] < counts[c][k - 1]) {
        Fail(ErrorCategory::kValidation,
             "channel " + name + ": photon count decreases from L" + std::to_string(k - 1) +
                 " to L" + std::to_string(k));
      }
    }
  }
}

PhotonTable PhotonCounts(std::span<const Spectrum> levels, const QeSet& qe) {
  if (levels.size() != kLevelCount - 1) {
    Fail(ErrorCategory::kValidation, "expected 7 level spectra (L1..L7), got " +
                                         std::to_string(levels.size()));
  }
  PhotonTable table;
  for (int c = 0; c < kChannelCount; ++c) {
    table.counts[c][0] = 0;
    for (int k = 1; k < kLevelCount; ++k) {
      table.counts[c][k] = IntegrateTrapezoid(Multiply(levels[k - 1], qe.channels[c]));
    }
  }
  table.Validate();
  return table;
}

std::string FormatSpectrum(const Spectrum& s) {
  std::string out;
  for (const auto& sample : s.samples()) {
    out += Num(sample.wavelength_nm) + " " + Num(sample.value) + "\n";
  }
  return out;
}

std::string FormatPhotonTable(const PhotonTable& table) {
  std::string out = "# channel L0 L1 L2 L3 L4 L5 L6 L7\n";
  for (int c = 0; c < kChannelCount; ++c) {
    out += ChannelName(kAllChannels[c]);
    for (const double v : table.counts[c]) out += " " + Num(v);
    out += "\n";
  }
  return out;
}

PhotonTable ParsePhotonTable(const std::string& text) {
  PhotonTable table;
  std::array<bool, kChannelCount> seen{};
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream row(line);
    row.imbue(std::locale::classic());
    std::string name;
    row >> name;
    int c = -1;
    for (int i = 0; i < kChannelCount; ++i) {
      if (ChannelName(kAllChannels[i]) == name) c = i;
    }
    if (c < 0) Fail(ErrorCategory::kFormat, "photon table: unknown channel '" + name + "'");
    for (auto& v : table.counts[c]) {
      if (!(row >> v)) Fail(ErrorCategory::kFormat, "photon table: channel " + name +
                                                        " needs 8 values");
    }
    seen[c] = true;
  }
  for (int c = 0; c < kChannelCount; ++c) {
    if (!seen[c]) {
      Fail(ErrorCategory::kFormat, "photon table: missing channel " +
                                       std::string(ChannelName(kAllChannels[c])));
    }
  }
  table.Validate();
  return table;
}

}  // namespace radcal::spectra
