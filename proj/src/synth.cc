#include "radcal/synth.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "radcal/error.h"

namespace radcal::synth {
namespace {

constexpr std::size_t kRowGrain = 16;

std::string Num(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

double Gaussian(double x, double centre, double sigma) {
  const double d = (x - centre) / sigma;
  return std::exp(-0.5 * d * d);
}

}  // namespace

std::uint16_t SensorModel::Respond(std::size_t index, double photons) const {
  const double max_value = static_cast<double>((1u << bit_depth) - 1);
  const double y = std::floor(gain[index] * photons + offset[index] + 0.5);
  return static_cast<std::uint16_t>(std::clamp(y, 0.0, max_value));
}

bool SensorModel::IsDefect(std::size_t index) const {
  const auto it = std::lower_bound(defects.begin(), defects.end(), index,
                                   [](const Defect& d, std::size_t i) { return d.index < i; });
  return it != defects.end() && it->index == index;
}

SensorModel MakeIdealSensor(std::size_t width, std::size_t height, BayerPattern pattern,
                            int bit_depth) {
  SensorModel model;
  model.width = width;
  model.height = height;
  model.pattern = pattern;
  model.bit_depth = bit_depth;
  model.gain.assign(width * height, 1.0);
  model.offset.assign(width * height, 0.0);
  return model;
}

SensorModel MakeVignettedSensor(const VignettedSensorOptions& options) {
  if (options.width == 0 || options.height == 0) {
    Fail(ErrorCategory::kValidation, "sensor must have at least one pixel");
  }
  if (!(options.vignette_min > 0 && options.vignette_min <= 1) || options.gain_jitter < 0 ||
      options.offset_max < 0) {
    Fail(ErrorCategory::kValidation, "invalid vignetted sensor options");
  }
  SensorModel model = MakeIdealSensor(options.width, options.height, options.pattern,
                                      options.bit_depth);
  model.seed = options.seed;
  Rng rng(options.seed);
  const double cx = 0.5 * static_cast<double>(options.width - 1);
  const double cy = 0.5 * static_cast<double>(options.height - 1);
  const double r2_max = cx * cx + cy * cy;
  for (std::size_t y = 0; y < options.height; ++y) {
    for (std::size_t x = 0; x < options.width; ++x) {
      const std::size_t i = y * options.width + x;
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double r2 = r2_max > 0 ? (dx * dx + dy * dy) / r2_max : 0.0;
      const double vignette = 1.0 - (1.0 - options.vignette_min) * r2;
      const double jitter = 1.0 + options.gain_jitter * (2.0 * rng.Uniform() - 1.0);
      model.gain[i] = std::min(1.0, vignette * jitter);
      model.offset[i] = options.offset_max * rng.Uniform();
    }
  }
  const std::size_t pixels = options.width * options.height;
  const std::size_t defect_count = std::min(options.defect_count, pixels);
  std::vector<bool> taken(pixels, false);
  const std::uint16_t max_value = static_cast<std::uint16_t>((1u << options.bit_depth) - 1);
  while (model.defects.size() < defect_count) {
    const std::size_t index = static_cast<std::size_t>(rng.Next() % pixels);
    if (taken[index]) continue;
    taken[index] = true;
    // Alternate hot and dead pixels.
    model.defects.push_back({index, model.defects.size() % 2 == 0 ? max_value : std::uint16_t{0}});
  }
  std::sort(model.defects.begin(), model.defects.end(),
            [](const Defect& a, const Defect& b) { return a.index < b.index; });
  return model;
}

RawImage RenderScene(const SensorModel& model, std::span<const double> photons,
                     Executor& executor) {
  const std::size_t pixels = model.width * model.height;
  if (photons.size() != pixels) {
    Fail(ErrorCategory::kValidation, "scene size does not match the sensor");
  }
  RawImage image(model.width, model.height, model.bit_depth, model.pattern);
  auto samples = image.samples();
  executor.ForRange(0, model.height, kRowGrain, [&](std::size_t y0, std::size_t y1) {
    for (std::size_t i = y0 * model.width; i < y1 * model.width; ++i) {
      if (photons[i] < 0) Fail(ErrorCategory::kValidation, "negative photon input");
      samples[i] = model.Respond(i, photons[i]);
    }
  });
  for (const auto& d : model.defects) samples[d.index] = d.value;
  return image;
}

std::vector<double> MakeUniformScene(const SensorModel& model,
                                     const std::array<double, kChannelCount>& photons) {
  std::vector<double> scene(model.width * model.height);
  for (std::size_t y = 0; y < model.height; ++y) {
    for (std::size_t x = 0; x < model.width; ++x) {
      scene[y * model.width + x] =
          photons[static_cast<int>(ChannelAt(model.pattern, x, y))];
    }
  }
  return scene;
}

RawImage RenderLevel(const SensorModel& model, const std::array<double, kChannelCount>& photons,
                     Executor& executor) {
  return RenderScene(model, MakeUniformScene(model, photons), executor);
}

std::vector<RawImage> RenderStack(const SensorModel& model, const spectra::PhotonTable& table,
                                  Executor& executor) {
  table.Validate();
  std::vector<RawImage> stack(spectra::kLevelCount);
  executor.ForRange(0, stack.size(), 1, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) {
      std::array<double, kChannelCount> photons{};
      for (int c = 0; c < kChannelCount; ++c) photons[c] = table.counts[c][k];
      stack[k] = RenderLevel(model, photons);
    }
  });
  return stack;
}

std::vector<RawImage> RenderFocusStack(const SensorModel& model, std::span<const double> photons,
                                       std::size_t depth, Executor& executor) {
  if (depth == 0) Fail(ErrorCategory::kValidation, "focus stack depth must be positive");
  if (photons.size() != model.width * model.height) {
    Fail(ErrorCategory::kValidation, "scene size does not match the sensor");
  }
  const std::size_t centre = depth / 2;
  std::vector<RawImage> stack(depth);
  std::vector<double> blurred(photons.size());
  const auto w = static_cast<long long>(model.width);
  const auto h = static_cast<long long>(model.height);
  for (std::size_t f = 0; f < depth; ++f) {
    const long long radius = static_cast<long long>(f > centre ? f - centre : centre - f);
    if (radius == 0) {
      stack[f] = RenderScene(model, photons, executor);
      continue;
    }
    executor.ForRange(0, model.height, 16, [&](std::size_t y0, std::size_t y1) {
      for (long long y = static_cast<long long>(y0); y < static_cast<long long>(y1); ++y) {
        for (long long x = 0; x < w; ++x) {
          double sum = 0;
          double n = 0;
          for (long long j = -radius; j <= radius; ++j) {
            for (long long i = -radius; i <= radius; ++i) {
              const long long nx = x + 2 * i;
              const long long ny = y + 2 * j;
              if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
              sum += photons[static_cast<std::size_t>(ny * w + nx)];
              n += 1;
            }
          }
          blurred[static_cast<std::size_t>(y * w + x)] = sum / n;
        }
      }
    });
    stack[f] = RenderScene(model, blurred, executor);
  }
  return stack;
}

SyntheticOptics MakeSyntheticOptics(double top_photons) {
  // Filter transmittances for L1..L7; L7 is the unfiltered lamp.
  constexpr std::array<double, 7> kTransmittance = {0.06, 0.12, 0.22, 0.36, 0.55, 0.78, 1.0};
  constexpr double kLo = 380.0;
  constexpr double kHi = 720.0;

  std::vector<spectra::Sample> lamp;
  for (double w = kLo; w <= kHi; w += 1.0) {
    // Warm LED-like lamp: blue pump plus broad phosphor band.
    lamp.push_back({w, 0.6 * Gaussian(w, 450, 12) + Gaussian(w, 570, 60)});
  }
  auto qe_curve = [&](double centre, double sigma, double peak, double step) {
    std::vector<spectra::Sample> s;
    for (double w = kLo; w <= kHi; w += step) {
      s.push_back({w, std::min(1.0, peak * Gaussian(w, centre, sigma) + 0.02)});
    }
    return spectra::Spectrum(std::move(s));
  };
  spectra::QeSet qe{{qe_curve(610, 45, 0.42, 2.0), qe_curve(535, 40, 0.50, 2.0),
                     qe_curve(535, 40, 0.49, 2.0), qe_curve(460, 35, 0.45, 2.0)}};

  // Brightest channel at L7 with unit lamp amplitude.
  const spectra::Spectrum unit_lamp(lamp);
  double top = 0;
  for (const auto& channel : qe.channels) {
    top = std::max(top, spectra::IntegrateTrapezoid(spectra::Multiply(unit_lamp, channel)));
  }
  const double scale = top_photons / top;

  SyntheticOptics optics{{}, qe};
  for (const double t : kTransmittance) {
    std::vector<spectra::Sample> level = lamp;
    for (auto& s : level) {
      // Slightly non-neutral gray coating, as real ND filters are.
      s.value *= scale * t * (1.0 + 0.05 * (1.0 - t) * (s.wavelength_nm - 550.0) / 170.0);
    }
    optics.levels.emplace_back(std::move(level));
  }
  return optics;
}

std::vector<double> MakeTexturedScene(const SensorModel& model,
                                      const spectra::PhotonTable& table, std::uint64_t seed,
                                      double low, double high) {
  Rng rng(seed);
  // A few random plane waves give a smooth field in [0, 1].
  struct Wave {
    double kx, ky, phase, weight;
  };
  std::array<Wave, 6> waves{};
  double total_weight = 0;
  for (auto& wave : waves) {
    const double angle = rng.Uniform(0, 2 * std::numbers::pi);
    const double freq = rng.Uniform(1.0, 6.0) * 2 * std::numbers::pi /
                        static_cast<double>(std::max(model.width, model.height));
    wave = {freq * std::cos(angle), freq * std::sin(angle),
            rng.Uniform(0, 2 * std::numbers::pi), rng.Uniform(0.5, 1.0)};
    total_weight += wave.weight;
  }
  std::vector<double> scene(model.width * model.height);
  for (std::size_t y = 0; y < model.height; ++y) {
    for (std::size_t x = 0; x < model.width; ++x) {
      double v = 0;
      for (const auto& wave : waves) {
        v += wave.weight * std::sin(wave.kx * static_cast<double>(x) +
                                    wave.ky * static_cast<double>(y) + wave.phase);
      }
      const double unit = 0.5 + 0.5 * v / total_weight;
      const double top =
          table.counts[static_cast<int>(ChannelAt(model.pattern, x, y))][spectra::kLevelCount - 1];
      scene[y * model.width + x] = top * (low + (high - low) * unit);
    }
  }
  return scene;
}

std::string FormatGroundTruth(const SensorModel& model, const spectra::PhotonTable& table) {
  auto [gmin, gmax] = std::minmax_element(model.gain.begin(), model.gain.end());
  auto [omin, omax] = std::minmax_element(model.offset.begin(), model.offset.end());
  std::string out;
  out += "width=" + std::to_string(model.width) + "\n";
  out += "height=" + std::to_string(model.height) + "\n";
  out += "bayer=" + std::string(PatternName(model.pattern)) + "\n";
  out += "bit_depth=" + std::to_string(model.bit_depth) + "\n";
  out += "seed=" + std::to_string(model.seed) + "\n";
  out += "gain_min=" + Num(*gmin) + "\n";
  out += "gain_max=" + Num(*gmax) + "\n";
  out += "offset_min=" + Num(*omin) + "\n";
  out += "offset_max=" + Num(*omax) + "\n";
  out += "defects=" + std::to_string(model.defects.size()) + "\n";
  for (const auto& d : model.defects) {
    out += "defect=" + std::to_string(d.index % model.width) + "," +
           std::to_string(d.index / model.width) + "," + std::to_string(d.value) + "\n";
  }
  out += "response=clamp(round(gain*photons+offset),0," +
         std::to_string((1u << model.bit_depth) - 1) + ")\n";
  for (int c = 0; c < kChannelCount; ++c) {
    out += "photons_" + std::string(ChannelName(kAllChannels[c])) + "=";
    for (int k = 0; k < spectra::kLevelCount; ++k) {
      out += (k ? "," : "") + Num(table.counts[c][k]);
    }
    out += "\n";
  }
  return out;
}

}  // namespace radcal::synth
