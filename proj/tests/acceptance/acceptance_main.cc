// Acceptance suite: one PASS/FAIL line per criterion.
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "radcal/calibration.h"
#include "radcal/correction.h"
#include "radcal/error.h"
#include "radcal/image.h"
#include "radcal/image_io.h"
#include "radcal/lil.h"
#include "radcal/parallel.h"
#include "radcal/pie.h"
#include "radcal/spectra.h"
#include "radcal/synth.h"

#ifndef RADCAL_CLI_PATH
#define RADCAL_CLI_PATH "radcal"
#endif

namespace fs = std::filesystem;

namespace radcal::acceptance {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Format(const char* fmt, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, fmt, args...);
  return buffer;
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void Check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + ("failed: " + what);
    }
  }
  void Note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::uint64_t Fnv(const void* data, std::size_t bytes, std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

template <typename T>
std::uint64_t Fnv(const std::vector<T>& v, std::uint64_t h = 1469598103934665603ull) {
  return Fnv(v.data(), v.size() * sizeof(T), h);
}

std::size_t Cores() { return std::max<std::size_t>(1, DefaultWorkerCount()); }

spectra::PhotonTable FixtureTable() {
  const auto optics = synth::MakeSyntheticOptics();
  return spectra::PhotonCounts(optics.levels, optics.qe);
}

calib::CalibrationMap Calibrate(const synth::SensorModel& model,
                                const spectra::PhotonTable& table, Executor& executor) {
  calib::CalibrationBuilder builder(model.width, model.height, model.pattern);
  for (int k = 0; k < calib::kLevelCount; ++k) {
    std::array<double, kChannelCount> photons{};
    for (int c = 0; c < kChannelCount; ++c) photons[c] = table.counts[c][k];
    builder.SetLevel(k, synth::RenderLevel(model, photons, executor), executor);
  }
  return std::move(builder).Finish(table, {}, executor);
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("radcal_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// ------------------------------------------------------------------ 1

// Shared 1024x1024 vignetted fixture, used by criteria 1 and 6.
struct FlatFixture {
  synth::SensorModel model;
  spectra::PhotonTable table;
  std::unique_ptr<calib::CalibrationMap> map;
};

FlatFixture& SharedFlatFixture() {
  static FlatFixture fixture = [] {
    FlatFixture f;
    synth::VignettedSensorOptions options;  // 1024x1024, gain 0.7..1 +/-5%, offsets 0..300
    f.model = synth::MakeVignettedSensor(options);
    f.table = FixtureTable();
    return f;
  }();
  return fixture;
}

Outcome FlatFieldRecovery() {
  Outcome o;
  auto& f = SharedFlatFixture();
  ThreadPool pool(Cores());
  std::vector<RawImage> stack = synth::RenderStack(f.model, f.table, pool);
  std::array<double, kChannelCount> photons{};
  for (int c = 0; c < kChannelCount; ++c) photons[c] = 0.5 * f.table.counts[c][7];
  const RawImage scene = synth::RenderLevel(f.model, photons, pool);

  const auto start = Clock::now();
  calib::CalibrationBuilder builder(f.model.width, f.model.height, f.model.pattern);
  for (int k = 0; k < calib::kLevelCount; ++k) builder.SetLevel(k, stack[k], pool);
  f.map = std::make_unique<calib::CalibrationMap>(std::move(builder).Finish(f.table, {}, pool));
  const correction::Corrector corrector(*f.map, pool);
  const auto out = corrector.Correct(scene, pool);
  const double elapsed = Seconds(start);

  double worst = 0;
  std::string rsd;
  for (const Channel c : kAllChannels) {
    double sum = 0;
    double sq = 0;
    double n = 0;
    for (std::size_t y = 0; y < out.height; ++y)
      for (std::size_t x = 0; x < out.width; ++x) {
        if (ChannelAt(out.pattern, x, y) != c) continue;
        const double v = out.values[y * out.width + x];
        sum += v;
        sq += v * v;
        n += 1;
      }
    const double mean = sum / n;
    const double sd = std::sqrt(std::max(0.0, sq / n - mean * mean));
    const double r = sd / mean;
    worst = std::max(worst, r);
    rsd += Format("%s=%.5f%% ", std::string(ChannelName(c)).c_str(), 100 * r);
  }
  o.Check(worst < 1e-3, "relative standard deviation < 0.1%");
  o.Check(elapsed < 10.0, "calibrate+correct < 10 s");
  o.Note("1024x1024, RSD " + rsd + Format("runtime %.2f s on %zu worker(s)", elapsed, Cores()));
  return o;
}

// ------------------------------------------------------------------ 2

Outcome KnotExactness() {
  Outcome o;
  const auto table = FixtureTable();
  std::size_t checked = 0;
  std::size_t defects = 0;
  double worst = 0;
  for (const std::size_t half_window : {0u, 1u}) {
    synth::VignettedSensorOptions options;
    options.width = 256;
    options.height = 256;
    options.defect_count = 64;
    options.seed = 7 + half_window;
    const auto model = synth::MakeVignettedSensor(options);
    const auto stack = synth::RenderStack(model, table);
    std::vector<calib::MeanImage> means;
    for (const auto& level : stack) {
      // Neighbouring frames of a stack differ slightly, so window means are
      // fractional.
      std::vector<RawImage> frames(2 * half_window + 1, level);
      for (std::size_t f = 0; f < frames.size(); f += 2) {
        for (auto& v : frames[f].samples()) {
          if (v < 4095 && !model.IsDefect(&v - frames[f].samples().data())) ++v;
        }
      }
      means.push_back(calib::MeanLevelImage(frames, half_window, half_window));
    }
    const auto map = calib::BuildCalibration(means, table, model.pattern);
    defects += map.defect_count();
    const correction::Corrector corrector(map);
    for (int k = 0; k < calib::kLevelCount; ++k) {
      const auto out = corrector.Correct(means[k]);
      for (std::size_t y = 0; y < 256; ++y)
        for (std::size_t x = 0; x < 256; ++x) {
          const std::size_t i = y * 256 + x;
          if (map.defective(i)) continue;
          const double expected = table.at(ChannelAt(model.pattern, x, y), k);
          const double err = std::abs(out.values[i] - expected) / std::max(1.0, std::abs(expected));
          worst = std::max(worst, err);
          ++checked;
        }
    }
  }
  o.Check(worst <= 1e-9, "all knots within 1e-9 relative");
  o.Check(defects == 128, "fixture defects flagged");
  o.Note(Format("%zu pixel-level pairs on 256x256 (windows of 1 and 3 frames), max rel err %.3g, "
                "%zu defective skipped",
                checked, worst, defects));
  return o;
}

// ------------------------------------------------------------------ 3

double NaiveEntropy(const std::vector<std::uint64_t>& counts, double alpha) {
  double total = 0;
  for (const auto n : counts) total += static_cast<double>(n);
  double sum = 0;
  for (const auto n : counts) {
    if (n > 0) sum += std::pow(static_cast<double>(n) / total, alpha);
  }
  return std::log2(sum) / (1 - alpha);
}

double NaivePie(const std::vector<std::uint64_t>& counts, double alpha, pie::Weighting w) {
  const double full = NaiveEntropy(counts, alpha);
  double total = 0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] == 0) continue;
    std::vector<std::uint64_t> reduced = counts;
    --reduced[j];
    const double gain = full - NaiveEntropy(reduced, alpha);
    total += w == pie::Weighting::kDistinct ? gain : static_cast<double>(counts[j]) * gain;
  }
  return total;
}

Outcome PieOracle() {
  Outcome o;
  synth::Rng rng(2024);
  double worst = 0;
  std::size_t compared = 0;
  for (int frame = 0; frame < 200; ++frame) {
    // Alternate full-range noise with narrow ranges so levels repeat.
    const std::uint32_t span = frame % 3 == 0 ? 4096 : (frame % 3 == 1 ? 16 : 3);
    std::vector<std::uint16_t> samples(256);
    for (auto& v : samples) v = static_cast<std::uint16_t>(rng.Next() % span);
    const RawImage image(16, 16, 12, static_cast<BayerPattern>(frame % 4), samples);
    for (const Channel c : kAllChannels) {
      const auto h = pie::Histogram(image, c);
      for (const auto w : {pie::Weighting::kDistinct, pie::Weighting::kOccurrence}) {
        const double streaming = pie::PointInformationEntropy(h, {2.0}, w);
        const double naive = NaivePie(h.counts, 2.0, w);
        worst = std::max(worst, std::abs(streaming - naive));
        ++compared;
      }
    }
  }
  o.Check(worst < 1e-12, "streaming vs naive |delta| < 1e-12");
  bool exact = true;
  for (std::size_t k = 2; k <= 4096; k += 2) {
    std::vector<std::uint64_t> counts(k, 1);
    exact = exact && pie::RenyiEntropy(pie::ChannelHistogram::FromCounts(counts)) ==
                         std::log2(static_cast<double>(k));
  }
  o.Check(exact, "uniform histogram entropy == log2 k");
  o.Note(Format("%zu channel/weighting pairs over 200 frames, max |delta| %.3g bits; "
                "log2 k exact for k=2,4,...,4096",
                compared, worst));
  return o;
}

// ------------------------------------------------------------------ 4

Outcome Trapezoid() {
  Outcome o;
  const double triangle =
      spectra::IntegrateTrapezoid(spectra::Spectrum({{400, 0}, {500, 2}, {600, 0}}));
  o.Check(triangle == 200.0, "triangle integrates to 200.0");

  synth::Rng rng(99);
  double worst = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.Next() % 400;
    std::vector<spectra::Sample> f;
    std::vector<spectra::Sample> g;
    std::vector<spectra::Sample> mix;
    const double a = rng.Uniform(0.1, 10);
    const double b = rng.Uniform(0.1, 10);
    double wl = 380;
    for (std::size_t i = 0; i < n; ++i) {
      wl += rng.Uniform(0.1, 5);
      const double fv = rng.Uniform(0, 3);
      const double gv = rng.Uniform(0, 3);
      f.push_back({wl, fv});
      g.push_back({wl, gv});
      mix.push_back({wl, a * fv + b * gv});
    }
    const double lhs = spectra::IntegrateTrapezoid(spectra::Spectrum(mix));
    const double rhs = a * spectra::IntegrateTrapezoid(spectra::Spectrum(f)) +
                       b * spectra::IntegrateTrapezoid(spectra::Spectrum(g));
    worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
  }
  o.Check(worst <= 1e-12, "linearity within 1e-12 relative");

  const auto table = FixtureTable();
  bool monotone = true;
  for (int c = 0; c < kChannelCount; ++c) {
    monotone = monotone && table.counts[c][0] == 0.0;
    for (int k = 1; k < calib::kLevelCount; ++k) {
      monotone = monotone && table.counts[c][k] >= table.counts[c][k - 1];
    }
  }
  o.Check(monotone, "photon table monotone with L0 = 0");
  o.Note(Format("triangle=%.17g, linearity max rel err %.3g over 500 random spectra, "
                "table L7 G1=%.1f",
                triangle, worst, table.counts[1][7]));
  return o;
}

// ------------------------------------------------------------------ 5

lil::Image RandomImage(synth::Rng& rng, std::size_t w, std::size_t h, int depth,
                       std::size_t palette_size, bool mosaic) {
  lil::Image image;
  image.width = w;
  image.height = h;
  image.bit_depth = depth;
  if (mosaic) image.bayer = static_cast<BayerPattern>(rng.Next() % 4);
  std::vector<std::uint16_t> palette;
  for (std::size_t i = 0; i < palette_size; ++i) {
    palette.push_back(static_cast<std::uint16_t>(rng.Next() >> (64 - depth)));
  }
  image.samples.resize(w * h);
  for (auto& v : image.samples) {
    v = palette.empty() ? static_cast<std::uint16_t>(rng.Next() >> (64 - depth))
                        : palette[rng.Next() % palette.size()];
  }
  return image;
}

std::size_t Group(const lil::Image& image, std::size_t i, lil::Mode mode) {
  if (mode == lil::Mode::kJoint) return 0;
  if (image.bayer) {
    return static_cast<std::size_t>(ChannelAt(*image.bayer, i % image.width, i / image.width));
  }
  return i % static_cast<std::size_t>(image.channels);
}

Outcome LilProperties() {
  Outcome o;
  lil::Image worked;
  worked.width = 4;
  worked.height = 1;
  worked.bit_depth = 12;
  worked.samples = {0, 5, 7, 4095};
  const auto worked_out = lil::Convert(std::span(&worked, 1), {})[0];
  o.Check(worked_out.samples == std::vector<std::uint16_t>{0, 85, 170, 255},
          "[0,5,7,4095] -> [0,85,170,255]");

  synth::Rng rng(5);
  bool order = true;
  bool bijective = true;
  bool consistent = true;
  bool idempotent = true;
  bool oracle = true;
  std::size_t series_count = 0;
  for (const int depth : {12, 14}) {
    for (int trial = 0; trial < 20; ++trial) {
      const bool mosaic = trial % 2 == 0;
      const std::size_t palette = trial % 4 < 2 ? 1 + rng.Next() % 256 : 0;
      const lil::Mode mode = trial % 3 == 0 ? lil::Mode::kJoint : lil::Mode::kPerChannel;
      std::vector<lil::Image> series;
      for (int f = 0; f < 3; ++f) series.push_back(RandomImage(rng, 48, 32, depth, palette, mosaic));
      for (int f = 1; f < 3; ++f) series[f].bayer = series[0].bayer;
      const auto out = lil::Convert(series, {mode, lil::Scope::kSeries, std::nullopt});
      ++series_count;

      // Brute force: distinct levels per group across the series, ranked.
      std::map<std::size_t, std::set<std::uint16_t>> levels;
      for (const auto& im : series)
        for (std::size_t i = 0; i < im.samples.size(); ++i) levels[Group(im, i, mode)].insert(im.samples[i]);
      std::map<std::pair<std::size_t, std::uint16_t>, std::uint16_t> seen;
      std::map<std::pair<std::size_t, std::uint16_t>, std::uint16_t> reverse;
      for (std::size_t f = 0; f < series.size(); ++f) {
        const auto& in = series[f];
        for (std::size_t i = 0; i < in.samples.size(); ++i) {
          const std::size_t g = Group(in, i, mode);
          const auto& set = levels[g];
          const auto rank = static_cast<std::size_t>(std::distance(set.begin(), set.find(in.samples[i])));
          const std::size_t count = set.size();
          const std::uint16_t expected =
              count == 1 ? 0
                         : static_cast<std::uint16_t>(std::floor(255.0 * static_cast<double>(rank) /
                                                                     static_cast<double>(count - 1) +
                                                                 0.5));
          const std::uint16_t code = out[f].samples[i];
          oracle = oracle && code == expected;
          auto [it, inserted] = seen.emplace(std::pair(g, in.samples[i]), code);
          consistent = consistent && it->second == code;
          if (count <= 256) {
            auto [rit, rinserted] = reverse.emplace(std::pair(g, code), in.samples[i]);
            bijective = bijective && rit->second == in.samples[i];
          }
        }
      }
      // Order: within a group, a < b implies code(a) <= code(b).
      for (const auto& [key, code] : seen) {
        auto next = seen.upper_bound(key);
        if (next != seen.end() && next->first.first == key.first) order = order && code <= next->second;
      }
      const auto again = lil::Convert(out, {mode, lil::Scope::kSeries, std::nullopt});
      idempotent = idempotent && again == out;
    }
  }
  o.Check(oracle, "codes match brute-force rank oracle");
  o.Check(order, "order preservation");
  o.Check(bijective, "bijective at <= 256 levels");
  o.Check(consistent, "series consistency");
  o.Check(idempotent, "idempotence");
  o.Note(Format("worked mapping ok; %zu random 12/14-bit series checked against the oracle",
                series_count));
  return o;
}

// ------------------------------------------------------------------ 6

Outcome HistogramWidening() {
  Outcome o;
  auto& f = SharedFlatFixture();
  ThreadPool pool(Cores());
  if (!f.map) f.map = std::make_unique<calib::CalibrationMap>(Calibrate(f.model, f.table, pool));
  const auto scene = synth::MakeTexturedScene(f.model, f.table, 11);
  const RawImage raw = synth::RenderScene(f.model, scene, pool);
  const correction::Corrector corrector(*f.map, pool);
  const auto photons = corrector.Correct(raw, pool);
  const auto codes = correction::Quantize14(photons, correction::DefaultFullScale(f.table), pool);
  const std::size_t raw_levels = OccupiedLevels(raw.samples());
  const std::size_t corrected_levels = OccupiedLevels(codes);
  o.Check(corrected_levels > raw_levels, "corrected occupied levels > raw");
  o.Note(Format("occupied levels raw 12-bit %zu -> corrected 14-bit %zu", raw_levels,
                corrected_levels));
  return o;
}

// ------------------------------------------------------------------ 7

struct SeriesRun {
  std::uint64_t correct_hash = 1469598103934665603ull;
  std::uint64_t lil_hash = 1469598103934665603ull;
  double correct_seconds = 0;
  double lil_seconds = 0;
};

SeriesRun RunSeries(const calib::CalibrationMap& map, const std::vector<RawImage>& frames,
                    Executor& executor) {
  SeriesRun run;
  auto start = Clock::now();
  const correction::Corrector corrector(map, executor);
  std::vector<lil::Image> corrected;
  corrected.reserve(frames.size());
  for (const auto& frame : frames) {
    const auto photons = corrector.Correct(frame, executor);
    lil::Image image;
    image.width = photons.width;
    image.height = photons.height;
    image.bit_depth = 14;
    image.bayer = photons.pattern;
    image.samples = correction::Quantize14(photons, photons.full_scale, executor);
    run.correct_hash = Fnv(image.samples, run.correct_hash);
    corrected.push_back(std::move(image));
  }
  run.correct_seconds = Seconds(start);
  start = Clock::now();
  const auto out = lil::Convert(corrected, {lil::Mode::kPerChannel, lil::Scope::kSeries, std::nullopt},
                                executor);
  run.lil_seconds = Seconds(start);
  for (const auto& image : out) run.lil_hash = Fnv(image.samples, run.lil_hash);
  return run;
}

Outcome DeterminismAndScaling() {
  Outcome o;
  const auto table = FixtureTable();
  synth::VignettedSensorOptions options;
  options.defect_count = 200;
  options.seed = 3;
  const auto model = synth::MakeVignettedSensor(options);
  ThreadPool render_pool(Cores());
  const auto map = Calibrate(model, table, render_pool);
  std::vector<RawImage> frames;
  for (std::uint64_t i = 0; i < 100; ++i) {
    // A few distinct textures, each at a different exposure.
    const auto scene = synth::MakeTexturedScene(model, table, 1000 + i % 5, 0.02 + 0.005 * (i % 7),
                                                0.9 - 0.004 * (i % 11));
    frames.push_back(synth::RenderScene(model, scene, render_pool));
  }
  const std::size_t n = std::max<std::size_t>(4, Cores());
  SerialExecutor serial;
  ThreadPool pool(n);
  const SeriesRun one = RunSeries(map, frames, serial);
  const SeriesRun many = RunSeries(map, frames, pool);
  o.Check(one.correct_hash == many.correct_hash, "correct output identical at 1 and N workers");
  o.Check(one.lil_hash == many.lil_hash, "lil series output identical at 1 and N workers");
  const double correct_speedup = one.correct_seconds / many.correct_seconds;
  const double lil_speedup = one.lil_seconds / many.lil_seconds;
  std::string scaling = Format("speedup at %zu workers: correct %.2fx, lil %.2fx", n,
                               correct_speedup, lil_speedup);
  if (Cores() >= 4) {
    scaling += (correct_speedup >= 2 && lil_speedup >= 2) ? " (meets 2x soft target)"
                                                          : " (below 2x soft target)";
  } else {
    scaling += Format(" (soft target not gated: %zu core(s) available)", Cores());
  }
  o.Note(Format("100 frames 1024x1024, hashes %016llx/%016llx; ",
                static_cast<unsigned long long>(many.correct_hash),
                static_cast<unsigned long long>(many.lil_hash)) +
         scaling);
  return o;
}

// ------------------------------------------------------------------ 8 and 9

constexpr std::size_t kFullWidth = 4872;
constexpr std::size_t kFullHeight = 3248;

struct ChildResult {
  int exit_code = -1;
  double seconds = 0;
  long max_rss_kb = 0;
};

ChildResult RunChild(const std::vector<std::string>& args) {
  std::vector<char*> argv;
  for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  ChildResult result;
  const auto start = Clock::now();
  const pid_t pid = ::fork();
  if (pid == 0) {
    ::execv(argv[0], argv.data());
    std::_Exit(127);
  }
  if (pid < 0) return result;
  int status = 0;
  struct rusage usage {};
  ::wait4(pid, &status, 0, &usage);
  result.seconds = Seconds(start);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.max_rss_kb = usage.ru_maxrss;
  return result;
}

Outcome FullFrameCapacity(const TempDir& tmp) {
  Outcome o;
  const auto table = FixtureTable();
  ThreadPool pool(Cores());
  fs::path ncal = tmp.path() / "full.ncal";
  fs::path frame_path = tmp.path() / "full_frame.nraw";
  fs::path out_dir = tmp.path() / "full_out";
  RawImage frame;
  {
    synth::VignettedSensorOptions options;
    options.width = kFullWidth;
    options.height = kFullHeight;
    options.defect_count = 2000;
    options.seed = 8;
    const auto model = synth::MakeVignettedSensor(options);
    calib::SaveCalibration(Calibrate(model, table, pool), ncal);
    frame = synth::RenderScene(model, synth::MakeTexturedScene(model, table, 12), pool);
    io::WriteRaw(frame, frame_path);
  }
  const auto child =
      RunChild({RADCAL_CLI_PATH, "-q", "-j", std::to_string(Cores()), "correct", "-c", ncal.string(),
                frame_path.string(), "-o", out_dir.string()});
  o.Check(child.exit_code == 0, "correct exits 0");
  o.Check(child.seconds < 5.0, "full frame < 5 s");
  const double rss_mb = static_cast<double>(child.max_rss_kb) / 1024.0;
  o.Check(rss_mb < 2048.0, "peak memory < 2 GB");
  if (child.exit_code == 0) {
    // Output must match the in-process result.
    const auto map = calib::LoadCalibration(ncal);
    const auto photons = correction::CorrectImage(map, frame, pool);
    const auto expected = correction::Quantize14(photons, photons.full_scale, pool);
    const auto png = io::ReadPng16(out_dir / "full_frame.png");
    o.Check(png.samples == expected, "CLI output equals library result");
  }
  o.Note(Format("4872x3248 12-bit frame via CLI on %zu worker(s): %.2f s wall "
                "(incl. NCAL load and PNG write), peak RSS %.0f MB incl. calibration copy",
                Cores(), child.seconds, rss_mb));
  return o;
}

Outcome FormatRoundTrips(const TempDir& tmp) {
  Outcome o;
  synth::Rng rng(77);
  // NRAW.
  bool nraw = true;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t w = 1 + rng.Next() % 300;
    const std::size_t h = 1 + rng.Next() % 200;
    const int depth = 1 + static_cast<int>(rng.Next() % 16);
    std::vector<std::uint16_t> samples(w * h);
    for (auto& v : samples) v = static_cast<std::uint16_t>(rng.Next() >> (64 - depth));
    const RawImage image(w, h, depth, static_cast<BayerPattern>(trial % 4), samples);
    const fs::path p = tmp.path() / "rt.nraw";
    io::WriteRaw(image, p);
    nraw = nraw && io::ReadRaw(p) == image &&
           fs::file_size(p) == io::kNrawHeaderSize + 2 * w * h;
  }
  o.Check(nraw, "NRAW round trip");

  // PNG16.
  bool png = true;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t w = 1 + rng.Next() % 256;
    const std::size_t h = 1 + rng.Next() % 256;
    std::vector<std::uint16_t> samples(w * h);
    for (auto& v : samples) v = static_cast<std::uint16_t>(rng.Next() % 16384);
    const fs::path p = tmp.path() / "rt.png";
    io::WritePng16(w, h, samples, p);
    const auto back = io::ReadPng16(p);
    png = png && back.width == w && back.height == h && back.samples == samples;
  }
  o.Check(png, "16-bit PNG round trip");

  // NCAL, small random maps.
  bool ncal = true;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t w = 2 + rng.Next() % 60;
    const std::size_t h = 2 + rng.Next() % 60;
    std::vector<std::uint16_t> knots(w * h * calib::kLevelCount);
    std::vector<std::uint8_t> defects(w * h);
    for (std::size_t i = 0; i < w * h; ++i) {
      std::uint16_t v = static_cast<std::uint16_t>(rng.Next() % 512);
      for (int k = 0; k < calib::kLevelCount; ++k) {
        v = static_cast<std::uint16_t>(v + 1 + rng.Next() % 7000);
        knots[i * calib::kLevelCount + k] = v;
      }
      defects[i] = rng.Next() % 10 == 0;
    }
    spectra::PhotonTable table;
    for (auto& row : table.counts) {
      double acc = 0;
      for (int k = 1; k < calib::kLevelCount; ++k) row[k] = acc += rng.Uniform(0, 500);
    }
    const calib::CalibrationMap map(w, h, static_cast<BayerPattern>(trial % 4), table, knots,
                                    defects, {{"trial", std::to_string(trial)}, {"note", "x=y"}});
    const fs::path p = tmp.path() / "rt.ncal";
    calib::SaveCalibration(map, p);
    ncal = ncal && calib::LoadCalibration(p) == map;
  }
  o.Check(ncal, "NCAL round trip");

  // Full-frame map written by criterion 8.
  const fs::path full = tmp.path() / "full.ncal";
  bool size_ok = false;
  bool full_ok = false;
  std::size_t actual = 0;
  std::size_t formula = 0;
  if (fs::exists(full)) {
    const auto map = calib::LoadCalibration(full);
    std::size_t meta = 0;
    for (const auto& [k, v] : map.metadata()) meta += k.size() + v.size() + 2;
    actual = fs::file_size(full);
    formula = calib::NcalFileSize(kFullWidth, kFullHeight, meta);
    size_ok = actual == formula && formula == 274 + meta + kFullWidth * kFullHeight * 17 + 4;
    const fs::path again = tmp.path() / "full_again.ncal";
    calib::SaveCalibration(map, again);
    full_ok = calib::LoadCalibration(again) == map &&
              io::ReadFileBytes(again) == io::ReadFileBytes(full);
  }
  o.Check(size_ok, "4872x3248 NCAL size = header + W*H*17 + CRC");
  o.Check(full_ok, "4872x3248 NCAL round trip");
  o.Note(Format("20 NRAW, 10 PNG16, 10 NCAL random round trips; 4872x3248 NCAL %zu bytes "
                "(formula %zu)",
                actual, formula));
  return o;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int Main() {
  TempDir tmp;
  const std::vector<Criterion> criteria = {
      {1, "flat-field recovery", FlatFieldRecovery},
      {2, "knot exactness", KnotExactness},
      {3, "PIE oracle equivalence", PieOracle},
      {4, "trapezoid integration", Trapezoid},
      {5, "LIL properties", LilProperties},
      {6, "histogram widening", HistogramWidening},
      {7, "determinism and scaling", DeterminismAndScaling},
      {8, "full-frame capacity", [&] { return FullFrameCapacity(tmp); }},
      {9, "format round trips", [&] { return FormatRoundTrips(tmp); }},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome outcome;
    const auto start = Clock::now();
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    if (!outcome.pass) ++failures;
    std::printf("%s %d %s: %s [%.1f s]\n", outcome.pass ? "PASS" : "FAIL", c.id, c.name,
                outcome.detail.c_str(), Seconds(start));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace radcal::acceptance

int main() { return radcal::acceptance::Main(); }
