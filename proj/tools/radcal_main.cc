#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

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

namespace fs = std::filesystem;

namespace radcal::cli {
namespace {

struct GlobalOptions {
  std::size_t workers = DefaultWorkerCount();
  bool quiet = false;
};

struct PieOptions {
  double alpha = 2.0;
  std::string weighting = "distinct";
  std::string rule = "max";
  std::size_t manual_index = 0;
};

struct InspectArgs {
  std::string path;
};

struct PieArgs {
  std::vector<std::string> inputs;
  PieOptions pie;
  std::optional<double> z_start;
  std::optional<double> z_step;
  std::string output;
};

struct CalibrateArgs {
  std::vector<std::string> levels;
  std::vector<std::string> spectra;
  std::vector<std::string> qe;
  std::string qe_table;
  std::string photon_table;
  PieOptions pie;
  std::size_t half_window = 0;
  std::string output;
  std::string report;
};

struct CorrectArgs {
  std::string calibration;
  std::vector<std::string> inputs;
  std::string output_dir;
  std::optional<double> full_scale;
  int png_level = 1;
};

struct LilArgs {
  std::vector<std::string> inputs;
  std::string mode = "per-channel";
  std::string scope = "single";
  std::string bayer;
  std::string crop;
  bool planes = false;
  std::string output_dir;
  std::string report;
  int png_level = 6;
};

struct SynthArgs {
  std::string output_dir;
  synth::VignettedSensorOptions sensor;
  std::string bayer = "RGGB";
  double top_photons = 3600.0;
  std::size_t focus_depth = 1;
  std::size_t scene_frames = 1;
  bool uniform = false;
};

using Clock = std::chrono::steady_clock;

class Log {
 public:
  explicit Log(bool quiet) : quiet_(quiet), start_(Clock::now()) {}
  void operator()(const std::string& message) const {
    if (quiet_) return;
    const double t = std::chrono::duration<double>(Clock::now() - start_).count();
    std::fprintf(stderr, "[radcal %8.3fs] %s\n", t, message.c_str());
  }

 private:
  bool quiet_;
  Clock::time_point start_;
};

std::string Lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool HasExtension(const fs::path& p, const std::vector<std::string>& extensions) {
  const std::string ext = Lower(p.extension().string());
  return std::find(extensions.begin(), extensions.end(), ext) != extensions.end();
}

void RequireExists(const std::string& path) {
  if (!fs::exists(path)) Fail(ErrorCategory::kValidation, "path does not exist: " + path);
}

// Files named directly, plus matching files inside named directories
// (sorted by name).
std::vector<fs::path> ListInputs(const std::vector<std::string>& inputs,
                                 const std::vector<std::string>& extensions) {
  std::vector<fs::path> files;
  for (const auto& input : inputs) {
    RequireExists(input);
    if (fs::is_directory(input)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(input)) {
        if (entry.is_regular_file() && HasExtension(entry.path(), extensions)) {
          found.push_back(entry.path());
        }
      }
      std::sort(found.begin(), found.end());
      if (found.empty()) Fail(ErrorCategory::kValidation, "no input images in " + input);
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.emplace_back(input);
    }
  }
  if (files.empty()) Fail(ErrorCategory::kUsage, "no inputs given");
  return files;
}

void WriteText(const fs::path& path, const std::string& text) {
  io::WriteAtomically(path, [&](const fs::path& tmp) {
    io::WriteFileBytes(tmp, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                      text.size()));
  });
}

void EnsureDirectory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    Fail(ErrorCategory::kIo, "cannot create directory " + dir.string());
  }
}

std::string Num(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", v);
  return buffer;
}

std::string Fixed(double v, int digits) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", digits, v);
  return buffer;
}

pie::Weighting ParseWeighting(const std::string& s) {
  if (s == "distinct") return pie::Weighting::kDistinct;
  if (s == "occurrence") return pie::Weighting::kOccurrence;
  Fail(ErrorCategory::kUsage, "unknown weighting '" + s + "' (distinct|occurrence)");
}

pie::FocusSelection ParseSelection(const PieOptions& o) {
  pie::FocusSelection selection;
  selection.manual_index = o.manual_index;
  if (o.rule == "max") {
    selection.rule = pie::FocusRule::kMax;
  } else if (o.rule == "min") {
    selection.rule = pie::FocusRule::kMin;
  } else if (o.rule == "manual") {
    selection.rule = pie::FocusRule::kManual;
  } else {
    Fail(ErrorCategory::kUsage, "unknown focus rule '" + o.rule + "' (max|min|manual)");
  }
  return selection;
}

void AddPieOptions(CLI::App* cmd, PieOptions& o) {
  cmd->add_option("--alpha", o.alpha, "Renyi order (> 0, != 1)")->capture_default_str();
  cmd->add_option("--weighting", o.weighting, "distinct|occurrence")->capture_default_str();
  cmd->add_option("--rule", o.rule, "focus rule: max|min|manual")->capture_default_str();
  cmd->add_option("--manual-index", o.manual_index, "frame index for --rule manual");
}

// PIE of every frame, reading one frame at a time.
pie::FocusProfile StreamFocusProfile(const std::vector<fs::path>& frames, const PieOptions& o,
                                     Executor& executor) {
  const pie::RenyiParams params{o.alpha};
  params.Validate();
  const auto weighting = ParseWeighting(o.weighting);
  pie::FocusProfile profile;
  for (const auto& path : frames) {
    const RawImage frame = io::ReadRaw(path);
    const auto one = pie::ComputeFocusProfile(std::span(&frame, 1), params, weighting, executor);
    profile.frames.push_back(one.frames[0]);
  }
  return profile;
}

// ---------------------------------------------------------------- inspect

int RunInspect(const InspectArgs& args) {
  RequireExists(args.path);
  const auto bytes = io::ReadFileBytes(args.path);
  auto starts = [&](const char* magic) {
    return bytes.size() >= 4 && std::equal(magic, magic + 4, bytes.begin());
  };
  std::ostringstream out;
  if (starts("NRAW")) {
    const RawImage raw = io::DecodeRaw(bytes);
    const auto summary = lil::Summarize(lil::FromRaw(raw), lil::Mode::kPerChannel);
    out << "format=NRAW\nwidth=" << raw.width() << "\nheight=" << raw.height()
        << "\nbit_depth=" << raw.bit_depth() << "\nbayer=" << PatternName(raw.pattern())
        << " (" << static_cast<int>(raw.pattern()) << ")\n"
        << "occupied_levels=" << OccupiedLevels(raw.samples()) << "\n";
    for (const auto& g : summary) {
      out << "occupied_" << g.name << "=" << g.occupied << " min=" << g.min_level
          << " max=" << g.max_level << "\n";
    }
  } else if (starts("NCAL")) {
    const auto map = calib::DecodeCalibration(bytes);
    out << "format=NCAL\nwidth=" << map.width() << "\nheight=" << map.height()
        << "\nbayer=" << PatternName(map.pattern()) << " ("
        << static_cast<int>(map.pattern()) << ")\n"
        << "defective_pixels=" << map.defect_count() << "\n"
        << "defect_fraction=" << Num(map.defect_fraction()) << "\n"
        << spectra::FormatPhotonTable(map.photon_table());
    for (const auto& [key, value] : map.metadata()) out << "meta." << key << "=" << value << "\n";
  } else if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P') {
    const auto png = io::ReadPng(args.path);
    out << "format=PNG\nwidth=" << png.width << "\nheight=" << png.height
        << "\nchannels=" << png.channels << "\ncontainer_bits=" << png.container_bits << "\n";
    lil::Image image;
    image.width = png.width;
    image.height = png.height;
    image.channels = png.channels;
    image.bit_depth = png.container_bits;
    image.samples = png.samples;
    out << "occupied_levels=" << OccupiedLevels(png.samples) << "\n";
    for (const auto& g : lil::Summarize(image, lil::Mode::kPerChannel)) {
      out << "occupied_" << g.name << "=" << g.occupied << " min=" << g.min_level
          << " max=" << g.max_level << "\n";
    }
  } else {
    Fail(ErrorCategory::kFormat, "unrecognised file type: " + args.path);
  }
  std::cout << out.str();
  return 0;
}

// ---------------------------------------------------------------- pie

int RunPie(const PieArgs& args, Executor& executor, const Log& log) {
  const auto frames = ListInputs(args.inputs, {".nraw"});
  const auto selection = ParseSelection(args.pie);
  log("pie: " + std::to_string(frames.size()) + " frames");
  const auto profile = StreamFocusProfile(frames, args.pie, executor);
  const std::size_t selected = pie::SelectFocus(profile, selection);
  const bool with_z = args.z_step.has_value();
  std::ostringstream out;
  out << "# alpha=" << Num(args.pie.alpha) << " weighting=" << args.pie.weighting
      << " rule=" << args.pie.rule << "\n";
  out << "frame_index" << (with_z ? "\tz_position" : "")
      << "\tPIE_R\tPIE_G1\tPIE_G2\tPIE_B\tfile\n";
  for (std::size_t i = 0; i < profile.frames.size(); ++i) {
    out << i;
    if (with_z) out << "\t" << Num(args.z_start.value_or(0.0) + *args.z_step * i);
    for (const double v : profile.frames[i]) out << "\t" << Fixed(v, 9);
    out << "\t" << frames[i].filename().string() << "\n";
  }
  out << "selected\t" << selected << "\n";
  if (args.output.empty()) {
    std::cout << out.str();
  } else {
    WriteText(args.output, out.str());
  }
  log("pie: selected frame " + std::to_string(selected));
  return 0;
}

// ---------------------------------------------------------------- calibrate

spectra::PhotonTable ResolvePhotonTable(const CalibrateArgs& args) {
  if (!args.photon_table.empty()) {
    RequireExists(args.photon_table);
    auto table = spectra::ParsePhotonTable(spectra::ReadTextFile(args.photon_table));
    table.Validate();
    return table;
  }
  if (args.spectra.size() != 7) {
    Fail(ErrorCategory::kUsage,
         "give --photon-table or seven --spectra files (levels L1..L7) with --qe or --qe-table");
  }
  std::vector<spectra::Spectrum> levels;
  for (const auto& path : args.spectra) {
    RequireExists(path);
    levels.push_back(spectra::LoadSpectrum(path));
  }
  std::optional<spectra::QeSet> qe;
  if (!args.qe_table.empty()) {
    RequireExists(args.qe_table);
    qe = spectra::LoadQeTable(args.qe_table);
  } else if (args.qe.size() == 4) {
    std::array<fs::path, 4> paths;
    for (int i = 0; i < 4; ++i) {
      RequireExists(args.qe[i]);
      paths[i] = args.qe[i];
    }
    qe = spectra::LoadQeSet(paths);
  } else {
    Fail(ErrorCategory::kUsage, "quantum efficiency needs --qe R G1 G2 B or --qe-table");
  }
  return spectra::PhotonCounts(levels, *qe);
}

int RunCalibrate(const CalibrateArgs& args, Executor& executor, const Log& log) {
  for (const auto& level : args.levels) RequireExists(level);
  const auto table = ResolvePhotonTable(args);
  const auto selection = ParseSelection(args.pie);

  std::unique_ptr<calib::CalibrationBuilder> builder;
  std::map<std::string, std::string> metadata = {
      {"alpha", Num(args.pie.alpha)},
      {"weighting", args.pie.weighting},
      {"rule", args.pie.rule},
      {"half_window", std::to_string(args.half_window)},
  };
  std::ostringstream report;
  report << "# level frames selected window\n";
  for (int level = 0; level < calib::kLevelCount; ++level) {
    const auto frames = ListInputs({args.levels[level]}, {".nraw"});
    std::size_t center = 0;
    if (frames.size() > 1) {
      const auto profile = StreamFocusProfile(frames, args.pie, executor);
      center = pie::SelectFocus(profile, selection);
    } else if (selection.rule == pie::FocusRule::kManual && selection.manual_index != 0) {
      Fail(ErrorCategory::kRange, "manual focus index outside single-frame stack");
    }
    const std::size_t hw = args.half_window;
    if (hw > center || center + hw >= frames.size()) {
      Fail(ErrorCategory::kRange, "L" + std::to_string(level) + ": averaging window [" +
                                      std::to_string(center) + " +/- " + std::to_string(hw) +
                                      "] outside stack of " + std::to_string(frames.size()) +
                                      " frames");
    }
    std::vector<RawImage> window;
    for (std::size_t f = center - hw; f <= center + hw; ++f) window.push_back(io::ReadRaw(frames[f]));
    if (!builder) {
      builder = std::make_unique<calib::CalibrationBuilder>(window[0].width(), window[0].height(),
                                                            window[0].pattern());
    }
    if (hw == 0) {
      builder->SetLevel(level, window[0], executor);
    } else {
      builder->SetLevel(level, calib::MeanLevelImage(window, hw, hw, executor), executor);
    }
    metadata["focus_L" + std::to_string(level)] = std::to_string(center);
    report << "L" << level << " " << frames.size() << " " << center << " "
           << frames[center].filename().string() << "\n";
    log("calibrate: L" + std::to_string(level) + " frame " + std::to_string(center) + " of " +
        std::to_string(frames.size()));
  }
  const auto map = std::move(*builder).Finish(table, metadata, executor);
  calib::SaveCalibration(map, args.output);
  std::ostringstream head;
  head << "calibration=" << args.output << "\n"
       << "width=" << map.width() << "\nheight=" << map.height()
       << "\nbayer=" << PatternName(map.pattern()) << "\n"
       << "defective_pixels=" << map.defect_count() << "\n"
       << "defect_fraction=" << Num(map.defect_fraction()) << "\n"
       << spectra::FormatPhotonTable(table);
  const std::string report_path = args.report.empty() ? args.output + ".txt" : args.report;
  WriteText(report_path, head.str() + report.str());
  log("calibrate: wrote " + args.output + " (" + std::to_string(map.defect_count()) +
      " defective pixels)");
  return 0;
}

// ---------------------------------------------------------------- correct

int RunCorrect(const CorrectArgs& args, Executor& executor, const Log& log) {
  RequireExists(args.calibration);
  const auto frames = ListInputs(args.inputs, {".nraw"});
  EnsureDirectory(args.output_dir);
  const auto map = calib::LoadCalibration(args.calibration);
  log("correct: loaded calibration " + std::to_string(map.width()) + "x" +
      std::to_string(map.height()));
  const double full_scale = args.full_scale.value_or(correction::DefaultFullScale(map.photon_table()));
  if (!(full_scale > 0)) Fail(ErrorCategory::kValidation, "full scale must be positive");
  const correction::Corrector corrector(map, executor);
  for (const auto& path : frames) {
    correction::CorrectionStats stats;
    std::vector<std::uint16_t> codes;
    std::size_t width = 0;
    std::size_t height = 0;
    {
      const RawImage raw = io::ReadRaw(path);
      const auto photons = corrector.Correct(raw, executor, &stats);
      codes = correction::Quantize14(photons, full_scale, executor);
      width = photons.width;
      height = photons.height;
    }
    const fs::path stem = fs::path(args.output_dir) / path.stem();
    io::WritePng16(width, height, codes, stem.string() + ".png", args.png_level);
    std::ostringstream meta;
    meta << "source=" << path.string() << "\n"
         << "calibration=" << args.calibration << "\n"
         << "width=" << width << "\nheight=" << height << "\n"
         << "bayer=" << PatternName(map.pattern()) << "\n"
         << "full_scale=" << Num(full_scale) << "\n"
         << "below_range=" << stats.below_range << "\n"
         << "above_range=" << stats.above_range << "\n"
         << "fallback_pixels=" << stats.fallback_pixels << "\n";
    WriteText(stem.string() + ".txt", meta.str());
    log("correct: " + path.filename().string() + " -> " + stem.filename().string() + ".png");
  }
  return 0;
}

// ---------------------------------------------------------------- lil

lil::Image LoadLilImage(const fs::path& path, const std::optional<BayerPattern>& bayer) {
  if (HasExtension(path, {".nraw"})) {
    lil::Image image = lil::FromRaw(io::ReadRaw(path));
    if (bayer) image.bayer = bayer;
    return image;
  }
  if (HasExtension(path, {".png"})) {
    const auto png = io::ReadPng(path);
    lil::Image image;
    image.width = png.width;
    image.height = png.height;
    image.channels = png.channels;
    image.bit_depth = png.container_bits;
    image.samples = png.samples;
    if (bayer) {
      if (png.channels != 1) {
        Fail(ErrorCategory::kValidation, "--bayer needs single-channel input: " + path.string());
      }
      image.bayer = bayer;
    }
    return image;
  }
  Fail(ErrorCategory::kFormat, "unsupported input (expected .nraw or .png): " + path.string());
}

void WriteLilImage(const lil::Image& image, const fs::path& path, int level) {
  io::PngImage png;
  png.width = image.width;
  png.height = image.height;
  png.channels = image.bayer ? 1 : image.channels;
  png.container_bits = 8;
  png.samples = image.samples;
  io::WritePng(png, path, level);
}

std::string SummaryLine(const std::vector<lil::GroupSummary>& groups) {
  std::string line;
  for (const auto& g : groups) {
    line += " " + g.name + "=" + std::to_string(g.occupied) + "[" +
            std::to_string(g.min_level) + "," + std::to_string(g.max_level) + "]";
  }
  return line;
}

int RunLil(const LilArgs& args, Executor& executor, const Log& log) {
  lil::Options options;
  options.mode = lil::ParseMode(args.mode);
  options.scope = lil::ParseScope(args.scope);
  if (!args.crop.empty()) options.crop = CropRect::Parse(args.crop);
  std::optional<BayerPattern> bayer;
  if (!args.bayer.empty()) bayer = ParsePattern(args.bayer);
  const auto files = ListInputs(args.inputs, {".nraw", ".png"});
  EnsureDirectory(args.output_dir);

  std::vector<lil::Image> images;
  for (const auto& f : files) images.push_back(LoadLilImage(f, bayer));
  log("lil: " + std::to_string(images.size()) + " images, mode " + args.mode + ", scope " +
      args.scope);
  const auto outputs = lil::Convert(images, options, executor);

  std::ostringstream report;
  report << "mode=" << args.mode << "\nscope=" << args.scope << "\nframes=" << files.size()
         << "\n";
  if (options.scope == lil::Scope::kSeries) {
    std::vector<lil::Image> cropped;
    if (options.crop) {
      for (const auto& im : images) cropped.push_back(lil::Crop(im, *options.crop));
    }
    const auto set = lil::CollectLevels(options.crop ? cropped : images, options.mode, executor);
    report << "series_occupied=";
    for (std::size_t g = 0; g < set.groups.size(); ++g) {
      report << (g ? "," : "") << set.groups[g].size();
    }
    report << "\n";
  }
  report << "# file: input groups occupied[min,max] -> output groups\n";
  for (std::size_t i = 0; i < files.size(); ++i) {
    const lil::Image input = options.crop ? lil::Crop(images[i], *options.crop) : images[i];
    const auto& out = outputs[i];
    const fs::path stem = fs::path(args.output_dir) / files[i].stem();
    if (args.planes && out.bayer) {
      const auto planes = lil::SplitBayerPlanes(out);
      for (const Channel c : kAllChannels) {
        WriteLilImage(planes[static_cast<int>(c)],
                      stem.string() + "_" + std::string(ChannelName(c)) + ".png", args.png_level);
      }
    } else {
      WriteLilImage(out, stem.string() + ".png", args.png_level);
    }
    report << files[i].filename().string() << ":" << SummaryLine(lil::Summarize(input, options.mode))
           << " ->" << SummaryLine(lil::Summarize(out, options.mode)) << "\n";
  }
  const std::string report_path =
      args.report.empty() ? (fs::path(args.output_dir) / "lil_report.txt").string() : args.report;
  WriteText(report_path, report.str());
  log("lil: wrote " + std::to_string(outputs.size()) + " images");
  return 0;
}

// ---------------------------------------------------------------- synth

std::string FrameName(std::size_t i) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "frame_%03zu.nraw", i);
  return buffer;
}

int RunSynth(SynthArgs args, Executor& executor, const Log& log) {
  args.sensor.pattern = ParsePattern(args.bayer);
  if (args.focus_depth == 0) Fail(ErrorCategory::kUsage, "--focus-depth must be >= 1");
  const fs::path root = args.output_dir;
  EnsureDirectory(root);
  const auto model = synth::MakeVignettedSensor(args.sensor);
  const auto optics = synth::MakeSyntheticOptics(args.top_photons);
  const auto table = spectra::PhotonCounts(optics.levels, optics.qe);

  for (int level = 0; level < calib::kLevelCount; ++level) {
    const fs::path dir = root / "levels" / ("L" + std::to_string(level));
    EnsureDirectory(dir);
    std::array<double, kChannelCount> photons{};
    for (int c = 0; c < kChannelCount; ++c) photons[c] = table.counts[c][level];
    const auto stack = synth::RenderFocusStack(model, synth::MakeUniformScene(model, photons),
                                               args.focus_depth, executor);
    for (std::size_t i = 0; i < stack.size(); ++i) io::WriteRaw(stack[i], dir / FrameName(i));
  }
  const fs::path spectra_dir = root / "spectra";
  EnsureDirectory(spectra_dir);
  for (std::size_t k = 0; k < optics.levels.size(); ++k) {
    WriteText(spectra_dir / ("L" + std::to_string(k + 1) + ".txt"),
              "# wavelength_nm flux\n" + spectra::FormatSpectrum(optics.levels[k]));
  }
  for (const Channel c : kAllChannels) {
    WriteText(spectra_dir / ("qe_" + std::string(ChannelName(c)) + ".txt"),
              "# wavelength_nm quantum_efficiency\n" + spectra::FormatSpectrum(optics.qe[c]));
  }
  WriteText(root / "photon_table.txt", spectra::FormatPhotonTable(table));
  WriteText(root / "truth.txt", synth::FormatGroundTruth(model, table));

  const fs::path scene_dir = root / "scene";
  EnsureDirectory(scene_dir);
  for (std::size_t i = 0; i < args.scene_frames; ++i) {
    const auto scene =
        args.uniform
            ? synth::MakeUniformScene(model, {0.5 * table.counts[0][7], 0.5 * table.counts[1][7],
                                              0.5 * table.counts[2][7], 0.5 * table.counts[3][7]})
            : synth::MakeTexturedScene(model, table, args.sensor.seed * 1000003 + i);
    io::WriteRaw(synth::RenderScene(model, scene, executor), scene_dir / FrameName(i));
  }
  if (args.focus_depth > 1) {
    const fs::path focus_dir = root / "scene_focus";
    EnsureDirectory(focus_dir);
    const auto stack = synth::RenderFocusStack(
        model, synth::MakeTexturedScene(model, table, args.sensor.seed * 1000003), args.focus_depth,
        executor);
    for (std::size_t i = 0; i < stack.size(); ++i) io::WriteRaw(stack[i], focus_dir / FrameName(i));
  }
  log("synth: wrote fixture " + std::to_string(model.width) + "x" +
      std::to_string(model.height) + " to " + root.string());
  return 0;
}

}  // namespace

int Run(int argc, char** argv) {
  CLI::App app{"Radiometric calibration, photon-count correction and LIL 8-bit conversion",
               "radcal"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key = value file; command-line flags win");
  GlobalOptions global;
  app.add_option("-j,--workers", global.workers, "worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("-q,--quiet", global.quiet, "no progress on stderr");

  InspectArgs inspect;
  auto* inspect_cmd = app.add_subcommand("inspect", "print metadata of an NRAW, NCAL or PNG file");
  inspect_cmd->add_option("file", inspect.path)->required();

  PieArgs pie_args;
  auto* pie_cmd = app.add_subcommand("pie", "point information entropy of a z-stack");
  pie_cmd->add_option("inputs", pie_args.inputs, "NRAW frames or directories")->required();
  AddPieOptions(pie_cmd, pie_args.pie);
  pie_cmd->add_option("--z-start", pie_args.z_start, "z position of frame 0");
  pie_cmd->add_option("--z-step", pie_args.z_step, "z spacing; adds a z_position column");
  pie_cmd->add_option("-o,--output", pie_args.output, "table file (default stdout)");

  CalibrateArgs cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "build an NCAL map from level stacks L0..L7");
  cal_cmd->add_option("levels", cal.levels, "eight level stacks (directories or files)")
      ->expected(8)
      ->required();
  cal_cmd->add_option("--spectra", cal.spectra, "light spectra of L1..L7")->expected(7);
  cal_cmd->add_option("--qe", cal.qe, "QE files R G1 G2 B")->expected(4);
  cal_cmd->add_option("--qe-table", cal.qe_table, "QE table: wavelength R G1 G2 B");
  cal_cmd->add_option("--photon-table", cal.photon_table, "precomputed photon table");
  AddPieOptions(cal_cmd, cal.pie);
  cal_cmd->add_option("--half-window", cal.half_window, "frames averaged each side of focus")
      ->capture_default_str();
  cal_cmd->add_option("-o,--output", cal.output, "NCAL file")->required();
  cal_cmd->add_option("--report", cal.report, "text report (default <output>.txt)");

  CorrectArgs cor;
  auto* cor_cmd = app.add_subcommand("correct", "convert raw frames to 14-bit photon images");
  cor_cmd->add_option("-c,--calibration", cor.calibration, "NCAL file")->required();
  cor_cmd->add_option("inputs", cor.inputs, "NRAW frames or directories")->required();
  cor_cmd->add_option("-o,--output-dir", cor.output_dir, "output directory")->required();
  cor_cmd->add_option("--full-scale", cor.full_scale, "photons mapped to code 16383");
  cor_cmd->add_option("--png-level", cor.png_level, "zlib level 0-9")
      ->check(CLI::Range(0, 9))
      ->capture_default_str();

  LilArgs lil_args;
  auto* lil_cmd = app.add_subcommand("lil", "least-information-loss conversion to 8 bits");
  lil_cmd->add_option("inputs", lil_args.inputs, "NRAW/PNG files or directories")->required();
  lil_cmd->add_option("--mode", lil_args.mode, "per-channel|joint")->capture_default_str();
  lil_cmd->add_option("--scope", lil_args.scope, "single|series")->capture_default_str();
  lil_cmd->add_option("--bayer", lil_args.bayer, "mosaic pattern of raw input");
  lil_cmd->add_option("--crop", lil_args.crop, "x0,y0,w,h");
  lil_cmd->add_flag("--planes", lil_args.planes, "write R/G1/G2/B planes for mosaic input");
  lil_cmd->add_option("-o,--output-dir", lil_args.output_dir, "output directory")->required();
  lil_cmd->add_option("--report", lil_args.report, "report file (default <dir>/lil_report.txt)");
  lil_cmd->add_option("--png-level", lil_args.png_level, "zlib level 0-9")
      ->check(CLI::Range(0, 9))
      ->capture_default_str();

  SynthArgs syn;
  auto* syn_cmd = app.add_subcommand("synth", "write a synthetic sensor fixture");
  syn_cmd->add_option("-o,--output-dir", syn.output_dir, "output directory")->required();
  syn_cmd->add_option("--width", syn.sensor.width)->capture_default_str();
  syn_cmd->add_option("--height", syn.sensor.height)->capture_default_str();
  syn_cmd->add_option("--bayer", syn.bayer)->capture_default_str();
  syn_cmd->add_option("--bit-depth", syn.sensor.bit_depth)
      ->check(CLI::Range(1, 16))
      ->capture_default_str();
  syn_cmd->add_option("--seed", syn.sensor.seed)->capture_default_str();
  syn_cmd->add_option("--vignette-min", syn.sensor.vignette_min)->capture_default_str();
  syn_cmd->add_option("--gain-jitter", syn.sensor.gain_jitter)->capture_default_str();
  syn_cmd->add_option("--offset-max", syn.sensor.offset_max)->capture_default_str();
  syn_cmd->add_option("--defects", syn.sensor.defect_count)->capture_default_str();
  syn_cmd->add_option("--top-photons", syn.top_photons, "photons of the brightest channel at L7")
      ->capture_default_str();
  syn_cmd->add_option("--focus-depth", syn.focus_depth, "frames per level stack")
      ->capture_default_str();
  syn_cmd->add_option("--scene-frames", syn.scene_frames)->capture_default_str();
  syn_cmd->add_flag("--uniform", syn.uniform, "uniform scene instead of textured");

  // First bare word names the subcommand.
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "-j" || arg == "--workers" || arg == "--config") {
      ++i;
      continue;
    }
    if (arg.empty() || arg[0] == '-') continue;
    bool known = false;
    for (const auto* sub : app.get_subcommands({})) known = known || sub->get_name() == arg;
    if (!known) {
      std::fprintf(stderr, "error: usage: unknown subcommand '%s'\n", arg.c_str());
      std::cerr << app.help();
      return 2;
    }
    break;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string message = e.what();
    std::replace(message.begin(), message.end(), '\n', ' ');
    std::fprintf(stderr, "error: usage: %s\n", message.c_str());
    std::cerr << app.help();
    return 2;
  }

  try {
    const Log log(global.quiet);
    ThreadPool pool(global.workers);
    if (*inspect_cmd) return RunInspect(inspect);
    if (*pie_cmd) return RunPie(pie_args, pool, log);
    if (*cal_cmd) return RunCalibrate(cal, pool, log);
    if (*cor_cmd) return RunCorrect(cor, pool, log);
    if (*lil_cmd) return RunLil(lil_args, pool, log);
    if (*syn_cmd) return RunSynth(syn, pool, log);
  } catch (const Error& e) {
    std::cerr << "error: " << CategoryName(e.category()) << ": " << e.what() << "\n";
    if (e.category() == ErrorCategory::kUsage) return 2;
    return 1;
  } catch (const std::bad_alloc&) {
    std::fprintf(stderr, "error: io: out of memory\n");
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: io: %s\n", e.what());
    return 1;
  }
  return 2;
}

}  // namespace radcal::cli

int main(int argc, char** argv) { return radcal::cli::Run(argc, argv); }
