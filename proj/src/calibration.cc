#include "radcal/calibration.h"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <memory>

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include "radcal/error.h"
#include "radcal/image_io.h"

namespace radcal::calib {
namespace {

constexpr std::size_t kRowGrain = 16;
constexpr std::size_t kFixedHeaderSize = 4 + 1 + 4 + 4 + 1 + 4 * kLevelCount * 8 + 4;

std::uint16_t ToFixed(double mean) {
  const double scaled = std::floor(mean * kKnotScale + 0.5);
  if (!(scaled >= 0 && scaled <= 65535)) {
    Fail(ErrorCategory::kRange, "level intensity " + std::to_string(mean) +
                                    " does not fit the calibration fixed-point range");
  }
  return static_cast<std::uint16_t>(scaled);
}

std::string EncodeMetadata(const std::map<std::string, std::string>& metadata) {
  std::string out;
  for (const auto& [key, value] : metadata) {
    if (key.empty() || key.find_first_of("=\n") != std::string::npos ||
        value.find('\n') != std::string::npos) {
      Fail(ErrorCategory::kValidation, "metadata key/value '" + key + "' is not encodable");
    }
    out += key + "=" + value + "\n";
  }
  return out;
}

std::map<std::string, std::string> DecodeMetadata(std::string_view text) {
  std::map<std::string, std::string> metadata;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    if (eol == std::string_view::npos) Fail(ErrorCategory::kFormat, "unterminated metadata");
    const auto line = text.substr(0, eol);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      Fail(ErrorCategory::kFormat, "malformed metadata line");
    }
    metadata.emplace(std::string(line.substr(0, eq)), std::string(line.substr(eq + 1)));
    text.remove_prefix(eol + 1);
  }
  return metadata;
}

// Byte sink that tracks the running CRC-32.
class CrcSink {
 public:
  explicit CrcSink(std::function<void(const std::uint8_t*, std::size_t)> out)
      : out_(std::move(out)) {}

  void Bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    crc_ = crc32_z(crc_, p, n);
    out_(p, n);
  }
  void U8(std::uint8_t v) { Bytes(&v, 1); }
  void U32(std::uint32_t v) {
    std::uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    Bytes(b, 4);
  }
  void F64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(bits >> (8 * i));
    Bytes(b, 8);
  }
  std::uint32_t crc() const { return static_cast<std::uint32_t>(crc_); }

 private:
  std::function<void(const std::uint8_t*, std::size_t)> out_;
  uLong crc_ = crc32_z(0L, Z_NULL, 0);
};

void Serialize(const CalibrationMap& map,
               const std::function<void(const std::uint8_t*, std::size_t)>& out) {
  if (map.width() > 0xffffffffu || map.height() > 0xffffffffu) {
    Fail(ErrorCategory::kRange, "calibration map too large for NCAL");
  }
  const std::string metadata = EncodeMetadata(map.metadata());
  CrcSink sink(out);
  sink.Bytes("NCAL", 4);
  sink.U8(kNcalVersion);
  sink.U32(static_cast<std::uint32_t>(map.width()));
  sink.U32(static_cast<std::uint32_t>(map.height()));
  sink.U8(static_cast<std::uint8_t>(map.pattern()));
  for (const auto& channel : map.photon_table().counts) {
    for (const double v : channel) sink.F64(v);
  }
  sink.U32(static_cast<std::uint32_t>(metadata.size()));
  sink.Bytes(metadata.data(), metadata.size());

  const auto knots = map.all_knots();
  std::vector<std::uint8_t> buffer;
  constexpr std::size_t kBlock = 1 << 16;
  for (std::size_t lo = 0; lo < knots.size(); lo += kBlock) {
    const std::size_t hi = std::min(knots.size(), lo + kBlock);
    buffer.resize(2 * (hi - lo));
    for (std::size_t i = lo; i < hi; ++i) {
      buffer[2 * (i - lo)] = static_cast<std::uint8_t>(knots[i] & 0xff);
      buffer[2 * (i - lo) + 1] = static_cast<std::uint8_t>(knots[i] >> 8);
    }
    sink.Bytes(buffer.data(), buffer.size());
  }
  const auto defects = map.defect_mask();
  sink.Bytes(defects.data(), defects.size());

  const std::uint32_t crc = sink.crc();
  std::uint8_t tail[4];
  for (int i = 0; i < 4; ++i) tail[i] = static_cast<std::uint8_t>(crc >> (8 * i));
  out(tail, 4);
}

std::uint32_t ReadU32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 |
         std::uint32_t{p[3]} << 24;
}

}  // namespace

MeanImage MeanImage::FromRaw(const RawImage& raw) {
  MeanImage mean;
  mean.width = raw.width();
  mean.height = raw.height();
  mean.pattern = raw.pattern();
  mean.values.assign(raw.samples().begin(), raw.samples().end());
  return mean;
}

MeanImage MeanLevelImage(std::span<const RawImage> frames, std::size_t center,
                         std::size_t half_window, Executor& executor) {
  if (frames.empty()) Fail(ErrorCategory::kValidation, "empty level stack");
  if (center >= frames.size() || half_window > center ||
      center + half_window >= frames.size()) {
    Fail(ErrorCategory::kRange, "averaging window [" + std::to_string(center) + " +/- " +
                                    std::to_string(half_window) + "] outside stack of " +
                                    std::to_string(frames.size()) + " frames");
  }
  const RawImage& first = frames[center];
  for (std::size_t f = center - half_window; f <= center + half_window; ++f) {
    if (frames[f].width() != first.width() || frames[f].height() != first.height() ||
        frames[f].pattern() != first.pattern()) {
      Fail(ErrorCategory::kValidation, "level stack frames differ in size or Bayer pattern");
    }
  }
  MeanImage mean;
  mean.width = first.width();
  mean.height = first.height();
  mean.pattern = first.pattern();
  mean.values.assign(first.size(), 0.0);
  const double count = static_cast<double>(2 * half_window + 1);
  executor.ForRange(0, mean.height, kRowGrain, [&](std::size_t y0, std::size_t y1) {
    const std::size_t lo = y0 * mean.width;
    const std::size_t hi = y1 * mean.width;
    for (std::size_t f = center - half_window; f <= center + half_window; ++f) {
      const auto samples = frames[f].samples();
      for (std::size_t i = lo; i < hi; ++i) mean.values[i] += samples[i];
    }
    for (std::size_t i = lo; i < hi; ++i) mean.values[i] /= count;
  });
  return mean;
}

bool IsInvertible(std::span<const std::uint16_t, kLevelCount> knots) {
  for (int k = 1; k < kLevelCount; ++k) {
    if (knots[k] <= knots[k - 1]) return false;
  }
  return true;
}

CalibrationMap::CalibrationMap(std::size_t width, std::size_t height, BayerPattern pattern,
                               PhotonTable table, std::vector<std::uint16_t> knots,
                               std::vector<std::uint8_t> defects,
                               std::map<std::string, std::string> metadata)
    : width_(width),
      height_(height),
      pattern_(pattern),
      table_(table),
      knots_(std::move(knots)),
      defects_(std::move(defects)),
      metadata_(std::move(metadata)) {
  table_.Validate();
  if (knots_.size() != width_ * height_ * kLevelCount || defects_.size() != width_ * height_) {
    Fail(ErrorCategory::kValidation, "calibration map arrays do not match its dimensions");
  }
  for (std::size_t i = 0; i < defects_.size(); ++i) {
    if (defects_[i] > 1) Fail(ErrorCategory::kValidation, "defect flags must be 0 or 1");
    if (defects_[i] == 0 && !IsInvertible(this->knots(i))) {
      Fail(ErrorCategory::kValidation,
           "pixel " + std::to_string(i) + " has non-increasing knots but is not flagged");
    }
  }
}

std::size_t CalibrationMap::defect_count() const {
  return static_cast<std::size_t>(std::count(defects_.begin(), defects_.end(), 1));
}

double CalibrationMap::defect_fraction() const {
  return defects_.empty() ? 0.0
                          : static_cast<double>(defect_count()) /
                                static_cast<double>(defects_.size());
}

PixelCurve CalibrationMap::curve(std::size_t x, std::size_t y) const {
  const std::size_t i = y * width_ + x;
  const Channel channel = ChannelAt(pattern_, x, y);
  PixelCurve curve;
  const auto k = knots(i);
  for (int level = 0; level < kLevelCount; ++level) {
    curve.intensities[level] = static_cast<double>(k[level]) / kKnotScale;
    curve.photons[level] = table_.at(channel, level);
  }
  curve.ok = !defective(i);
  return curve;
}

CalibrationBuilder::CalibrationBuilder(std::size_t width, std::size_t height,
                                       BayerPattern pattern)
    : width_(width),
      height_(height),
      pattern_(pattern),
      knots_(width * height * kLevelCount, 0) {
  if (width == 0 || height == 0) Fail(ErrorCategory::kValidation, "empty calibration frame");
}

void CalibrationBuilder::CheckLevel(int level, std::size_t width, std::size_t height,
                                    BayerPattern pattern) {
  if (level < 0 || level >= kLevelCount) {
    Fail(ErrorCategory::kValidation, "calibration level " + std::to_string(level) +
                                         " outside L0..L7");
  }
  if (width != width_ || height != height_) {
    Fail(ErrorCategory::kValidation, "dimension mismatch at level L" + std::to_string(level));
  }
  if (pattern != pattern_) {
    Fail(ErrorCategory::kValidation, "Bayer pattern mismatch at level L" +
                                         std::to_string(level));
  }
}

void CalibrationBuilder::SetLevel(int level, const MeanImage& mean, Executor& executor) {
  CheckLevel(level, mean.width, mean.height, mean.pattern);
  if (mean.values.size() != width_ * height_) {
    Fail(ErrorCategory::kValidation, "mean image size does not match its dimensions");
  }
  executor.ForRange(0, height_, kRowGrain, [&](std::size_t y0, std::size_t y1) {
    for (std::size_t i = y0 * width_; i < y1 * width_; ++i) {
      knots_[i * kLevelCount + level] = ToFixed(mean.values[i]);
    }
  });
  filled_[level] = true;
}

void CalibrationBuilder::SetLevel(int level, const RawImage& frame, Executor& executor) {
  CheckLevel(level, frame.width(), frame.height(), frame.pattern());
  const auto samples = frame.samples();
  executor.ForRange(0, height_, kRowGrain, [&](std::size_t y0, std::size_t y1) {
    for (std::size_t i = y0 * width_; i < y1 * width_; ++i) {
      knots_[i * kLevelCount + level] = ToFixed(samples[i]);
    }
  });
  filled_[level] = true;
}

CalibrationMap CalibrationBuilder::Finish(const PhotonTable& table,
                                          std::map<std::string, std::string> metadata,
                                          Executor& executor) && {
  for (int level = 0; level < kLevelCount; ++level) {
    if (!filled_[level]) {
      Fail(ErrorCategory::kValidation, "missing level image L" + std::to_string(level));
    }
  }
  table.Validate();
  const std::size_t pixels = width_ * height_;
  std::vector<std::uint8_t> defects(pixels, 0);
  executor.ForRange(0, height_, kRowGrain, [&](std::size_t y0, std::size_t y1) {
    for (std::size_t i = y0 * width_; i < y1 * width_; ++i) {
      const std::span<const std::uint16_t, kLevelCount> k(knots_.data() + i * kLevelCount,
                                                           kLevelCount);
      defects[i] = IsInvertible(k) ? 0 : 1;
    }
  });
  const auto defective =
      static_cast<std::size_t>(std::count(defects.begin(), defects.end(), 1));
  if (static_cast<double>(defective) > kMaxDefectFraction * static_cast<double>(pixels)) {
    Fail(ErrorCategory::kValidation,
         "> 20% defective pixels (" + std::to_string(defective) + " of " +
             std::to_string(pixels) + "); the level stacks look corrupt");
  }
  return CalibrationMap(width_, height_, pattern_, table, std::move(knots_),
                        std::move(defects), std::move(metadata));
}

CalibrationMap BuildCalibration(std::span<const MeanImage> level_means,
                                const PhotonTable& table, BayerPattern pattern,
                                std::map<std::string, std::string> metadata,
                                Executor& executor) {
  if (level_means.size() != kLevelCount) {
    Fail(ErrorCategory::kValidation, "expected 8 level images, got " +
                                         std::to_string(level_means.size()));
  }
  CalibrationBuilder builder(level_means[0].width, level_means[0].height, pattern);
  for (int level = 0; level < kLevelCount; ++level) {
    builder.SetLevel(level, level_means[level], executor);
  }
  return std::move(builder).Finish(table, std::move(metadata), executor);
}

std::size_t NcalFileSize(std::size_t width, std::size_t height, std::size_t metadata_bytes) {
  return kFixedHeaderSize + metadata_bytes + width * height * (kLevelCount * 2 + 1) + 4;
}

std::vector<std::uint8_t> EncodeCalibration(const CalibrationMap& map) {
  std::vector<std::uint8_t> bytes;
  Serialize(map, [&](const std::uint8_t* p, std::size_t n) { bytes.insert(bytes.end(), p, p + n); });
  return bytes;
}

CalibrationMap DecodeCalibration(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFixedHeaderSize + 4 || std::memcmp(bytes.data(), "NCAL", 4) != 0) {
    Fail(ErrorCategory::kFormat, "not an NCAL calibration file");
  }
  if (bytes[4] != kNcalVersion) {
    Fail(ErrorCategory::kFormat, "version mismatch: NCAL version " + std::to_string(bytes[4]) +
                                     ", expected " + std::to_string(kNcalVersion));
  }
  const std::size_t body = bytes.size() - 4;
  const auto crc = static_cast<std::uint32_t>(crc32_z(crc32_z(0L, Z_NULL, 0), bytes.data(), body));
  const std::uint32_t width = ReadU32(&bytes[5]);
  const std::uint32_t height = ReadU32(&bytes[9]);
  const BayerPattern pattern = PatternFromCode(bytes[13]);
  const std::uint8_t* p = bytes.data() + 14;
  PhotonTable table;
  for (auto& channel : table.counts) {
    for (double& v : channel) {
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= std::uint64_t{p[i]} << (8 * i);
      v = std::bit_cast<double>(bits);
      p += 8;
    }
  }
  const std::uint32_t metadata_bytes = ReadU32(p);
  p += 4;
  if (bytes.size() != NcalFileSize(width, height, metadata_bytes) ||
      ReadU32(bytes.data() + body) != crc) {
    Fail(ErrorCategory::kFormat, "checksum failure: NCAL file is truncated or corrupt");
  }
  auto metadata = DecodeMetadata(
      std::string_view(reinterpret_cast<const char*>(p), metadata_bytes));
  p += metadata_bytes;
  const std::size_t pixels = std::size_t{width} * height;
  std::vector<std::uint16_t> knots(pixels * kLevelCount);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(knots.data(), p, knots.size() * 2);
  } else {
    for (std::size_t i = 0; i < knots.size(); ++i) {
      knots[i] = static_cast<std::uint16_t>(p[2 * i] | p[2 * i + 1] << 8);
    }
  }
  p += knots.size() * 2;
  std::vector<std::uint8_t> defects(p, p + pixels);
  return CalibrationMap(width, height, pattern, table, std::move(knots), std::move(defects),
                        std::move(metadata));
}

void SaveCalibration(const CalibrationMap& map, const std::filesystem::path& path) {
  io::WriteAtomically(path, [&](const std::filesystem::path& tmp) {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(tmp.c_str(), "wb"),
                                                         &std::fclose);
    if (!file) Fail(ErrorCategory::kIo, "cannot open '" + tmp.string() + "'");
    Serialize(map, [&](const std::uint8_t* p, std::size_t n) {
      if (std::fwrite(p, 1, n, file.get()) != n) {
        Fail(ErrorCategory::kIo, "write failed for '" + tmp.string() + "'");
      }
    });
    if (std::fflush(file.get()) != 0) Fail(ErrorCategory::kIo, "flush failed");
  });
}

CalibrationMap LoadCalibration(const std::filesystem::path& path) {
  const int fd = ::open(path.c_str(), O_RDONLY);
  if (fd < 0) Fail(ErrorCategory::kIo, "cannot open '" + path.string() + "'");
  struct stat st {};
  if (::fstat(fd, &st) != 0) {
    ::close(fd);
    Fail(ErrorCategory::kIo, "cannot stat '" + path.string() + "'");
  }
  const auto size = static_cast<std::size_t>(st.st_size);
  if (size == 0) {
    ::close(fd);
    Fail(ErrorCategory::kFormat, "not an NCAL calibration file");
  }
  void* mapping = ::mmap(nullptr, size, PROT_READ, MAP_PRIVATE, fd, 0);
  ::close(fd);
  if (mapping == MAP_FAILED) Fail(ErrorCategory::kIo, "cannot map '" + path.string() + "'");
  std::unique_ptr<void, std::function<void(void*)>> guard(
      mapping, [size](void* m) { ::munmap(m, size); });
  return DecodeCalibration(
      std::span<const std::uint8_t>(static_cast<const std::uint8_t*>(mapping), size));
}

}  // namespace radcal::calib
