#include "radcal/image_io.h"

#include <png.h>

#include <atomic>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include <unistd.h>

#include "radcal/error.h"

namespace radcal::io {
namespace {

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t GetU32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 |
         std::uint32_t{p[3]} << 24;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr OpenFile(const std::filesystem::path& path, const char* mode) {
  FilePtr file(std::fopen(path.c_str(), mode));
  if (!file) Fail(ErrorCategory::kIo, "cannot open '" + path.string() + "'");
  return file;
}

[[noreturn]] void PngError(png_structp png, png_const_charp message) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text != nullptr) *text = message;
  png_longjmp(png, 1);
}

void PngWarning(png_structp, png_const_charp) {}

}  // namespace

std::vector<std::uint8_t> EncodeRaw(const RawImage& image) {
  image.Validate();
  if (image.width() > 0xffffffffu || image.height() > 0xffffffffu) {
    Fail(ErrorCategory::kRange, "image too large for NRAW");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kNrawHeaderSize + 2 * image.size());
  out.insert(out.end(), {'N', 'R', 'A', 'W', kNrawVersion});
  PutU32(out, static_cast<std::uint32_t>(image.width()));
  PutU32(out, static_cast<std::uint32_t>(image.height()));
  out.push_back(static_cast<std::uint8_t>(image.bit_depth()));
  out.push_back(static_cast<std::uint8_t>(image.pattern()));
  for (const auto v : image.samples()) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  return out;
}

RawImage DecodeRaw(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kNrawHeaderSize || std::memcmp(bytes.data(), "NRAW", 4) != 0) {
    Fail(ErrorCategory::kFormat, "malformed header: missing NRAW magic");
  }
  if (bytes[4] != kNrawVersion) {
    Fail(ErrorCategory::kFormat, "unsupported NRAW version " + std::to_string(bytes[4]));
  }
  const std::size_t width = GetU32(&bytes[5]);
  const std::size_t height = GetU32(&bytes[9]);
  const int bit_depth = bytes[13];
  if (bit_depth < 1 || bit_depth > 16) {
    Fail(ErrorCategory::kFormat, "malformed header: bit depth " + std::to_string(bit_depth));
  }
  const BayerPattern pattern = PatternFromCode(bytes[14]);
  const std::size_t count = width * height;
  if (bytes.size() - kNrawHeaderSize < 2 * count) {
    Fail(ErrorCategory::kFormat, "truncated sample data");
  }
  if (bytes.size() - kNrawHeaderSize > 2 * count) {
    Fail(ErrorCategory::kFormat, "trailing bytes after sample data");
  }
  std::vector<std::uint16_t> samples(count);
  const std::uint8_t* p = bytes.data() + kNrawHeaderSize;
  for (std::size_t i = 0; i < count; ++i) {
    samples[i] = static_cast<std::uint16_t>(p[2 * i] | p[2 * i + 1] << 8);
  }
  RawImage image(width, height, bit_depth, pattern, std::move(samples));
  image.Validate();
  return image;
}

RawImage ReadRaw(const std::filesystem::path& path) {
  return DecodeRaw(ReadFileBytes(path));
}

void WriteRaw(const RawImage& image, const std::filesystem::path& path) {
  const auto bytes = EncodeRaw(image);
  WriteAtomically(path, [&](const std::filesystem::path& tmp) { WriteFileBytes(tmp, bytes); });
}

void WritePng(const PngImage& image, const std::filesystem::path& path,
              int compression_level) {
  if (image.channels != 1 && image.channels != 3) {
    Fail(ErrorCategory::kValidation, "PNG output supports 1 or 3 channels");
  }
  if (image.container_bits != 8 && image.container_bits != 16) {
    Fail(ErrorCategory::kValidation, "PNG container must be 8 or 16 bits");
  }
  const std::size_t row_samples = image.width * static_cast<std::size_t>(image.channels);
  if (image.samples.size() != row_samples * image.height || image.width == 0 ||
      image.height == 0) {
    Fail(ErrorCategory::kValidation, "PNG sample count does not match dimensions");
  }
  const std::uint32_t limit = image.container_bits == 8 ? 0xffu : 0xffffu;
  for (const auto v : image.samples) {
    if (v > limit) Fail(ErrorCategory::kRange, "value overflow for PNG container");
  }

  WriteAtomically(path, [&](const std::filesystem::path& tmp) {
    FilePtr file = OpenFile(tmp, "wb");
    std::string message;
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, PngError, PngWarning);
    png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
      png_destroy_write_struct(&png, &info);
      Fail(ErrorCategory::kIo, "libpng initialisation failed");
    }
    const std::size_t bytes_per_sample = image.container_bits / 8;
    std::vector<png_byte> row(row_samples * bytes_per_sample);
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      Fail(ErrorCategory::kIo, "PNG write failed: " + message);
    }
    png_init_io(png, file.get());
    png_set_compression_level(png, compression_level);
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height), image.container_bits,
                 image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t y = 0; y < image.height; ++y) {
      const std::uint16_t* src = image.samples.data() + y * row_samples;
      if (bytes_per_sample == 1) {
        for (std::size_t i = 0; i < row_samples; ++i) row[i] = static_cast<png_byte>(src[i]);
      } else {
        for (std::size_t i = 0; i < row_samples; ++i) {
          row[2 * i] = static_cast<png_byte>(src[i] >> 8);
          row[2 * i + 1] = static_cast<png_byte>(src[i] & 0xff);
        }
      }
      png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fflush(file.get()) != 0) Fail(ErrorCategory::kIo, "flush failed");
  });
}

PngImage ReadPng(const std::filesystem::path& path) {
  FilePtr file = OpenFile(path, "rb");
  png_byte signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    Fail(ErrorCategory::kFormat, "'" + path.string() + "' is not a PNG file");
  }
  std::string message;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, PngError, PngWarning);
  png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_read_struct(&png, &info, nullptr);
    Fail(ErrorCategory::kIo, "libpng initialisation failed");
  }
  PngImage image;
  std::vector<png_byte> row;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    Fail(ErrorCategory::kFormat, "PNG read failed: " + message);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  image.width = png_get_image_width(png, info);
  image.height = png_get_image_height(png, info);
  image.channels = png_get_channels(png, info);
  image.container_bits = png_get_bit_depth(png, info);
  const std::size_t row_samples = image.width * static_cast<std::size_t>(image.channels);
  row.resize(png_get_rowbytes(png, info));
  image.samples.resize(row_samples * image.height);
  const std::size_t passes = static_cast<std::size_t>(png_set_interlace_handling(png));
  if (passes > 1) {
    png_destroy_read_struct(&png, &info, nullptr);
    Fail(ErrorCategory::kFormat, "interlaced PNG input is not supported");
  }
  for (std::size_t y = 0; y < image.height; ++y) {
    png_read_row(png, row.data(), nullptr);
    std::uint16_t* dst = image.samples.data() + y * row_samples;
    if (image.container_bits == 16) {
      for (std::size_t i = 0; i < row_samples; ++i) {
        dst[i] = static_cast<std::uint16_t>(row[2 * i] << 8 | row[2 * i + 1]);
      }
    } else {
      for (std::size_t i = 0; i < row_samples; ++i) dst[i] = row[i];
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

void WritePng16(std::size_t width, std::size_t height, std::span<const std::uint16_t> samples,
                const std::filesystem::path& path, int compression_level) {
  PngImage image;
  image.width = width;
  image.height = height;
  image.channels = 1;
  image.container_bits = 16;
  image.samples.assign(samples.begin(), samples.end());
  WritePng(image, path, compression_level);
}

PngImage ReadPng16(const std::filesystem::path& path) {
  PngImage image = ReadPng(path);
  if (image.channels != 1 || image.container_bits != 16) {
    Fail(ErrorCategory::kFormat, "'" + path.string() + "' is not a 16-bit grayscale PNG");
  }
  return image;
}

void WriteAtomically(const std::filesystem::path& path,
                     const std::function<void(const std::filesystem::path& tmp)>& writer) {
  static std::atomic<unsigned> counter{0};
  std::filesystem::path tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
  try {
    writer(tmp);
    std::filesystem::rename(tmp, path);
  } catch (const std::filesystem::filesystem_error& e) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    Fail(ErrorCategory::kIo, e.what());
  } catch (...) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw;
  }
}

void WriteFileBytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  FilePtr file = OpenFile(path, "wb");
  if (std::fwrite(bytes.data(), 1, bytes.size(), file.get()) != bytes.size() ||
      std::fflush(file.get()) != 0) {
    Fail(ErrorCategory::kIo, "write failed for '" + path.string() + "'");
  }
}

std::vector<std::uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  FilePtr file = OpenFile(path, "rb");
  std::vector<std::uint8_t> bytes;
  std::uint8_t buffer[1 << 16];
  std::size_t n;
  while ((n = std::fread(buffer, 1, sizeof buffer, file.get())) > 0) {
    bytes.insert(bytes.end(), buffer, buffer + n);
  }
  if (std::ferror(file.get())) Fail(ErrorCategory::kIo, "read failed for '" + path.string() + "'");
  return bytes;
}

}  // namespace radcal::io
