#include <fstream>

#include <gtest/gtest.h>

#include "radcal/error.h"
#include "radcal/image.h"
#include "radcal/image_io.h"
#include "test_util.h"

namespace radcal {
namespace {

using testing::RandomRaw;
using testing::TempDir;

std::vector<std::uint8_t> Header(std::uint32_t w, std::uint32_t h, std::uint8_t depth,
                                 std::uint8_t bayer) {
  std::vector<std::uint8_t> b = {'N', 'R', 'A', 'W', 1};
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(w >> (8 * i)));
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(h >> (8 * i)));
  b.push_back(depth);
  b.push_back(bayer);
  return b;
}

void PushSample(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v & 0xff));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}

TEST(BayerTest, ChannelAtMatchesPatternLetters) {
  EXPECT_EQ(ChannelAt(BayerPattern::kRGGB, 0, 0), Channel::kR);
  EXPECT_EQ(ChannelAt(BayerPattern::kRGGB, 1, 0), Channel::kG1);
  EXPECT_EQ(ChannelAt(BayerPattern::kRGGB, 0, 1), Channel::kG2);
  EXPECT_EQ(ChannelAt(BayerPattern::kRGGB, 1, 1), Channel::kB);
  EXPECT_EQ(ChannelAt(BayerPattern::kBGGR, 0, 0), Channel::kB);
  EXPECT_EQ(ChannelAt(BayerPattern::kGRBG, 1, 0), Channel::kR);
  EXPECT_EQ(ChannelAt(BayerPattern::kGBRG, 0, 1), Channel::kR);
  // Exactly one R, G1, G2, B per cell for every pattern.
  for (std::uint8_t code = 0; code < 4; ++code) {
    int seen[4] = {};
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t x = 0; x < 2; ++x)
        ++seen[static_cast<int>(ChannelAt(static_cast<BayerPattern>(code), x, y))];
    for (int c = 0; c < 4; ++c) EXPECT_EQ(seen[c], 1);
  }
}

TEST(BayerTest, ParseAndNameRoundTrip) {
  for (const char* name : {"RGGB", "GRBG", "GBRG", "BGGR"}) {
    EXPECT_EQ(PatternName(ParsePattern(name)), name);
  }
  EXPECT_THROW(ParsePattern("RGBG"), Error);
}

TEST(RawTest, DecodesDeclaredHeader) {
  auto bytes = Header(2, 2, 12, 0);
  for (std::uint16_t v : {0, 4095, 1, 2}) PushSample(bytes, v);
  const RawImage image = io::DecodeRaw(bytes);
  EXPECT_EQ(image.width(), 2u);
  EXPECT_EQ(image.height(), 2u);
  EXPECT_EQ(image.bit_depth(), 12);
  EXPECT_EQ(image.pattern(), BayerPattern::kRGGB);
  EXPECT_EQ(std::vector<std::uint16_t>(image.samples().begin(), image.samples().end()),
            (std::vector<std::uint16_t>{0, 4095, 1, 2}));
}

TEST(RawTest, RejectsSampleAboveBitDepth) {
  auto bytes = Header(2, 1, 12, 0);
  PushSample(bytes, 1);
  PushSample(bytes, 4096);
  try {
    io::DecodeRaw(bytes);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kRange);
    EXPECT_NE(std::string(e.what()).find("sample out of range"), std::string::npos);
  }
}

TEST(RawTest, RejectsMalformedAndTruncatedInput) {
  auto bytes = Header(2, 2, 12, 0);
  PushSample(bytes, 1);
  EXPECT_THROW(io::DecodeRaw(bytes), Error);  // truncated samples
  auto bad_magic = Header(1, 1, 12, 0);
  bad_magic[0] = 'X';
  PushSample(bad_magic, 0);
  EXPECT_THROW(io::DecodeRaw(bad_magic), Error);
  auto bad_bayer = Header(1, 1, 12, 9);
  PushSample(bad_bayer, 0);
  EXPECT_THROW(io::DecodeRaw(bad_bayer), Error);
  EXPECT_THROW(io::DecodeRaw(std::vector<std::uint8_t>{'N', 'R'}), Error);
}

TEST(RawTest, FileRoundTripIsBitExact) {
  TempDir dir;
  const RawImage image = RandomRaw(37, 23, 12, BayerPattern::kGBRG, 7);
  io::WriteRaw(image, dir / "a.nraw");
  EXPECT_EQ(io::ReadRaw(dir / "a.nraw"), image);
  EXPECT_EQ(std::filesystem::file_size(dir / "a.nraw"), io::kNrawHeaderSize + 2 * 37 * 23);
}

TEST(RawTest, EncodeRejectsOutOfRangeImage) {
  RawImage image(2, 1, 8, BayerPattern::kRGGB, {1, 300});
  EXPECT_THROW(io::EncodeRaw(image), Error);
}

TEST(PngTest, ConstantFourteenBitRoundTrip) {
  TempDir dir;
  std::vector<std::uint16_t> samples(5 * 4, 16383);
  io::WritePng16(5, 4, samples, dir / "c.png");
  const auto back = io::ReadPng16(dir / "c.png");
  EXPECT_EQ(back.width, 5u);
  EXPECT_EQ(back.height, 4u);
  EXPECT_EQ(back.samples, samples);
}

TEST(PngTest, SmallRowRoundTrip) {
  TempDir dir;
  const std::vector<std::uint16_t> samples = {0, 8191, 16383};
  io::WritePng16(3, 1, samples, dir / "r.png");
  EXPECT_EQ(io::ReadPng16(dir / "r.png").samples, samples);
}

TEST(PngTest, RandomFourteenBitRoundTrip) {
  TempDir dir;
  const RawImage image = RandomRaw(64, 64, 14, BayerPattern::kRGGB, 99);
  io::WritePng16(64, 64, image.samples(), dir / "r.png");
  const auto back = io::ReadPng16(dir / "r.png");
  EXPECT_TRUE(std::equal(back.samples.begin(), back.samples.end(), image.samples().begin()));
}

TEST(PngTest, EightBitRgbRoundTrip) {
  TempDir dir;
  io::PngImage rgb{3, 2, 3, 8, {0, 1, 2, 3, 4, 5, 250, 251, 252, 253, 254, 255, 9, 8, 7, 6, 5, 4}};
  io::WritePng(rgb, dir / "rgb.png");
  EXPECT_EQ(io::ReadPng(dir / "rgb.png"), rgb);
}

TEST(PngTest, RejectsOverflowAndBadPath) {
  TempDir dir;
  io::PngImage eight{1, 1, 1, 8, {256}};
  EXPECT_THROW(io::WritePng(eight, dir / "x.png"), Error);
  std::vector<std::uint16_t> one = {1};
  EXPECT_THROW(io::WritePng16(1, 1, one, dir / "missing" / "x.png"), Error);
  EXPECT_FALSE(std::filesystem::exists(dir / "x.png"));
}

TEST(PngTest, ReadRejectsNonPng) {
  TempDir dir;
  std::ofstream(dir / "n.png") << "not a png";
  EXPECT_THROW(io::ReadPng(dir / "n.png"), Error);
}

TEST(CropTest, FullFrameIsIdentity) {
  const RawImage image = RandomRaw(6, 4, 12, BayerPattern::kBGGR, 3);
  EXPECT_EQ(Crop(image, {0, 0, 6, 4}), image);
}

TEST(CropTest, OddOffsetShiftsPattern) {
  const RawImage image = RandomRaw(4, 4, 12, BayerPattern::kRGGB, 5);
  const RawImage cropped = Crop(image, {1, 0, 2, 2});
  EXPECT_EQ(cropped.pattern(), BayerPattern::kGRBG);
  EXPECT_EQ(cropped.at(0, 0), image.at(1, 0));
  EXPECT_EQ(cropped.at(1, 1), image.at(2, 1));
}

TEST(CropTest, ChannelConsistentForEveryRectOnSmallFrame) {
  // Exhaustive over all patterns and all rectangles of an 8x8 frame.
  for (std::uint8_t code = 0; code < 4; ++code) {
    const RawImage image = RandomRaw(8, 8, 12, static_cast<BayerPattern>(code), code);
    for (std::size_t y0 = 0; y0 < 8; ++y0)
      for (std::size_t x0 = 0; x0 < 8; ++x0)
        for (std::size_t h = 1; y0 + h <= 8; ++h)
          for (std::size_t w = 1; x0 + w <= 8; ++w) {
            const RawImage c = Crop(image, {x0, y0, w, h});
            for (std::size_t j = 0; j < h; ++j)
              for (std::size_t i = 0; i < w; ++i) {
                ASSERT_EQ(c.channel_at(i, j), image.channel_at(x0 + i, y0 + j));
                ASSERT_EQ(c.at(i, j), image.at(x0 + i, y0 + j));
              }
          }
  }
}

TEST(CropTest, RejectsOutOfBounds) {
  const RawImage image = RandomRaw(4, 4, 12, BayerPattern::kRGGB, 1);
  EXPECT_THROW(Crop(image, {3, 0, 2, 1}), Error);
  EXPECT_THROW(Crop(image, {0, 0, 0, 1}), Error);
}

TEST(CropTest, ParsesRectangle) {
  const CropRect r = CropRect::Parse("1,2,30,40");
  EXPECT_EQ(r.x0, 1u);
  EXPECT_EQ(r.y0, 2u);
  EXPECT_EQ(r.w, 30u);
  EXPECT_EQ(r.h, 40u);
  EXPECT_THROW(CropRect::Parse("1,2,3"), Error);
  EXPECT_THROW(CropRect::Parse("1,2,3,4,5"), Error);
  EXPECT_THROW(CropRect::Parse("a,2,3,4"), Error);
}

}  // namespace
}  // namespace radcal
