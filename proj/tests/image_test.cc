// Copyright 2026 The qmc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "qmc/image.hpp"
#include "qmc/pnm.hpp"

namespace qmc {
namespace {

PlanarImage Solid(int w, int h, uint8_t r, uint8_t g, uint8_t b) {
  return testing::ConstantImage(w, h, r, g, b);
}

TEST(ColorTest, BlackMapsToZeroLumaNeutralChroma) {
  const PlanarImage yuv = RgbToYuv420(Solid(4, 4, 0, 0, 0));
  EXPECT_EQ(yuv.planes[0].at(0, 0), 0);
  EXPECT_EQ(yuv.planes[1].at(0, 0), 128);
  EXPECT_EQ(yuv.planes[2].at(0, 0), 128);
}

TEST(ColorTest, WhiteMapsToFullLumaNeutralChroma) {
  const PlanarImage yuv = RgbToYuv420(Solid(4, 4, 255, 255, 255));
  EXPECT_EQ(yuv.planes[0].at(1, 1), 255);
  EXPECT_EQ(yuv.planes[1].at(1, 1), 128);
  EXPECT_EQ(yuv.planes[2].at(1, 1), 128);
}

TEST(ColorTest, PureRedLuma) {
  const PlanarImage yuv = RgbToYuv420(Solid(2, 2, 255, 0, 0));
  EXPECT_EQ(yuv.planes[0].at(0, 0), static_cast<int>(std::lround(0.2126 * 255)));
  EXPECT_EQ(yuv.planes[0].at(0, 0), 54);
  // Cr = (R - Y) / 1.5748 + 128 evaluated by hand.
  EXPECT_EQ(yuv.planes[2].at(0, 0), ClampToByte((255 - 0.2126 * 255) / 1.5748 + 128));
}

TEST(ColorTest, InverseOfNeutralValues) {
  PlanarImage yuv = PlanarImage::Make(2, 2, ColorSpace::kYuv420);
  yuv.planes[1].at(0, 0) = 128;
  yuv.planes[2].at(0, 0) = 128;
  PlanarImage rgb = Yuv420ToRgb(yuv);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(rgb.planes[c].at(1, 1), 0);
  std::fill(yuv.planes[0].data().begin(), yuv.planes[0].data().end(), 255);
  rgb = Yuv420ToRgb(yuv);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(rgb.planes[c].at(0, 1), 255);
}

TEST(ColorTest, ConstantImagesRoundTripWithinTwo) {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> d(0, 255);
  for (int t = 0; t < 500; ++t) {
    const uint8_t r = static_cast<uint8_t>(d(rng)), g = static_cast<uint8_t>(d(rng)),
                  b = static_cast<uint8_t>(d(rng));
    const PlanarImage back = Yuv420ToRgb(RgbToYuv420(Solid(3, 5, r, g, b)));
    const uint8_t in[3] = {r, g, b};
    for (int c = 0; c < 3; ++c) {
      EXPECT_LE(std::abs(back.planes[c].at(2, 4) - in[c]), 2)
          << "rgb " << +r << "," << +g << "," << +b << " channel " << c;
    }
  }
}

TEST(ColorTest, OddSizeChromaShape) {
  const PlanarImage yuv = RgbToYuv420(Solid(5, 7, 10, 20, 30));
  EXPECT_EQ(yuv.planes[1].width(), 3);
  EXPECT_EQ(yuv.planes[1].height(), 4);
  EXPECT_THROW(RgbToYuv420(yuv), InvalidArgument);
}

TEST(PadTest, PadsToMultipleByReplication) {
  PlanarImage img = testing::TexturedImage(33, 33);
  const PlanarImage p = PadReplicate(img, 32);
  EXPECT_EQ(p.width, 64);
  EXPECT_EQ(p.height, 64);
  EXPECT_EQ(p.orig_width, 33);
  EXPECT_EQ(p.planes[0].at(63, 10), img.planes[0].at(32, 10));
  EXPECT_EQ(p.planes[1].at(5, 63), img.planes[1].at(5, 32));
  EXPECT_EQ(p.planes[2].at(63, 63), img.planes[2].at(32, 32));
  EXPECT_EQ(p.planes[0].at(7, 9), img.planes[0].at(7, 9));
}

TEST(PadTest, IdentityWhenAlreadyAligned) {
  const PlanarImage img = testing::TexturedImage(64, 64);
  EXPECT_EQ(PadReplicate(img, 32), img);
  const PlanarImage once = PadReplicate(testing::TexturedImage(40, 20), 16);
  EXPECT_EQ(PadReplicate(once, 16), once);
}

TEST(PadTest, NarrowImage) {
  const PlanarImage p = PadReplicate(Solid(17, 1, 1, 2, 3), 16);
  EXPECT_EQ(p.width, 32);
  EXPECT_EQ(p.height, 16);
  EXPECT_THROW(PadReplicate(p, 0), InvalidArgument);
}

TEST(PadTest, CropRestoresOriginal) {
  const PlanarImage yuv = RgbToYuv420(testing::TexturedImage(45, 37));
  EXPECT_EQ(CropToOriginal(PadReplicate(yuv, 32)), yuv);
}

TEST(PsnrTest, IdenticalPlanesAreInfinite) {
  Plane8 a(8, 8, 17);
  EXPECT_EQ(Psnr(a, a), kPsnrInfinite);
  EXPECT_EQ(FormatPsnr(Psnr(a, a)), "inf");
}

TEST(PsnrTest, UnitErrorIs48Db) {
  Plane8 zero(16, 16, 0), one(16, 16, 1);
  EXPECT_NEAR(Psnr(zero, one), 10.0 * std::log10(255.0 * 255.0), 1e-12);
  EXPECT_NEAR(Psnr(zero, one), 48.13, 0.005);
}

TEST(PsnrTest, PeakErrorIsZeroDb) {
  Plane8 zero(4, 4, 0), full(4, 4, 255);
  EXPECT_NEAR(Psnr(zero, full), 0.0, 1e-12);
}

TEST(PsnrTest, SymmetricAndChecksDims) {
  const PlanarImage t = testing::TexturedImage(32, 32);
  EXPECT_DOUBLE_EQ(Psnr(t.planes[0], t.planes[1]), Psnr(t.planes[1], t.planes[0]));
  EXPECT_THROW(Psnr(Plane8(2, 2), Plane8(2, 3)), InvalidArgument);
}

TEST(BlockVarianceTest, ConstantPlaneIsZero) {
  const PlaneF v = BlockVarianceMap(Plane8(32, 32, 99));
  for (double x : v.data()) EXPECT_EQ(x, 0.0);
}

TEST(BlockVarianceTest, Checkerboard) {
  Plane8 p(16, 16);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) p.at(x, y) = (x + y) % 2 ? 255 : 0;
  }
  EXPECT_DOUBLE_EQ(BlockVarianceMap(p).at(0, 0), 16256.25);
}

TEST(BlockVarianceTest, ShapeAndPadding) {
  const PlaneF v = BlockVarianceMap(Plane8(32, 16));
  EXPECT_EQ(v.width(), 2);
  EXPECT_EQ(v.height(), 1);
  EXPECT_THROW(BlockVarianceMap(Plane8(20, 16)), InvalidArgument);
}

class PnmTest : public ::testing::Test {
 protected:
  std::filesystem::path Tmp(const std::string& name) {
    return std::filesystem::temp_directory_path() /
           ("qmc_pnm_" + std::to_string(::getpid()) + "_" + name);
  }
};

TEST_F(PnmTest, PpmRoundTrip) {
  const PlanarImage img = testing::TexturedImage(23, 11);
  const auto path = Tmp("a.ppm");
  WritePpm(path.string(), img);
  EXPECT_EQ(ReadPpm(path.string()), img);
  std::filesystem::remove(path);
}

TEST_F(PnmTest, PgmRoundTripAndGrayPpm) {
  Plane8 p(7, 3);
  for (size_t i = 0; i < p.size(); ++i) p.data()[i] = static_cast<uint8_t>(i * 11);
  const auto path = Tmp("a.pgm");
  WritePgm(path.string(), p);
  EXPECT_EQ(ReadPgm(path.string()), p);
  const PlanarImage gray = ReadPpm(path.string());
  EXPECT_EQ(gray.planes[0], p);
  EXPECT_EQ(gray.planes[2], p);
  std::filesystem::remove(path);
}

TEST_F(PnmTest, HeaderCommentsAccepted) {
  const std::string text = "P5\n# comment\n2 # width\n1\n255\n";
  std::vector<uint8_t> bytes(text.begin(), text.end());
  bytes.push_back(7);
  bytes.push_back(9);
  const PnmData d = DecodePnm(bytes);
  EXPECT_EQ(d.width, 2);
  EXPECT_EQ(d.samples, (std::vector<uint8_t>{7, 9}));
}

TEST_F(PnmTest, RejectsMalformed) {
  auto bytes = [](const std::string& s) { return std::vector<uint8_t>(s.begin(), s.end()); };
  EXPECT_THROW(DecodePnm(bytes("P3\n1 1\n255\n0 0 0")), FormatError);
  EXPECT_THROW(DecodePnm(bytes("P5\n2 2\n65535\n")), FormatError);
  EXPECT_THROW(DecodePnm(bytes("P5\n2 2\n255\nab")), FormatError);
  EXPECT_THROW(DecodePnm(bytes("P6\nx 2\n255\n")), FormatError);
  EXPECT_THROW(ReadPpm(Tmp("missing.ppm").string()), FormatError);
}

}  // namespace
}  // namespace qmc
