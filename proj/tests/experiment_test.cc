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

#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "qmc/experiment.hpp"

namespace qmc {
namespace {

Trace UniformTrace(int w, int h, int block, double bits) {
  Trace t{w, h, {}};
  for (int y = 0; y < h; y += block) {
    for (int x = 0; x < w; x += block) {
      t.blocks.push_back({x, y, std::min(block, w - x), std::min(block, h - y), bits});
    }
  }
  return t;
}

TEST(RoiExperimentTest, CenteredRoiImprovesRoiAndSavesBackground) {
  const PlanarImage img = testing::TexturedImage();
  const ExperimentReport r = RoiExperiment(img, testing::CenteredRoiMask(), CodecConfig{});
  EXPECT_EQ(r.experiment, "roi");
  EXPECT_EQ(r.rows.size(), 2u);
  EXPECT_GT(r.Metric("roi_roi_psnr_y"), r.Metric("uniform_roi_psnr_y"));
  EXPECT_LT(r.Metric("roi_background_bpp"), r.Metric("uniform_background_bpp"));
  EXPECT_GT(r.Metric("roi_roi_region_bpp"), r.Metric("uniform_roi_region_bpp"));
  EXPECT_THROW(r.Metric("nope"), InvalidArgument);
}

TEST(RoiExperimentTest, AllWhiteMaskEqualsConstantHi) {
  const PlanarImage img = testing::TexturedImage(64, 64);
  const ExperimentReport r = RoiExperiment(img, Plane8(64, 64, 255), CodecConfig{});
  CodecConfig hi;
  hi.qmap = QualityIndexMap(4, 4, 6);
  const EncodeResult e = Encode(img, hi);
  EXPECT_DOUBLE_EQ(r.Metric("roi_bpp"), e.bpp);
  EXPECT_DOUBLE_EQ(r.rows[1].psnr_y, e.psnr_y);
}

TEST(RoiExperimentTest, EqualIndicesGiveIdenticalRuns) {
  const PlanarImage img = testing::TexturedImage(64, 64);
  const ExperimentReport r =
      RoiExperiment(img, testing::CenteredRoiMask(64, 64), CodecConfig{}, 0, 0);
  EXPECT_EQ(r.Metric("uniform_bpp"), r.Metric("roi_bpp"));
  EXPECT_EQ(r.Metric("uniform_roi_psnr_y"), r.Metric("roi_roi_psnr_y"));
  EXPECT_EQ(r.Metric("bit_savings"), 0.0);
  EXPECT_THROW(RoiExperiment(img, Plane8(32, 64), CodecConfig{}), InvalidArgument);
}

TEST(QmapFromTraceTest, UniformTraceGivesZeroMap) {
  EXPECT_TRUE(QmapFromTrace(UniformTrace(64, 64, 8, 5), 64, 64).AllZero());
  const QualityIndexMap odd = QmapFromTrace(UniformTrace(50, 40, 10, 3), 64, 64);
  EXPECT_EQ(odd.rows(), 4);
  EXPECT_EQ(odd.cols(), 4);
}

TEST(VvcQmapExperimentTest, UniformTraceHasZeroDelta) {
  const PlanarImage img = testing::TexturedImage(64, 64);
  const ExperimentReport r =
      VvcQmapExperiment(img, UniformTrace(64, 64, 16, 50), CodecConfig{}, {0.6});
  EXPECT_EQ(r.Metric("delta_psnr_y"), 0.0);
  EXPECT_LT(r.Metric("plain_rel_error"), 0.10);
}

TEST(VvcQmapExperimentTest, ConcentratedTraceWithinTolerance) {
  const PlanarImage img = testing::TexturedImage(128, 128);
  Trace t = UniformTrace(128, 128, 16, 20);
  for (auto& b : t.blocks) {
    if (b.x >= 64) b.bits = 200;
  }
  const ExperimentReport r = VvcQmapExperiment(img, t, CodecConfig{}, {0.6});
  EXPECT_LT(r.Metric("qmap_rel_error"), 0.10);
  EXPECT_LT(r.Metric("plain_rel_error"), 0.10);
  EXPECT_NE(ReportToText(r).find("VM + Q map"), std::string::npos);
  EXPECT_EQ(ReportToJson(r)["rows"].size(), 2u);
  EXPECT_THROW(VvcQmapExperiment(img, UniformTrace(64, 64, 16, 1), CodecConfig{}, {0.6}),
               InvalidArgument);
}

TEST(OverheadReportTest, Ordering) {
  const PlanarImage img = testing::TexturedImage(128, 128);
  CodecConfig cfg;
  cfg.beta = 8.0;
  const ExperimentReport zero = OverheadReport(img, QualityIndexMap(8, 8), cfg);
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> d(-8, 8);
  QualityIndexMap random(8, 8);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) random.set(i, j, d(rng));
  }
  const ExperimentReport rnd = OverheadReport(img, random, cfg);
  EXPECT_LT(zero.Metric("fraction"), 0.01);
  EXPECT_GT(rnd.Metric("fraction"), zero.Metric("fraction"));
  EXPECT_DOUBLE_EQ(zero.Metric("fraction"),
                   zero.Metric("qmap_bits") / zero.Metric("total_bits"));
}

TEST(ReportTest, JsonCarriesHashAndInfinity) {
  ExperimentReport r;
  r.experiment = "x";
  r.config_hash = ConfigHash(CodecConfig{});
  r.rows.push_back({"a", std::nullopt, 0.5, kPsnrInfinite, 40, 41, 0, 0});
  r.metrics = {{"m", 1.5}};
  const nlohmann::json j = ReportToJson(r);
  EXPECT_EQ(j["rows"][0]["psnr_y"], "inf");
  EXPECT_TRUE(j["rows"][0]["target_bpp"].is_null());
  EXPECT_EQ(j["config_hash"].get<std::string>().size(), 16u);
  EXPECT_EQ(j["metrics"]["m"], 1.5);
  CodecConfig other;
  other.beta = 2;
  EXPECT_NE(ConfigHash(other), r.config_hash);
}

}  // namespace
}  // namespace qmc
