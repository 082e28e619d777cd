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
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "qmc/codec.hpp"
#include "qmc/rd_optimize.hpp"

namespace qmc {
namespace {

PlaneF RandomPlane(int w, int h, uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0, 255);
  PlaneF p(w, h);
  for (double& v : p.data()) v = u(rng);
  return p;
}

TEST(AnalysisTest, ConstantBlockDcIsSixteenV) {
  // Oracle: sum of v over 256 pixels times the orthonormal DC basis 1/16.
  const double v = 37.0;
  const double dc = 256 * v * (1.0 / std::sqrt(16.0)) * (1.0 / std::sqrt(16.0));
  const LatentTensor y = Analysis(PlaneF(32, 32, v), 16);
  EXPECT_NEAR(y.at(0, 1, 1), dc, 1e-9);
  EXPECT_NEAR(y.at(0, 1, 1), 16 * v, 1e-9);
  for (int c = 1; c < 16; ++c) EXPECT_NEAR(y.at(c, 0, 1), 0.0, 1e-9);
  const LatentTensor zero = Analysis(PlaneF(32, 32, 0.0), 4);
  for (double x : zero.data()) EXPECT_EQ(x, 0.0);
}

TEST(AnalysisTest, FullBasisReconstructs) {
  const PlaneF p = RandomPlane(64, 32, 1);
  const PlaneF back = Synthesis(Analysis(p, kBlockCoeffs));
  for (size_t k = 0; k < p.size(); ++k) ASSERT_NEAR(back.data()[k], p.data()[k], 1e-6);
  EXPECT_THROW(Analysis(PlaneF(20, 16), 4), InvalidArgument);
  EXPECT_THROW(Analysis(p, 0), InvalidArgument);
}

TEST(HyperTest, PooledMeanAndScale) {
  LatentTensor y(1, 2, 2);
  y.at(0, 1, 1) = 4;
  const HyperLatent z = HyperEncode(y);
  EXPECT_EQ(z.mean.at(0, 0, 0), 1.0);
  EXPECT_EQ(z.scale.at(0, 0, 0), 1.5);
  const HyperLatent c = HyperEncode(LatentTensor(3, 8, 8, 5.0));
  EXPECT_EQ(c.mean.rows(), 4);
  EXPECT_EQ(c.mean.cols(), 4);
  for (double v : c.mean.data()) EXPECT_EQ(v, 5.0);
  for (double v : c.scale.data()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(HyperEncode(LatentTensor(1, 3, 2)), InvalidArgument);
}

TEST(HyperTest, PredictMuSigma) {
  HyperLatent z{LatentTensor(2, 2, 2, 7.0), LatentTensor(2, 2, 2, 0.0)};
  MuSigma ms = PredictMuSigma(z, GainVector::Ones(2));
  for (double v : ms.mu.data()) EXPECT_EQ(v, 7.0);
  for (double v : ms.sigma.data()) EXPECT_EQ(v, kSigmaMin);
  z.scale.at(1, 0, 1) = 3.0;
  ms = PredictMuSigma(z, GainVector::Ones(2));
  EXPECT_EQ(ms.sigma.at(1, 1, 2), SnapSigma(3.0));
  EXPECT_EQ(ms.sigma.at(1, 1, 3), SnapSigma(3.0));
}

TEST(HyperTest, CodingRoundTrip) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> d(-300, 300);
  HyperLatent z{LatentTensor(3, 4, 5), LatentTensor(3, 4, 5)};
  for (double& v : z.mean.data()) v = d(rng);
  for (double& v : z.scale.data()) v = std::abs(d(rng));
  BitLedger enc_ledger(3, 4, 5), dec_ledger;
  const auto bytes = EncodeHyper(z, &enc_ledger);
  const HyperLatent back = DecodeHyper(bytes, 3, 4, 5, &dec_ledger);
  EXPECT_EQ(back.mean, z.mean);
  EXPECT_EQ(back.scale, z.scale);
  EXPECT_DOUBLE_EQ(dec_ledger.Total(), enc_ledger.Total());
}

TEST(HyperTest, EqualValuesCostEqualBitsEverywhere) {
  HyperLatent z{LatentTensor(4, 3, 5, 0.0), LatentTensor(4, 3, 5, 2.0)};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 5; ++j) z.mean.at(0, i, j) = 1234;
  }
  BitLedger ledger(4, 3, 5);
  EncodeHyper(z, &ledger);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(ledger.CellTotal(i, j), ledger.CellTotal(0, 0));
  }
}

TEST(HyperTest, BadPriorModeRaises) {
  // Six all-ones bits decode as prior mode 63, beyond the exponent alphabet.
  const std::vector<uint8_t> junk(16, 0xFF);
  EXPECT_THROW(DecodeHyper(junk, 1, 1, 1, nullptr), DecodeError);
}

TEST(CodecTest, ShapeChain) {
  std::mt19937 rng(12);
  for (int t = 0; t < 6; ++t) {
    const int w = 1 + static_cast<int>(rng() % 150), h = 1 + static_cast<int>(rng() % 150);
    const EncodeResult e = Encode(testing::TexturedImage(w, h), CodecConfig{});
    const int pw = RoundUp(w, 32), ph = RoundUp(h, 32);
    EXPECT_EQ(e.y.y.channels(), 16);
    EXPECT_EQ(e.y.y.rows(), ph / 16);
    EXPECT_EQ(e.y.y.cols(), pw / 16);
    EXPECT_EQ(e.y.z_hat.mean.rows(), ph / 32);
    EXPECT_EQ(e.y.z_hat.scale.cols(), pw / 32);
    EXPECT_EQ(e.uv.y.channels(), 16);
    EXPECT_EQ(e.recon.image.width, w);
    EXPECT_EQ(e.recon.image.height, h);
  }
}

TEST(CodecTest, DeterministicAndDecodable) {
  const PlanarImage img = testing::TexturedImage(96, 64);
  CodecConfig cfg;
  cfg.beta = 3.0;
  const EncodeResult a = Encode(img, cfg);
  const EncodeResult b = Encode(img, cfg);
  EXPECT_EQ(a.bytes, b.bytes);
  const DecodeResult d1 = Decode(a.bytes);
  const DecodeResult d2 = Decode(a.bytes);
  EXPECT_EQ(d1.recon.image, a.recon.image);
  EXPECT_EQ(d2.recon.image, d1.recon.image);
  EXPECT_DOUBLE_EQ(Psnr(a.source.planes[0], d1.recon.image.planes[0]), a.psnr_y);
  EXPECT_DOUBLE_EQ(d1.y.residual_ledger.Total(), a.y.residual_ledger.Total());
  EXPECT_EQ(a.bytes.size(), a.stream.TotalBytes());
  EXPECT_DOUBLE_EQ(a.bpp, a.bytes.size() * 8.0 / (96 * 64));
}

TEST(CodecTest, DecodeWithQmapAndOptions) {
  const PlanarImage img = testing::TexturedImage(64, 64);
  CodecConfig cfg;
  cfg.qmap = QualityIndexMap(4, 4);
  cfg.qmap->set(1, 2, 5);
  cfg.qmap->set(3, 0, -7);
  cfg.qpred = QPredMode::kAverage;
  cfg.interpolation = InterpolationMode::kPaperLiteral;
  cfg.beta = 1.5;
  const EncodeResult e = Encode(img, cfg);
  const DecodeResult d = Decode(e.bytes);
  ASSERT_TRUE(d.qmap.has_value());
  EXPECT_EQ(*d.qmap, *cfg.qmap);
  EXPECT_EQ(d.recon.image, e.recon.image);

  cfg.sigma_gain = false;
  const EncodeResult n = Encode(img, cfg);
  EXPECT_EQ(Decode(n.bytes).recon.image, n.recon.image);
}

TEST(CodecTest, ConstantGrayIsTransparent) {
  // Near-minimal: beyond the fixed container framing, the payload costs less
  // than 0.05 bpp.
  const EncodeResult e = Encode(testing::ConstantImage(128, 128, 128, 128, 128), CodecConfig{});
  EXPECT_GE(e.psnr_y, 50.0);
  const double framing = (kHeaderBytes + 5 * 4) * 8.0;
  EXPECT_LT((e.total_bits() - framing) / (128.0 * 128.0), 0.05);
}

TEST(CodecTest, ZeroQmapMatchesNoQmap) {
  const PlanarImage img = testing::TexturedImage(64, 96);
  CodecConfig plain;
  plain.beta = 2.0;
  CodecConfig zero = plain;
  zero.qmap = QualityIndexMap(6, 4);
  const EncodeResult a = Encode(img, plain);
  const EncodeResult b = Encode(img, zero);
  EXPECT_EQ(a.stream.y_hyper, b.stream.y_hyper);
  EXPECT_EQ(a.stream.y_residual, b.stream.y_residual);
  EXPECT_EQ(a.stream.uv_hyper, b.stream.uv_hyper);
  EXPECT_EQ(a.stream.uv_residual, b.stream.uv_residual);
  EXPECT_TRUE(a.stream.qmap.empty());
  EXPECT_FALSE(b.stream.qmap.empty());
}

TEST(CodecTest, RejectsBadConfigAndMap) {
  const PlanarImage img = testing::FlatImage(64, 64);
  CodecConfig c;
  c.channels_uv = 16;
  EXPECT_THROW(Encode(img, c), InvalidArgument);
  c = CodecConfig{};
  c.beta = 0.0;
  EXPECT_THROW(Encode(img, c), InvalidArgument);
  c = CodecConfig{};
  c.qmap = QualityIndexMap(2, 2);
  EXPECT_THROW(Encode(img, c), InvalidArgument);
  c.qmap = QualityIndexMap(4, 4, 12);
  EXPECT_THROW(Encode(img, c), InvalidArgument);
}

TEST(ContainerTest, HeaderLayout) {
  const EncodeResult e = Encode(testing::TexturedImage(40, 20), CodecConfig{});
  const auto& b = e.bytes;
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "QMC1");
  EXPECT_EQ(b[4], kVersion);
  EXPECT_EQ(b[5], 0);
  EXPECT_EQ(b[6] | b[7] << 8, 64);     // padded width
  EXPECT_EQ(b[10] | b[11] << 8, 32);   // padded height
  EXPECT_EQ(b[14] | b[15] << 8, 40);   // original width
  EXPECT_EQ(b[18] | b[19] << 8, 20);   // original height
  EXPECT_EQ(b[22], 16);
  EXPECT_EQ(b[24], 8);
  EXPECT_EQ(b[26] | b[27] << 8 | b[28] << 16, 65536);  // beta 1.0 in Q16.16
  EXPECT_EQ(Bitstream::Parse(b).header, e.stream.header);
}

TEST(ContainerTest, Errors) {
  const std::vector<uint8_t> good = Encode(testing::TexturedImage(32, 32), CodecConfig{}).bytes;
  auto bad = good;
  bad[0] = 'X';
  EXPECT_THROW(Decode(bad), DecodeError);
  bad = good;
  bad[4] = 2;
  EXPECT_THROW(Decode(bad), DecodeError);
  bad = good;
  bad.resize(good.size() - 1);
  EXPECT_THROW(Decode(bad), DecodeError);
  bad = good;
  bad.push_back(0);
  EXPECT_THROW(Decode(bad), DecodeError);
  bad = good;
  bad.resize(20);
  EXPECT_THROW(Decode(bad), DecodeError);
  bad = good;
  bad[6] = 33;  // width not a multiple of 32
  EXPECT_THROW(Decode(bad), DecodeError);
  EXPECT_THROW(Decode(std::vector<uint8_t>{}), DecodeError);
}

TEST(BitsPerBlockTest, ConservesLumaBits) {
  const EncodeResult e = Encode(testing::TexturedImage(128, 96), CodecConfig{});
  const BitDistributionMap m = BitsPerBlock(e.y);
  EXPECT_TRUE(m.latent_grid());
  EXPECT_EQ(m.rows(), 6);
  EXPECT_EQ(m.cols(), 8);
  EXPECT_NEAR(m.Sum(), e.y.TotalBits(), 1e-6);
  EXPECT_NEAR(AllBitsPerBlock(e.y, e.uv).Sum(), e.y.TotalBits() + e.uv.TotalBits(), 1e-6);
}

TEST(BitsPerBlockTest, ConstantImageNearUniform) {
  const EncodeResult e = Encode(testing::ConstantImage(128, 128, 90, 140, 60), CodecConfig{});
  const BitDistributionMap m = BitsPerBlock(e.y);
  EXPECT_LT(BdmVariance(m), 0.1 * m.Mean() * m.Mean());
}

TEST(BitsPerBlockTest, TexturedBlockIsMaximum) {
  PlanarImage img = testing::ConstantImage(128, 128, 120, 120, 120);
  const PlanarImage tex = testing::HighFrequencyImage(16, 16);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) img.planes[c].at(48 + x, 80 + y) = tex.planes[c].at(x, y);
    }
  }
  const BitDistributionMap m = BitsPerBlock(Encode(img, CodecConfig{}).y);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (i != 5 || j != 3) {
        EXPECT_LT(m.at(i, j), m.at(5, 3)) << i << "," << j;
      }
    }
  }
}

// Per-block error of the luma synthesis against the padded source.
std::vector<double> SynthesisBlockSse(const EncodeResult& e) {
  const PlaneF& r = e.recon.y_synthesis;
  const int cols = r.width() / kBlockSize;
  std::vector<double> sse(static_cast<size_t>(cols) * (r.height() / kBlockSize), 0.0);
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) {
      const double d = r.at(x, y) - e.y_source_padded.at(x, y);
      sse[static_cast<size_t>((y / kBlockSize) * cols + x / kBlockSize)] += d * d;
    }
  }
  return sse;
}

TEST(MonotonicityTest, BlockSseAndBitsInConstantIndex) {
  // Steps at k and k + 4 differ by exactly 2, so the quantizer grids nest and
  // every kept coefficient's error can only shrink; the orthonormal synthesis
  // carries that to each block. Output rounding to 8 bits is excluded here;
  // the rounded picture is held to the total-SSE bound.
  const PlanarImage img = testing::TexturedImage(128, 128);
  std::vector<double> prev_sse;
  double prev_bits = -1.0, prev_total = std::numeric_limits<double>::infinity();
  for (int k : {-8, -4, 0, 4, 8}) {
    CodecConfig cfg;
    cfg.qmap = QualityIndexMap(8, 8, k);
    const EncodeResult e = Encode(img, cfg);
    const std::vector<double> sse = SynthesisBlockSse(e);
    const double bits = e.y.TotalBits() + e.uv.TotalBits();
    EXPECT_GE(bits, prev_bits) << "k " << k;
    if (!prev_sse.empty()) {
      for (size_t b = 0; b < sse.size(); ++b) {
        EXPECT_LE(sse[b], prev_sse[b] * (1 + 1e-12)) << "k " << k << " block " << b;
      }
    }
    double total = 0.0;
    for (double v : BlockSse(e.y_source_padded, e.recon.y_padded)) total += v;
    EXPECT_LE(total, prev_total) << "k " << k;
    prev_sse = sse;
    prev_bits = bits;
    prev_total = total;
  }
}

TEST(MonotonicityTest, FullChannelsNearTransparent) {
  for (const PlanarImage& img : {testing::FlatImage(64, 64), testing::TexturedImage(64, 64),
                                 testing::HighFrequencyImage(64, 64)}) {
    CodecConfig cfg;
    cfg.channels_y = kBlockCoeffs;
    cfg.channels_uv = 128;
    cfg.beta = cfg.UnitY().beta_max();
    cfg.qmap = QualityIndexMap(4, 4, 8);
    EXPECT_GT(Encode(img, cfg).psnr_y, 45.0);
  }
}

// Coding g * r under g * sigma with unit gain yields the same payload as the
// codec's own gain path.
TEST(SigmaGainTest, JointScalingLeavesPayloadUnchanged) {
  const PlanarImage img = testing::TexturedImage(128, 128);
  for (double beta : {0.5, 2.0, 5.0, 20.0}) {
    CodecConfig cfg;
    cfg.beta = beta;
    const EncodeResult e = Encode(img, cfg);
    const GainVector g = GainForBeta(cfg.UnitY(), beta);
    const ResidualPayload joint =
        EncodeResidualPayload(ApplyGain(e.y.residual, g), ApplySigmaGain(e.y.sigma_raw, g),
                              GainVector::Ones(16), GainVector::Ones(16), nullptr, nullptr);
    EXPECT_EQ(joint.bytes.size(), e.stream.y_residual.size()) << "beta " << beta;
    EXPECT_EQ(joint.bytes, e.stream.y_residual);
  }
}

TEST(SigmaGainTest, WithoutSigmaGainPayloadChanges) {
  const PlanarImage img = testing::TexturedImage(128, 128);
  CodecConfig cfg;
  cfg.beta = 8.0;
  const EncodeResult with = Encode(img, cfg);
  cfg.sigma_gain = false;
  const EncodeResult without = Encode(img, cfg);
  EXPECT_EQ(with.y.symbols, without.y.symbols);
  EXPECT_NE(with.stream.y_residual, without.stream.y_residual);
}

}  // namespace
}  // namespace qmc
