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

// Experiment drivers: ROI coding, trace-derived quality maps and map
// signalling overhead, each producing an ExperimentReport.

#ifndef QMC_EXPERIMENT_HPP_
#define QMC_EXPERIMENT_HPP_

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmc/bdm.hpp"
#include "qmc/codec.hpp"
#include "qmc/image.hpp"
#include "qmc/qmap.hpp"
#include "qmc/rate_match.hpp"

namespace qmc {

struct ReportRow {
  std::string name;
  std::optional<double> target_bpp;
  double bpp = 0.0;
  double psnr_y = 0.0;
  double psnr_u = 0.0;
  double psnr_v = 0.0;
  double qmap_overhead = 0.0;
  double bdm_variance = 0.0;
};

struct ExperimentReport {
  std::string experiment;
  std::string config_hash;
  std::vector<ReportRow> rows;
  // Named scalar results in insertion order.
  std::vector<std::pair<std::string, double>> metrics;

  double Metric(const std::string& key) const {
    for (const auto& [k, v] : metrics) {
      if (k == key) return v;
    }
    throw InvalidArgument("ExperimentReport: no metric '" + key + "'");
  }
};

namespace experiment_internal {

inline nlohmann::json Number(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

inline std::string Fixed(double v, int digits) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace experiment_internal

inline nlohmann::json ReportToJson(const ExperimentReport& r) {
  using experiment_internal::Number;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"name", row.name},
                    {"target_bpp", row.target_bpp ? nlohmann::json(*row.target_bpp) : nlohmann::json(nullptr)},
                    {"bpp", row.bpp},
                    {"psnr_y", Number(row.psnr_y)},
                    {"psnr_u", Number(row.psnr_u)},
                    {"psnr_v", Number(row.psnr_v)},
                    {"qmap_overhead", row.qmap_overhead},
                    {"bdm_variance", row.bdm_variance}});
  }
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [k, v] : r.metrics) metrics[k] = Number(v);
  return {{"experiment", r.experiment},
          {"config_hash", r.config_hash},
          {"rows", rows},
          {"metrics", metrics}};
}

inline std::string ReportToText(const ExperimentReport& r) {
  using experiment_internal::Fixed;
  std::ostringstream os;
  os << "experiment: " << r.experiment << "  config: " << r.config_hash << "\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-18s %8s %8s %8s %8s %8s %9s %9s\n", "name", "target", "bpp",
                "PSNR-Y", "PSNR-U", "PSNR-V", "overhead", "BDM var");
  os << line;
  for (const auto& row : r.rows) {
    std::snprintf(line, sizeof(line), "%-18s %8s %8s %8s %8s %8s %9s %9s\n", row.name.c_str(),
                  row.target_bpp ? Fixed(*row.target_bpp, 4).c_str() : "-",
                  Fixed(row.bpp, 4).c_str(), Fixed(row.psnr_y, 2).c_str(),
                  Fixed(row.psnr_u, 2).c_str(), Fixed(row.psnr_v, 2).c_str(),
                  Fixed(row.qmap_overhead, 4).c_str(), Fixed(row.bdm_variance, 5).c_str());
    os << line;
  }
  for (const auto& [k, v] : r.metrics) os << k << ": " << Fixed(v, 6) << "\n";
  return os.str();
}

// Variance of the luma bit map normalized by its own maximum.
inline double SelfNormalizedVariance(const BitDistributionMap& m) {
  const double upper = m.Max();
  if (!(upper > 0.0)) return 0.0;
  BitDistributionMap n = m;
  for (double& v : n.values().data()) v /= upper;
  return BdmVariance(n);
}

inline ReportRow MakeRow(const std::string& name, const EncodeResult& e,
                         std::optional<double> target = std::nullopt) {
  ReportRow row;
  row.name = name;
  row.target_bpp = target;
  row.bpp = e.bpp;
  row.psnr_y = e.psnr_y;
  row.psnr_u = e.psnr_u;
  row.psnr_v = e.psnr_v;
  row.qmap_overhead = e.qmap_overhead();
  row.bdm_variance = SelfNormalizedVariance(BitsPerBlock(e.y));
  return row;
}

// Region split of the luma block grid and pixel-level mask.
struct RegionStats {
  double bits_in = 0.0;
  double bits_out = 0.0;
  double pixels_in = 0.0;
  double pixels_out = 0.0;
  double sse_in = 0.0;
  double count_in = 0.0;

  double bpp_in() const { return pixels_in > 0 ? bits_in / pixels_in : 0.0; }
  double bpp_out() const { return pixels_out > 0 ? bits_out / pixels_out : 0.0; }
  double psnr_in() const {
    if (count_in == 0) return 0.0;
    if (sse_in == 0) return kPsnrInfinite;
    return 10.0 * std::log10(255.0 * 255.0 * count_in / sse_in);
  }
};

// `roi_blocks` marks latent cells; `mask` is at original picture size.
inline RegionStats MeasureRegions(const EncodeResult& e, const QualityIndexMap& roi_blocks,
                                  const Plane8& mask) {
  RegionStats s;
  const BitDistributionMap bits = AllBitsPerBlock(e.y, e.uv);
  const int w = e.source.width, h = e.source.height;
  for (int i = 0; i < bits.rows(); ++i) {
    for (int j = 0; j < bits.cols(); ++j) {
      const int pw = std::max(0, std::min(kBlockSize, w - j * kBlockSize));
      const int ph = std::max(0, std::min(kBlockSize, h - i * kBlockSize));
      const bool in = roi_blocks.at(i, j) != 0;
      (in ? s.bits_in : s.bits_out) += bits.at(i, j);
      (in ? s.pixels_in : s.pixels_out) += static_cast<double>(pw) * ph;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y) == 0) continue;
      const double d = static_cast<double>(e.source.planes[0].at(x, y)) -
                       e.recon.image.planes[0].at(x, y);
      s.sse_in += d * d;
      s.count_in += 1;
    }
  }
  return s;
}

// Uniform Q = 0 versus the ROI map (hi inside, lo outside). The mask has the
// picture's original size; non-zero marks the ROI.
inline ExperimentReport RoiExperiment(const PlanarImage& image, const Plane8& mask,
                                      const CodecConfig& config, int hi = 6, int lo = -6) {
  if (mask.width() != image.width || mask.height() != image.height) {
    throw InvalidArgument("roi experiment: mask is " + std::to_string(mask.width()) + "x" +
                          std::to_string(mask.height()) + ", image is " +
                          std::to_string(image.width) + "x" + std::to_string(image.height));
  }
  const Plane8 padded_mask =
      PadPlane(mask, RoundUp(image.width, kPadMultiple), RoundUp(image.height, kPadMultiple));
  const QualityIndexMap roi = QmapFromRoi(padded_mask, hi, lo);
  const QualityIndexMap roi_blocks = QmapFromRoi(padded_mask, 1, 0);

  CodecConfig uniform = config;
  uniform.qmap = QualityIndexMap(roi.rows(), roi.cols(), 0);
  CodecConfig with_roi = config;
  with_roi.qmap = roi;
  const EncodeResult a = Encode(image, uniform);
  const EncodeResult b = Encode(image, with_roi);
  const RegionStats sa = MeasureRegions(a, roi_blocks, mask);
  const RegionStats sb = MeasureRegions(b, roi_blocks, mask);

  ExperimentReport r;
  r.experiment = "roi";
  r.config_hash = ConfigHash(with_roi);
  r.rows = {MakeRow("uniform Q=0", a), MakeRow("ROI map", b)};
  r.metrics = {{"uniform_bpp", a.bpp},
               {"roi_bpp", b.bpp},
               {"uniform_roi_region_bpp", sa.bpp_in()},
               {"roi_roi_region_bpp", sb.bpp_in()},
               {"uniform_background_bpp", sa.bpp_out()},
               {"roi_background_bpp", sb.bpp_out()},
               {"uniform_roi_psnr_y", sa.psnr_in()},
               {"roi_roi_psnr_y", sb.psnr_in()},
               {"bit_savings", a.bpp > 0 ? 1.0 - b.bpp / a.bpp : 0.0}};
  return r;
}

// Trace -> 16x16 regrouping -> latent grid -> five-level map, sized to the
// padded picture's latent grid.
inline QualityIndexMap QmapFromTrace(const Trace& trace, int padded_width, int padded_height) {
  BitDistributionMap m = Regroup16(trace);
  if (trace.width % kBlockSize == 0 && trace.height % kBlockSize == 0) {
    m = Downsample16(m);
  } else {
    m.set_latent_grid(true);
  }
  m = PadLatentGrid(m, padded_height / kBlockSize, padded_width / kBlockSize);
  return QmapFromBdm(m);
}

// Rate-matched encodes with and without the trace-derived map.
inline ExperimentReport VvcQmapExperiment(const PlanarImage& image, const Trace& trace,
                                          const CodecConfig& config, const RateTarget& target) {
  if (trace.width != image.width || trace.height != image.height) {
    throw InvalidArgument("vvc-qmap experiment: trace is " + std::to_string(trace.width) + "x" +
                          std::to_string(trace.height) + ", image is " +
                          std::to_string(image.width) + "x" + std::to_string(image.height));
  }
  ValidateTrace(trace);
  const QualityIndexMap q = QmapFromTrace(trace, RoundUp(image.width, kPadMultiple),
                                          RoundUp(image.height, kPadMultiple));
  CodecConfig plain = config;
  plain.qmap.reset();
  CodecConfig mapped = config;
  mapped.qmap = q;
  const RateMatchResult a = MatchRate(image, plain, target);
  const RateMatchResult b = MatchRate(image, mapped, target);

  ExperimentReport r;
  r.experiment = "vvc-qmap";
  r.config_hash = ConfigHash(mapped);
  r.rows = {MakeRow("VM", a.encode, target.bpp), MakeRow("VM + Q map", b.encode, target.bpp)};
  r.metrics = {{"beta_plain", a.beta},
               {"beta_qmap", b.beta},
               {"delta_psnr_y", b.encode.psnr_y - a.encode.psnr_y},
               {"delta_bpp", b.bpp - a.bpp},
               {"plain_rel_error", a.relative_error(target.bpp)},
               {"qmap_rel_error", b.relative_error(target.bpp)}};
  return r;
}

inline ExperimentReport OverheadReport(const PlanarImage& image, const QualityIndexMap& q,
                                       const CodecConfig& config) {
  CodecConfig cfg = config;
  cfg.qmap = q;
  const EncodeResult e = Encode(image, cfg);
  ExperimentReport r;
  r.experiment = "overhead";
  r.config_hash = ConfigHash(cfg);
  r.rows = {MakeRow("Q map", e)};
  r.metrics = {{"qmap_bits", static_cast<double>(e.qmap_bits())},
               {"total_bits", static_cast<double>(e.total_bits())},
               {"fraction", e.qmap_overhead()}};
  return r;
}

}  // namespace qmc

#endif  // QMC_EXPERIMENT_HPP_
