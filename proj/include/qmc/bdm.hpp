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

// Bit distribution maps (BDM): per-block bit costs from encoder traces or
// from the codec's own ledger, regrouping onto a 16x16 grid, pairwise
// normalization, variance and rendering.

#ifndef QMC_BDM_HPP_
#define QMC_BDM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmc/error.hpp"
#include "qmc/image.hpp"

namespace qmc {

struct BlockBitRecord {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  double bits = 0.0;

  std::string Describe() const {
    return "(x=" + std::to_string(x) + ", y=" + std::to_string(y) +
           ", w=" + std::to_string(w) + ", h=" + std::to_string(h) + ")";
  }
};

// Raised for overlap, coverage gaps and out-of-picture records.
class TraceError : public FormatError {
 public:
  explicit TraceError(const std::string& what) : FormatError(what) {}
};

struct Trace {
  int width = 0;
  int height = 0;
  std::vector<BlockBitRecord> blocks;
};

class BitDistributionMap {
 public:
  enum class Geometry { kUniform, kRecords };

  // Uniform grid of `block`-sized cells over a width x height picture.
  static BitDistributionMap Uniform(int width, int height, int block) {
    if (width < 1 || height < 1 || block < 1) {
      throw InvalidArgument("BitDistributionMap: bad geometry");
    }
    BitDistributionMap m;
    m.geometry_ = Geometry::kUniform;
    m.width_ = width;
    m.height_ = height;
    m.block_ = block;
    m.values_ = PlaneF((width + block - 1) / block, (height + block - 1) / block);
    return m;
  }

  static BitDistributionMap FromRecords(const Trace& trace) {
    BitDistributionMap m;
    m.geometry_ = Geometry::kRecords;
    m.width_ = trace.width;
    m.height_ = trace.height;
    m.records_ = trace.blocks;
    return m;
  }

  Geometry geometry() const { return geometry_; }
  int width() const { return width_; }
  int height() const { return height_; }
  int block() const { return block_; }
  // True once re-tagged to one cell per latent element.
  bool latent_grid() const { return latent_grid_; }
  void set_latent_grid(bool v) { latent_grid_ = v; }

  int cols() const { return values_.width(); }
  int rows() const { return values_.height(); }
  double& at(int row, int col) { return values_.at(col, row); }
  double at(int row, int col) const { return values_.at(col, row); }
  const PlaneF& values() const { return values_; }
  PlaneF& values() { return values_; }
  const std::vector<BlockBitRecord>& records() const { return records_; }

  double Max() const {
    if (geometry_ == Geometry::kRecords) {
      double m = 0.0;
      for (const auto& r : records_) m = std::max(m, r.bits);
      return m;
    }
    return values_.empty() ? 0.0
                           : *std::max_element(values_.data().begin(), values_.data().end());
  }

  double Sum() const {
    double s = 0.0;
    if (geometry_ == Geometry::kRecords) {
      for (const auto& r : records_) s += r.bits;
    } else {
      for (double v : values_.data()) s += v;
    }
    return s;
  }

  double Mean() const {
    if (geometry_ == Geometry::kRecords) {
      return records_.empty() ? 0.0 : Sum() / static_cast<double>(records_.size());
    }
    return values_.empty() ? 0.0 : Sum() / static_cast<double>(values_.size());
  }

 private:
  Geometry geometry_ = Geometry::kUniform;
  int width_ = 0;
  int height_ = 0;
  int block_ = 16;
  bool latent_grid_ = false;
  PlaneF values_;
  std::vector<BlockBitRecord> records_;
};

// Validates records against the picture: in bounds, pairwise disjoint and
// jointly covering every pixel.
inline void ValidateTrace(const Trace& trace) {
  if (trace.width < 1 || trace.height < 1) throw TraceError("trace: empty picture");
  std::vector<int32_t> owner(static_cast<size_t>(trace.width) * trace.height, -1);
  for (size_t k = 0; k < trace.blocks.size(); ++k) {
    const BlockBitRecord& r = trace.blocks[k];
    if (r.w < 1 || r.h < 1) throw TraceError("trace: block " + r.Describe() + " has empty size");
    if (r.x < 0 || r.y < 0 || r.x + r.w > trace.width || r.y + r.h > trace.height) {
      throw TraceError("trace: block " + r.Describe() + " extends outside the picture");
    }
    if (!(r.bits >= 0.0) || !std::isfinite(r.bits)) {
      throw TraceError("trace: block " + r.Describe() + " has invalid bits");
    }
    for (int y = r.y; y < r.y + r.h; ++y) {
      for (int x = r.x; x < r.x + r.w; ++x) {
        int32_t& o = owner[static_cast<size_t>(y) * trace.width + x];
        if (o >= 0) {
          throw TraceError("trace: block " + r.Describe() + " overlaps block " +
                           trace.blocks[static_cast<size_t>(o)].Describe() +
                           " at pixel (" + std::to_string(x) + ", " + std::to_string(y) + ")");
        }
        o = static_cast<int32_t>(k);
      }
    }
  }
  for (int y = 0; y < trace.height; ++y) {
    for (int x = 0; x < trace.width; ++x) {
      if (owner[static_cast<size_t>(y) * trace.width + x] < 0) {
        throw TraceError("trace: coverage gap at pixel (" + std::to_string(x) + ", " +
                         std::to_string(y) + ")");
      }
    }
  }
}

inline Trace TraceFromJson(const nlohmann::json& j) {
  Trace t;
  try {
    t.width = j.at("width").get<int>();
    t.height = j.at("height").get<int>();
    for (const auto& b : j.at("blocks")) {
      t.blocks.push_back({b.at("x").get<int>(), b.at("y").get<int>(), b.at("w").get<int>(),
                          b.at("h").get<int>(), b.at("bits").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("trace: ") + e.what());
  }
  ValidateTrace(t);
  return t;
}

// Parses the JSON trace schema
// {"width":W,"height":H,"blocks":[{"x","y","w","h","bits"},...]}.
inline Trace ParseTrace(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("trace: malformed JSON: ") + e.what());
  }
  return TraceFromJson(j);
}

inline nlohmann::json TraceToJson(const Trace& t) {
  nlohmann::json j{{"width", t.width}, {"height", t.height}, {"blocks", nlohmann::json::array()}};
  for (const auto& b : t.blocks) {
    j["blocks"].push_back({{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}, {"bits", b.bits}});
  }
  return j;
}

// Area-proportional redistribution of record bits onto 16x16 cells.
inline BitDistributionMap Regroup16(const Trace& trace) {
  constexpr int kBlock = 16;
  BitDistributionMap m = BitDistributionMap::Uniform(trace.width, trace.height, kBlock);
  for (const auto& r : trace.blocks) {
    const double area = static_cast<double>(r.w) * r.h;
    for (int cy = r.y / kBlock; cy * kBlock < r.y + r.h; ++cy) {
      const int oy = std::min(r.y + r.h, (cy + 1) * kBlock) - std::max(r.y, cy * kBlock);
      for (int cx = r.x / kBlock; cx * kBlock < r.x + r.w; ++cx) {
        const int ox = std::min(r.x + r.w, (cx + 1) * kBlock) - std::max(r.x, cx * kBlock);
        m.at(cy, cx) += r.bits * (static_cast<double>(ox) * oy / area);
      }
    }
  }
  return m;
}

struct NormalizedPair {
  BitDistributionMap a;
  BitDistributionMap b;
  double upper = 0.0;
};

// Divides both maps by the larger of their maxima so they share [0, 1].
inline NormalizedPair NormalizePair(const BitDistributionMap& a, const BitDistributionMap& b) {
  if (a.geometry() != BitDistributionMap::Geometry::kUniform ||
      b.geometry() != BitDistributionMap::Geometry::kUniform || a.rows() != b.rows() ||
      a.cols() != b.cols() || a.block() != b.block()) {
    throw InvalidArgument("NormalizePair: maps must share a uniform geometry");
  }
  const double upper = std::max(a.Max(), b.Max());
  if (!(upper > 0.0)) throw InvalidArgument("NormalizePair: both maps are all zero");
  NormalizedPair out{a, b, upper};
  for (double& v : out.a.values().data()) v /= upper;
  for (double& v : out.b.values().data()) v /= upper;
  return out;
}

// Population variance over all cells.
inline double BdmVariance(const BitDistributionMap& map) {
  const auto& v = map.values().data();
  if (v.empty()) return 0.0;
  const double mean = map.Mean();
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size());
}

// Re-tags a picture-aligned uniform-16 map as one value per latent element.
inline BitDistributionMap Downsample16(const BitDistributionMap& map) {
  if (map.geometry() != BitDistributionMap::Geometry::kUniform || map.block() != 16) {
    throw InvalidArgument("Downsample16: map must use uniform 16x16 geometry");
  }
  if (map.width() % 16 != 0 || map.height() % 16 != 0) {
    throw InvalidArgument("Downsample16: picture " + std::to_string(map.width()) + "x" +
                          std::to_string(map.height()) + " is not divisible by 16");
  }
  BitDistributionMap out = map;
  out.set_latent_grid(true);
  return out;
}

// Extends a latent-grid map to `rows` x `cols` by edge replication.
inline BitDistributionMap PadLatentGrid(const BitDistributionMap& map, int rows, int cols) {
  BitDistributionMap out = BitDistributionMap::Uniform(cols * 16, rows * 16, 16);
  out.values() = PadPlane(map.values(), cols, rows);
  out.set_latent_grid(true);
  return out;
}

// Gray level round(255 * value / upper) per cell, or per record for
// native-geometry maps.
inline Plane8 RenderPgm(const BitDistributionMap& map, double upper) {
  if (!(upper > 0.0)) throw InvalidArgument("RenderPgm: upper must be > 0");
  Plane8 img(map.width(), map.height());
  auto level = [upper](double v) { return ClampToByte(255.0 * v / upper); };
  if (map.geometry() == BitDistributionMap::Geometry::kRecords) {
    for (const auto& r : map.records()) {
      const uint8_t g = level(r.bits);
      for (int y = r.y; y < r.y + r.h; ++y) {
        for (int x = r.x; x < r.x + r.w; ++x) img.at(x, y) = g;
      }
    }
    return img;
  }
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      img.at(x, y) = level(map.at(y / map.block(), x / map.block()));
    }
  }
  return img;
}

inline nlohmann::json BdmToJson(const BitDistributionMap& map) {
  nlohmann::json values = nlohmann::json::array();
  for (int i = 0; i < map.rows(); ++i) {
    std::vector<double> row(static_cast<size_t>(map.cols()));
    for (int j = 0; j < map.cols(); ++j) row[static_cast<size_t>(j)] = map.at(i, j);
    values.push_back(row);
  }
  return {{"width", map.width()}, {"height", map.height()}, {"block", map.block()},
          {"values", values}};
}

inline BitDistributionMap BdmFromJson(const nlohmann::json& j) {
  try {
    BitDistributionMap m = BitDistributionMap::Uniform(
        j.at("width").get<int>(), j.at("height").get<int>(), j.at("block").get<int>());
    const auto& values = j.at("values");
    if (static_cast<int>(values.size()) != m.rows()) throw FormatError("bdm: row count mismatch");
    for (int i = 0; i < m.rows(); ++i) {
      const auto row = values[static_cast<size_t>(i)].get<std::vector<double>>();
      if (static_cast<int>(row.size()) != m.cols()) throw FormatError("bdm: column count mismatch");
      for (int k = 0; k < m.cols(); ++k) {
        if (!(row[static_cast<size_t>(k)] >= 0.0)) throw FormatError("bdm: negative value");
        m.at(i, k) = row[static_cast<size_t>(k)];
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bdm: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("bdm: ") + e.what());
  }
}

}  // namespace qmc

#endif  // QMC_BDM_HPP_
