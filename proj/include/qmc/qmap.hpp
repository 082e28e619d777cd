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

// Spatial quality index map: one integer index per 16x16 block. Index Q
// scales the latent by 2^(Q/4) before rounding, so positive indices spend
// more bits and negative ones fewer.

#ifndef QMC_QMAP_HPP_
#define QMC_QMAP_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmc/bdm.hpp"
#include "qmc/entropy.hpp"
#include "qmc/error.hpp"
#include "qmc/image.hpp"
#include "qmc/tensor.hpp"

namespace qmc {

// Range that can be signalled in a bitstream.
inline constexpr int kQIndexMin = -8;
inline constexpr int kQIndexMax = 8;
// Range accepted in memory, e.g. while combining maps with offsets.
inline constexpr int kQIndexExtMin = -16;
inline constexpr int kQIndexExtMax = 16;

class QualityIndexMap {
 public:
  QualityIndexMap() = default;
  QualityIndexMap(int rows, int cols, int fill = 0)
      : rows_(rows), cols_(cols), q_(static_cast<size_t>(rows) * cols, 0) {
    if (rows < 1 || cols < 1) throw InvalidArgument("QualityIndexMap: empty grid");
    Fill(fill);
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const std::vector<int>& values() const { return q_; }

  int at(int i, int j) const { return q_[Index(i, j)]; }
  void set(int i, int j, int v) {
    CheckRange(v);
    q_[Index(i, j)] = v;
  }
  void Fill(int v) {
    CheckRange(v);
    std::fill(q_.begin(), q_.end(), v);
  }

  bool AllZero() const {
    return std::all_of(q_.begin(), q_.end(), [](int v) { return v == 0; });
  }
  bool Signalable() const {
    return std::all_of(q_.begin(), q_.end(),
                       [](int v) { return v >= kQIndexMin && v <= kQIndexMax; });
  }

  bool operator==(const QualityIndexMap&) const = default;

 private:
  static void CheckRange(int v) {
    if (v < kQIndexExtMin || v > kQIndexExtMax) {
      throw InvalidArgument("quality index " + std::to_string(v) + " out of range");
    }
  }
  size_t Index(int i, int j) const {
    if (i < 0 || i >= rows_ || j < 0 || j >= cols_) {
      throw InvalidArgument("QualityIndexMap: cell out of range");
    }
    return static_cast<size_t>(i) * cols_ + j;
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> q_;
};

// Quantization step 2^(index / 4).
inline double QStep(int index) {
  if (index < kQIndexExtMin || index > kQIndexExtMax) {
    throw InvalidArgument("QStep: index " + std::to_string(index) + " out of range");
  }
  return std::exp2(static_cast<double>(index) / 4.0);
}

enum class QPredMode {
  kHalfDifference,  // (left - top) / 2
  kAverage,         // (left + top) / 2
};

inline const char* QPredModeName(QPredMode m) {
  return m == QPredMode::kHalfDifference ? "half-diff" : "avg";
}

// Neighbours outside the grid read as zero; division truncates toward zero.
inline int PredictQ(const QualityIndexMap& q, int i, int j,
                    QPredMode mode = QPredMode::kHalfDifference) {
  const int left = j > 0 ? q.at(i, j - 1) : 0;
  const int top = i > 0 ? q.at(i - 1, j) : 0;
  return mode == QPredMode::kHalfDifference ? (left - top) / 2 : (left + top) / 2;
}

inline constexpr int kQDeltaAlphabet = 2 * (kQIndexMax - kQIndexMin) + 1;

// Prediction residuals in raster order, before entropy coding.
inline std::vector<int> QmapDeltas(const QualityIndexMap& q,
                                   QPredMode mode = QPredMode::kHalfDifference) {
  std::vector<int> d;
  d.reserve(q.values().size());
  for (int i = 0; i < q.rows(); ++i) {
    for (int j = 0; j < q.cols(); ++j) d.push_back(q.at(i, j) - PredictQ(q, i, j, mode));
  }
  return d;
}

inline std::vector<uint8_t> EncodeQmap(const QualityIndexMap& q,
                                       QPredMode mode = QPredMode::kHalfDifference) {
  if (!q.Signalable()) {
    throw InvalidArgument("EncodeQmap: indices must lie in [-8, 8] to be signalled");
  }
  SymbolEncoder enc;
  AdaptiveModel model(kQDeltaAlphabet);
  for (int d : QmapDeltas(q, mode)) enc.Encode(static_cast<int>(ZigZag(d)), model);
  return enc.Finish();
}

inline QualityIndexMap DecodeQmap(std::span<const uint8_t> stream, int rows, int cols,
                                  QPredMode mode = QPredMode::kHalfDifference) {
  QualityIndexMap q(rows, cols);
  SymbolDecoder dec(stream);
  AdaptiveModel model(kQDeltaAlphabet);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const int v = PredictQ(q, i, j, mode) + UnZigZag(static_cast<uint32_t>(dec.Decode(model)));
      if (v < kQIndexMin || v > kQIndexMax) throw DecodeError("quality map: index out of range");
      q.set(i, j, v);
    }
  }
  return q;
}

enum class QmapDirection { kForward, kInverse };

// Forward multiplies element (i, j) of every channel by QStep(Q[i, j]);
// inverse divides.
inline LatentTensor ApplyQmap(const LatentTensor& t, const QualityIndexMap& q,
                              QmapDirection dir) {
  if (t.rows() != q.rows() || t.cols() != q.cols()) {
    throw InvalidArgument("ApplyQmap: latent grid " + std::to_string(t.rows()) + "x" +
                          std::to_string(t.cols()) + " vs map " + std::to_string(q.rows()) +
                          "x" + std::to_string(q.cols()));
  }
  LatentTensor out = t;
  for (int i = 0; i < t.rows(); ++i) {
    for (int j = 0; j < t.cols(); ++j) {
      const double s = QStep(q.at(i, j));
      for (int c = 0; c < t.channels(); ++c) {
        if (dir == QmapDirection::kForward) {
          out.at(c, i, j) *= s;
        } else {
          out.at(c, i, j) /= s;
        }
      }
    }
  }
  return out;
}

// Map for a grid at half resolution (the chroma latent): each cell takes the
// mean of the luma cells it covers, rounded half away from zero.
inline QualityIndexMap DownsampleQmap(const QualityIndexMap& q, int rows, int cols) {
  QualityIndexMap out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      int sum = 0, n = 0;
      for (int di = 0; di < 2; ++di) {
        for (int dj = 0; dj < 2; ++dj) {
          const int si = std::min(2 * i + di, q.rows() - 1);
          const int sj = std::min(2 * j + dj, q.cols() - 1);
          sum += q.at(si, sj);
          ++n;
        }
      }
      out.set(i, j, static_cast<int>(std::lround(static_cast<double>(sum) / n)));
    }
  }
  return out;
}

// Binary ROI mask (non-zero = inside) at padded picture scale. A block is
// ROI when at least half of its pixels are set.
inline QualityIndexMap QmapFromRoi(const Plane8& mask, int hi = 6, int lo = -6) {
  if (mask.width() % 16 != 0 || mask.height() % 16 != 0 || mask.empty()) {
    throw InvalidArgument("QmapFromRoi: mask must be padded to a multiple of 16");
  }
  QualityIndexMap q(mask.height() / 16, mask.width() / 16);
  for (int i = 0; i < q.rows(); ++i) {
    for (int j = 0; j < q.cols(); ++j) {
      int set = 0;
      for (int y = 0; y < 16; ++y) {
        const uint8_t* row = mask.Row(i * 16 + y) + j * 16;
        for (int x = 0; x < 16; ++x) set += row[x] != 0;
      }
      q.set(i, j, 2 * set >= 256 ? hi : lo);
    }
  }
  return q;
}

// Five levels relative to the mean m of the map:
// [0, m) -> -1, [m, 1.5m) -> 0, [1.5m, 2.5m) -> 1, [2.5m, 4m) -> 2, >= 4m -> 3.
inline QualityIndexMap QmapFromBdm(const BitDistributionMap& bdm) {
  if (!bdm.latent_grid()) {
    throw InvalidArgument("QmapFromBdm: map must be downsampled to the latent grid");
  }
  if (bdm.values().empty()) throw InvalidArgument("QmapFromBdm: empty map");
  const double m = bdm.Mean();
  QualityIndexMap q(bdm.rows(), bdm.cols());
  if (!(m > 0.0)) return q;
  for (int i = 0; i < q.rows(); ++i) {
    for (int j = 0; j < q.cols(); ++j) {
      const double v = bdm.at(i, j);
      int idx = 3;
      if (v < m) {
        idx = -1;
      } else if (v < 1.5 * m) {
        idx = 0;
      } else if (v < 2.5 * m) {
        idx = 1;
      } else if (v < 4.0 * m) {
        idx = 2;
      }
      q.set(i, j, idx);
    }
  }
  return q;
}

// Block variances split into `levels` equal-count groups by rank; the lowest
// group gets `lowest` and each higher group one more. Ties share the level of
// their lowest rank.
inline QualityIndexMap QmapFromVariance(const Plane8& luma, int levels = 5, int lowest = -4) {
  if (levels < 1) throw InvalidArgument("QmapFromVariance: levels must be >= 1");
  const PlaneF var = BlockVarianceMap(luma, 16);
  std::vector<double> sorted = var.data();
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  QualityIndexMap q(var.height(), var.width());
  for (int i = 0; i < q.rows(); ++i) {
    for (int j = 0; j < q.cols(); ++j) {
      const size_t below = static_cast<size_t>(
          std::lower_bound(sorted.begin(), sorted.end(), var.at(j, i)) - sorted.begin());
      const int level = std::min<int>(levels - 1, static_cast<int>(below * levels / n));
      q.set(i, j, lowest + level);
    }
  }
  return q;
}

inline nlohmann::json QmapToJson(const QualityIndexMap& q) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < q.rows(); ++i) {
    std::vector<int> r(static_cast<size_t>(q.cols()));
    for (int j = 0; j < q.cols(); ++j) r[static_cast<size_t>(j)] = q.at(i, j);
    rows.push_back(r);
  }
  return {{"w", q.cols()}, {"h", q.rows()}, {"q", rows}};
}

inline QualityIndexMap QmapFromJson(const nlohmann::json& j) {
  try {
    const int w = j.at("w").get<int>();
    const int h = j.at("h").get<int>();
    const auto rows = j.at("q").get<std::vector<std::vector<int>>>();
    if (static_cast<int>(rows.size()) != h) throw FormatError("qmap: row count does not match h");
    QualityIndexMap q(h, w);
    for (int i = 0; i < h; ++i) {
      if (static_cast<int>(rows[static_cast<size_t>(i)].size()) != w) {
        throw FormatError("qmap: row " + std::to_string(i) + " does not match w");
      }
      for (int k = 0; k < w; ++k) q.set(i, k, rows[static_cast<size_t>(i)][static_cast<size_t>(k)]);
    }
    return q;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("qmap: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("qmap: ") + e.what());
  }
}

// One pixel per cell, gray = Q + 8.
inline Plane8 QmapToPgm(const QualityIndexMap& q) {
  if (!q.Signalable()) throw InvalidArgument("QmapToPgm: indices outside [-8, 8]");
  Plane8 p(q.cols(), q.rows());
  for (int i = 0; i < q.rows(); ++i) {
    for (int j = 0; j < q.cols(); ++j) p.at(j, i) = static_cast<uint8_t>(q.at(i, j) + 8);
  }
  return p;
}

inline QualityIndexMap QmapFromPgm(const Plane8& p) {
  QualityIndexMap q(p.height(), p.width());
  for (int i = 0; i < q.rows(); ++i) {
    for (int j = 0; j < q.cols(); ++j) {
      const int v = p.at(j, i) - 8;
      if (v < kQIndexMin || v > kQIndexMax) throw FormatError("qmap PGM: level outside 0..16");
      q.set(i, j, v);
    }
  }
  return q;
}

}  // namespace qmc

#endif  // QMC_QMAP_HPP_
