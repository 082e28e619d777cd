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

// Per-block quality index selection minimizing R + beta * D.

#ifndef QMC_RD_OPTIMIZE_HPP_
#define QMC_RD_OPTIMIZE_HPP_

#include <cstdlib>
#include <span>
#include <tuple>
#include <vector>

#include "qmc/codec.hpp"
#include "qmc/error.hpp"
#include "qmc/qmap.hpp"

namespace qmc {

struct RdCost {
  double rate = 0.0;        // bits
  double distortion = 0.0;  // SSE
};

// table[block][k] is the cost of block `block` coded with candidates[k].
using RdTable = std::vector<std::vector<RdCost>>;

// Equal costs prefer index 0, then the smaller |index|, then the smaller index.
inline bool RdPrefer(double cost_a, int a, double cost_b, int b) {
  if (cost_a != cost_b) return cost_a < cost_b;
  return std::make_tuple(a != 0, std::abs(a), a) < std::make_tuple(b != 0, std::abs(b), b);
}

inline std::vector<int> SelectIndices(const RdTable& table, std::span<const int> candidates,
                                      double beta) {
  if (candidates.empty()) throw InvalidArgument("SelectIndices: no candidates");
  std::vector<int> out;
  out.reserve(table.size());
  for (const auto& row : table) {
    if (row.size() != candidates.size()) throw InvalidArgument("SelectIndices: table width");
    int best = candidates[0];
    double best_cost = row[0].rate + beta * row[0].distortion;
    for (size_t k = 1; k < row.size(); ++k) {
      const double cost = row[k].rate + beta * row[k].distortion;
      if (RdPrefer(cost, candidates[k], best_cost, best)) {
        best = candidates[k];
        best_cost = cost;
      }
    }
    out.push_back(best);
  }
  return out;
}

// Squared error of each 16x16 luma block of the padded picture.
inline std::vector<double> BlockSse(const Plane8& a, const Plane8& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InvalidArgument("BlockSse: dimension mismatch");
  }
  const int cols = a.width() / kBlockSize;
  std::vector<double> sse(static_cast<size_t>(cols) * (a.height() / kBlockSize), 0.0);
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      const double d = static_cast<double>(a.at(x, y)) - b.at(x, y);
      sse[static_cast<size_t>((y / kBlockSize) * cols + x / kBlockSize)] += d * d;
    }
  }
  return sse;
}

// Luma rate (residual ledger bits of the cell) and distortion (SSE of the
// block) for every block under one encode.
inline std::vector<RdCost> BlockCosts(const EncodeResult& e) {
  const std::vector<double> sse = BlockSse(e.y_source_padded, e.recon.y_padded);
  const BitLedger& ledger = e.y.residual_ledger;
  std::vector<RdCost> out;
  out.reserve(sse.size());
  for (int i = 0; i < ledger.rows(); ++i) {
    for (int j = 0; j < ledger.cols(); ++j) {
      out.push_back({ledger.CellTotal(i, j), sse[static_cast<size_t>(i * ledger.cols() + j)]});
    }
  }
  return out;
}

// Residual symbols, sigma and reconstruction of a block depend only on that
// block's index, so one constant-map encode per candidate yields every
// block's cost with all other blocks at any fixed index.
inline RdTable BuildRdTable(const PlanarImage& image, const CodecConfig& config,
                            std::span<const int> candidates) {
  const PlanarImage padded = PadReplicate(ToYuv420(image), kPadMultiple);
  const int rows = padded.height / kBlockSize, cols = padded.width / kBlockSize;
  RdTable table(static_cast<size_t>(rows) * cols, std::vector<RdCost>(candidates.size()));
  CodecConfig cfg = config;
  for (size_t k = 0; k < candidates.size(); ++k) {
    if (candidates[k] < kQIndexMin || candidates[k] > kQIndexMax) {
      throw InvalidArgument("BuildRdTable: candidate outside [-8, 8]");
    }
    cfg.qmap = QualityIndexMap(rows, cols, candidates[k]);
    const std::vector<RdCost> costs = BlockCosts(Encode(image, cfg));
    for (size_t b = 0; b < costs.size(); ++b) table[b][k] = costs[b];
  }
  return table;
}

// `rd_beta` weights distortion in R + beta * D; the codec's own beta comes
// from `config`.
inline QualityIndexMap OptimizeQmap(const PlanarImage& image, const CodecConfig& config,
                                    double rd_beta, std::span<const int> candidates) {
  const RdTable table = BuildRdTable(image, config, candidates);
  const std::vector<int> idx = SelectIndices(table, candidates, rd_beta);
  const PlanarImage padded = PadReplicate(ToYuv420(image), kPadMultiple);
  QualityIndexMap q(padded.height / kBlockSize, padded.width / kBlockSize);
  for (int i = 0; i < q.rows(); ++i) {
    for (int j = 0; j < q.cols(); ++j) q.set(i, j, idx[static_cast<size_t>(i * q.cols() + j)]);
  }
  return q;
}

}  // namespace qmc

#endif  // QMC_RD_OPTIMIZE_HPP_
