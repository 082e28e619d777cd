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

// Probability models on top of the range coder, with ideal code-length
// accounting (-log2 p of the integer model actually used).

#ifndef QMC_ENTROPY_HPP_
#define QMC_ENTROPY_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qmc/error.hpp"
#include "qmc/range_coder.hpp"

namespace qmc {

// Frequency-count model with increment and halving rescale.
class AdaptiveModel {
 public:
  static constexpr uint32_t kDefaultIncrement = 32;
  static constexpr uint32_t kDefaultLimit = kMaxTotal;

  explicit AdaptiveModel(int alphabet, uint32_t increment = kDefaultIncrement,
                         uint32_t limit = kDefaultLimit)
      : freq_(static_cast<size_t>(alphabet), 1u),
        total_(static_cast<uint32_t>(alphabet)),
        increment_(increment),
        limit_(limit) {
    if (alphabet < 1 || static_cast<uint32_t>(alphabet) * 2 > limit ||
        limit > kMaxTotal || increment < 1) {
      throw InvalidArgument("AdaptiveModel: bad parameters");
    }
  }

  int alphabet() const { return static_cast<int>(freq_.size()); }
  uint32_t total() const { return total_; }
  uint32_t freq(int s) const { return freq_[static_cast<size_t>(s)]; }

  uint32_t Cum(int s) const {
    uint32_t c = 0;
    for (int i = 0; i < s; ++i) c += freq_[static_cast<size_t>(i)];
    return c;
  }

  // Symbol s with Cum(s) <= target < Cum(s) + freq(s); writes Cum(s).
  int Find(uint32_t target, uint32_t* cum) const {
    uint32_t c = 0;
    for (size_t i = 0; i < freq_.size(); ++i) {
      if (target < c + freq_[i]) {
        *cum = c;
        return static_cast<int>(i);
      }
      c += freq_[i];
    }
    throw DecodeError("adaptive model: target beyond total");
  }

  void Update(int s) {
    freq_[static_cast<size_t>(s)] += increment_;
    total_ += increment_;
    if (total_ > limit_) {
      total_ = 0;
      for (auto& f : freq_) {
        f = (f + 1) / 2;
        total_ += f;
      }
    }
  }

 private:
  std::vector<uint32_t> freq_;
  uint32_t total_;
  uint32_t increment_;
  uint32_t limit_;
};

// Fixed frequency table; totals are at most kMaxTotal and every symbol has
// frequency >= 1.
class StaticModel {
 public:
  explicit StaticModel(std::vector<uint32_t> freq) : freq_(std::move(freq)), cum_(freq_.size() + 1, 0) {
    if (freq_.empty()) throw InvalidArgument("StaticModel: empty alphabet");
    for (size_t i = 0; i < freq_.size(); ++i) {
      if (freq_[i] == 0) throw InvalidArgument("StaticModel: zero frequency");
      cum_[i + 1] = cum_[i] + freq_[i];
    }
    if (cum_.back() > kMaxTotal) throw InvalidArgument("StaticModel: total exceeds limit");
  }

  int alphabet() const { return static_cast<int>(freq_.size()); }
  uint32_t total() const { return cum_.back(); }
  uint32_t freq(int s) const { return freq_[static_cast<size_t>(s)]; }
  uint32_t Cum(int s) const { return cum_[static_cast<size_t>(s)]; }

  int Find(uint32_t target, uint32_t* cum) const {
    if (target >= total()) throw DecodeError("static model: target beyond total");
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
    const int s = static_cast<int>(it - cum_.begin()) - 1;
    *cum = cum_[static_cast<size_t>(s)];
    return s;
  }

 private:
  std::vector<uint32_t> freq_;
  std::vector<uint32_t> cum_;
};

// Scales are clamped to [kSigmaMin, kSigmaMax] and snapped to a geometric
// grid so that encoder and decoder select identical tables.
inline constexpr double kSigmaMin = 0.05;
inline constexpr double kSigmaMax = 256.0;
inline constexpr int kSigmaGridSize = 64;
inline constexpr int kLaplaceClip = 255;
inline constexpr int kLaplaceAlphabet = 2 * kLaplaceClip + 2;  // + escape
inline constexpr int kLaplaceEscape = kLaplaceAlphabet - 1;
inline constexpr int kEscapeRawBits = 32;

inline double SigmaFromIndex(int k) {
  return kSigmaMin * std::pow(kSigmaMax / kSigmaMin,
                              static_cast<double>(k) / (kSigmaGridSize - 1));
}

inline int SnapSigmaIndex(double sigma) {
  if (!(sigma > kSigmaMin)) return 0;
  if (sigma >= kSigmaMax) return kSigmaGridSize - 1;
  const double t = std::log(sigma / kSigmaMin) / std::log(kSigmaMax / kSigmaMin);
  const long k = std::lround(t * (kSigmaGridSize - 1));
  return static_cast<int>(std::clamp<long>(k, 0, kSigmaGridSize - 1));
}

inline double SnapSigma(double sigma) { return SigmaFromIndex(SnapSigmaIndex(sigma)); }

// P(X <= x) for X ~ Laplace(0, b).
inline double LaplaceCdf(double x, double b) {
  return x < 0.0 ? 0.5 * std::exp(x / b) : 1.0 - 0.5 * std::exp(-x / b);
}

// Computed on |value| so that the mass is exactly symmetric.
inline double LaplaceBinMass(int value, double sigma) {
  const double b = sigma / std::sqrt(2.0);
  const int a = std::abs(value);
  if (a == 0) return 1.0 - std::exp(-0.5 / b);
  return 0.5 * (std::exp(-(a - 0.5) / b) - std::exp(-(a + 0.5) / b));
}

// Probability of the unit bin centred on `value` under Laplace with
// standard deviation sigma, renormalised over [-255, 255]. Zero outside.
inline double LaplacianBinProb(int value, double sigma) {
  if (!(sigma >= kSigmaMin && sigma <= kSigmaMax)) {
    throw InvalidArgument("LaplacianBinProb: sigma out of range");
  }
  if (value < -kLaplaceClip || value > kLaplaceClip) return 0.0;
  const double b = sigma / std::sqrt(2.0);
  const double inside =
      LaplaceCdf(kLaplaceClip + 0.5, b) - LaplaceCdf(-kLaplaceClip - 0.5, b);
  return LaplaceBinMass(value, sigma) / inside;
}

// Integer frequency table for one sigma grid point. Every symbol, including
// the escape, has frequency >= 1; totals are exactly kMaxTotal.
struct LaplaceTable {
  std::array<uint32_t, kLaplaceAlphabet> freq{};
  std::array<uint32_t, kLaplaceAlphabet + 1> cum{};
};

inline LaplaceTable BuildLaplaceTable(double sigma) {
  LaplaceTable t;
  const uint32_t budget = kMaxTotal - kLaplaceAlphabet;
  const double b = sigma / std::sqrt(2.0);
  uint32_t used = 0;
  for (int v = -kLaplaceClip; v <= kLaplaceClip; ++v) {
    const double p = LaplaceBinMass(v, sigma);
    const uint32_t f = 1u + static_cast<uint32_t>(std::floor(p * budget));
    t.freq[static_cast<size_t>(v + kLaplaceClip)] = f;
    used += f;
  }
  const double tail = 2.0 * (1.0 - LaplaceCdf(kLaplaceClip + 0.5, b));
  const uint32_t esc = 1u + static_cast<uint32_t>(std::floor(tail * budget));
  t.freq[kLaplaceEscape] = esc;
  used += esc;
  if (used > kMaxTotal) throw InvariantError("Laplace table over budget");
  t.freq[kLaplaceClip] += kMaxTotal - used;  // remainder to the mode
  for (int s = 0; s < kLaplaceAlphabet; ++s) {
    t.cum[static_cast<size_t>(s) + 1] = t.cum[static_cast<size_t>(s)] + t.freq[static_cast<size_t>(s)];
  }
  return t;
}

inline const LaplaceTable& LaplaceTableForIndex(int k) {
  static const std::vector<LaplaceTable> tables = [] {
    std::vector<LaplaceTable> v;
    v.reserve(kSigmaGridSize);
    for (int i = 0; i < kSigmaGridSize; ++i) v.push_back(BuildLaplaceTable(SigmaFromIndex(i)));
    return v;
  }();
  return tables.at(static_cast<size_t>(k));
}

// Zero-mean Laplacian over integer bins with escape for |v| > 255.
class QuantizedLaplacian {
 public:
  explicit QuantizedLaplacian(double sigma)
      : index_(SnapSigmaIndex(sigma)), table_(&LaplaceTableForIndex(index_)) {}

  static QuantizedLaplacian FromIndex(int k) {
    QuantizedLaplacian q(SigmaFromIndex(k));
    q.index_ = k;
    q.table_ = &LaplaceTableForIndex(k);
    return q;
  }

  int sigma_index() const { return index_; }
  double sigma() const { return SigmaFromIndex(index_); }
  const LaplaceTable& table() const { return *table_; }

 private:
  int index_;
  const LaplaceTable* table_;
};

struct LedgerCell {
  int channel = 0;
  int row = 0;
  int col = 0;
};

// Ideal code length per (channel, row, col).
class BitLedger {
 public:
  BitLedger() = default;
  BitLedger(int channels, int rows, int cols)
      : channels_(channels), rows_(rows), cols_(cols),
        bits_(static_cast<size_t>(channels) * rows * cols, 0.0) {}

  int channels() const { return channels_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }

  void Add(const LedgerCell& cell, double bits) { bits_[Index(cell)] += bits; }
  double at(int c, int i, int j) const { return bits_[Index({c, i, j})]; }

  double Total() const {
    double t = 0.0;
    for (double b : bits_) t += b;
    return t;
  }

  // Sum over channels for one spatial cell.
  double CellTotal(int i, int j) const {
    double t = 0.0;
    for (int c = 0; c < channels_; ++c) t += at(c, i, j);
    return t;
  }

  BitLedger& operator+=(const BitLedger& other) {
    if (other.channels_ != channels_ || other.rows_ != rows_ || other.cols_ != cols_) {
      throw InvalidArgument("BitLedger: shape mismatch");
    }
    for (size_t i = 0; i < bits_.size(); ++i) bits_[i] += other.bits_[i];
    return *this;
  }

 private:
  size_t Index(const LedgerCell& c) const {
    if (c.channel < 0 || c.channel >= channels_ || c.row < 0 || c.row >= rows_ ||
        c.col < 0 || c.col >= cols_) {
      throw InvalidArgument("BitLedger: cell out of range");
    }
    return (static_cast<size_t>(c.channel) * rows_ + c.row) * cols_ + c.col;
  }

  int channels_ = 0;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> bits_;
};

inline uint32_t ZigZag(int32_t v) {
  return (static_cast<uint32_t>(v) << 1) ^ static_cast<uint32_t>(v >> 31);
}

inline int32_t UnZigZag(uint32_t u) {
  return static_cast<int32_t>(u >> 1) ^ -static_cast<int32_t>(u & 1u);
}

inline double IdealBits(uint32_t freq, uint32_t total) {
  return -std::log2(static_cast<double>(freq) / total);
}

// Encoder front end. Each Encode* returns the ideal bits it charged.
class SymbolEncoder {
 public:
  double Encode(int symbol, AdaptiveModel& model) {
    if (symbol < 0 || symbol >= model.alphabet()) {
      throw InvalidArgument("symbol " + std::to_string(symbol) + " outside alphabet");
    }
    const uint32_t f = model.freq(symbol);
    const uint32_t t = model.total();
    rc_.Encode(model.Cum(symbol), f, t);
    model.Update(symbol);
    return Charge(IdealBits(f, t));
  }

  double Encode(int symbol, const StaticModel& model) {
    if (symbol < 0 || symbol >= model.alphabet()) {
      throw InvalidArgument("symbol " + std::to_string(symbol) + " outside alphabet");
    }
    rc_.Encode(model.Cum(symbol), model.freq(symbol), model.total());
    return Charge(IdealBits(model.freq(symbol), model.total()));
  }

  double Encode(int32_t value, const QuantizedLaplacian& model) {
    const LaplaceTable& t = model.table();
    if (value >= -kLaplaceClip && value <= kLaplaceClip) {
      const size_t s = static_cast<size_t>(value + kLaplaceClip);
      rc_.Encode(t.cum[s], t.freq[s], kMaxTotal);
      return Charge(IdealBits(t.freq[s], kMaxTotal));
    }
    rc_.Encode(t.cum[kLaplaceEscape], t.freq[kLaplaceEscape], kMaxTotal);
    rc_.EncodeBits(ZigZag(value), kEscapeRawBits);
    return Charge(IdealBits(t.freq[kLaplaceEscape], kMaxTotal) + kEscapeRawBits);
  }

  double EncodeBits(uint32_t value, int nbits) {
    rc_.EncodeBits(value, nbits);
    return Charge(nbits);
  }

  double ideal_bits() const { return ideal_bits_; }

  std::vector<uint8_t> Finish() { return rc_.Finish(); }

 private:
  double Charge(double bits) {
    ideal_bits_ += bits;
    return bits;
  }

  RangeEncoder rc_;
  double ideal_bits_ = 0.0;
};

class SymbolDecoder {
 public:
  explicit SymbolDecoder(std::span<const uint8_t> data) : rc_(data) {}

  int Decode(AdaptiveModel& model) {
    const uint32_t target = rc_.GetFreq(model.total());
    uint32_t cum = 0;
    const int s = model.Find(target, &cum);
    rc_.Consume(cum, model.freq(s));
    model.Update(s);
    return s;
  }

  int Decode(const StaticModel& model) {
    const uint32_t target = rc_.GetFreq(model.total());
    uint32_t cum = 0;
    const int s = model.Find(target, &cum);
    rc_.Consume(cum, model.freq(s));
    return s;
  }

  int32_t Decode(const QuantizedLaplacian& model) {
    const LaplaceTable& t = model.table();
    const uint32_t target = rc_.GetFreq(kMaxTotal);
    // upper_bound over cumulative frequencies
    const auto it = std::upper_bound(t.cum.begin(), t.cum.end(), target);
    const size_t s = static_cast<size_t>(it - t.cum.begin()) - 1;
    rc_.Consume(t.cum[s], t.freq[s]);
    if (s == kLaplaceEscape) {
      return UnZigZag(rc_.DecodeBits(kEscapeRawBits));
    }
    return static_cast<int32_t>(s) - kLaplaceClip;
  }

  uint32_t DecodeBits(int nbits) { return rc_.DecodeBits(nbits); }

 private:
  RangeDecoder rc_;
};

using CellMap = std::function<LedgerCell(size_t index)>;

// Codes a whole sequence under one model. The model is copied so that the
// decoder can start from the same initial state.
template <typename Model>
std::vector<uint8_t> EncodeSymbols(std::span<const int32_t> symbols, Model model,
                                   BitLedger* ledger = nullptr,
                                   const CellMap& cells = {}) {
  SymbolEncoder enc;
  for (size_t i = 0; i < symbols.size(); ++i) {
    const double bits = enc.Encode(symbols[i], model);
    if (ledger != nullptr) ledger->Add(cells ? cells(i) : LedgerCell{}, bits);
  }
  return enc.Finish();
}

template <typename Model>
std::vector<int32_t> DecodeSymbols(std::span<const uint8_t> stream, size_t count,
                                   Model model) {
  SymbolDecoder dec(stream);
  std::vector<int32_t> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) out.push_back(dec.Decode(model));
  return out;
}

}  // namespace qmc

#endif  // QMC_ENTROPY_HPP_
