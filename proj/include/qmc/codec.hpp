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

// The latent codec. Luma is the primary component (more latent channels);
// chroma is coded jointly as the secondary component, conditioned on the
// decoded luma. Each component produces two streams: the hyper latent
// (stream #1) and the quantized residual y - mu (stream #2). Entropy
// parameters depend only on the hyper latent, never on decoded residuals.
//
// Container (little-endian):
//   "QMC1" | version u8 | flags u8 | W u32 | H u32 | origW u32 | origH u32 |
//   C_y u16 | C_uv u16 | beta u32 (Q16.16) |
//   then u32-length-prefixed segments: qmap, Y-hyper, Y-residual, UV-hyper,
//   UV-residual.

#ifndef QMC_CODEC_HPP_
#define QMC_CODEC_HPP_

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmc/bdm.hpp"
#include "qmc/entropy.hpp"
#include "qmc/error.hpp"
#include "qmc/gain.hpp"
#include "qmc/image.hpp"
#include "qmc/qmap.hpp"
#include "qmc/tensor.hpp"
#include "qmc/transform.hpp"

namespace qmc {

inline constexpr std::array<char, 4> kMagic = {'Q', 'M', 'C', '1'};
inline constexpr uint8_t kVersion = 1;
inline constexpr size_t kHeaderBytes = 30;
inline constexpr int kPadMultiple = 32;
// Residual quantizer step at unit gain and Q = 0, in orthonormal DCT units
// (one gray level of block DC).
inline constexpr double kResidualStep = 8.0;

enum HeaderFlags : uint8_t {
  kFlagQmap = 1u << 0,
  kFlagQpredAverage = 1u << 1,
  kFlagPaperLiteral = 1u << 2,
  kFlagNoSigmaGain = 1u << 3,
};

struct CodecConfig {
  int channels_y = 16;
  int channels_uv = 8;
  double beta = 1.0;
  std::optional<QualityIndexMap> qmap;
  QPredMode qpred = QPredMode::kHalfDifference;
  InterpolationMode interpolation = InterpolationMode::kLinear;
  // Scale sigma by the latent gain (otherwise sigma stays in the unscaled
  // domain while y is scaled).
  bool sigma_gain = true;
  std::optional<GainUnit> gain_y;
  std::optional<GainUnit> gain_uv;

  GainUnit UnitY() const { return gain_y ? *gain_y : GainUnit::Default(channels_y); }
  GainUnit UnitUv() const { return gain_uv ? *gain_uv : GainUnit::Default(channels_uv); }

  void Validate() const {
    if (!(channels_y > channels_uv && channels_uv > 0 && channels_y <= kBlockCoeffs)) {
      throw InvalidArgument("CodecConfig: need 256 >= C_y > C_uv > 0");
    }
    if (!(beta > 0.0) || beta >= 65536.0) {
      throw InvalidArgument("CodecConfig: beta must be in (0, 65536)");
    }
    if (UnitY().channels() != channels_y || UnitUv().channels() != channels_uv) {
      throw InvalidArgument("CodecConfig: gain unit channel count mismatch");
    }
  }
};

inline nlohmann::json ConfigToJson(const CodecConfig& c) {
  nlohmann::json j{{"channels_y", c.channels_y},
                   {"channels_uv", c.channels_uv},
                   {"beta", c.beta},
                   {"qpred", QPredModeName(c.qpred)},
                   {"interpolation", InterpolationModeName(c.interpolation)},
                   {"sigma_gain", c.sigma_gain}};
  if (c.qmap) j["qmap"] = QmapToJson(*c.qmap);
  if (c.gain_y) j["gain_y"] = GainUnitToJson(*c.gain_y);
  if (c.gain_uv) j["gain_uv"] = GainUnitToJson(*c.gain_uv);
  return j;
}

// Inverse of ConfigToJson; absent keys keep their defaults.
inline CodecConfig ConfigFromJson(const nlohmann::json& j) {
  CodecConfig c;
  try {
    c.channels_y = j.value("channels_y", c.channels_y);
    c.channels_uv = j.value("channels_uv", c.channels_uv);
    c.beta = j.value("beta", c.beta);
    const std::string qpred = j.value("qpred", std::string(QPredModeName(c.qpred)));
    if (qpred == "avg") {
      c.qpred = QPredMode::kAverage;
    } else if (qpred != "half-diff") {
      throw FormatError("config: qpred must be 'half-diff' or 'avg'");
    }
    const std::string interp =
        j.value("interpolation", std::string(InterpolationModeName(c.interpolation)));
    if (interp == "paper-literal") {
      c.interpolation = InterpolationMode::kPaperLiteral;
    } else if (interp != "linear") {
      throw FormatError("config: interpolation must be 'linear' or 'paper-literal'");
    }
    c.sigma_gain = j.value("sigma_gain", c.sigma_gain);
    if (j.contains("qmap")) c.qmap = QmapFromJson(j.at("qmap"));
    if (j.contains("gain_y")) c.gain_y = GainUnitFromJson(j.at("gain_y"));
    if (j.contains("gain_uv")) c.gain_uv = GainUnitFromJson(j.at("gain_uv"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  return c;
}

// FNV-1a over the canonical JSON form.
inline std::string ConfigHash(const CodecConfig& c) {
  uint64_t h = 1469598103934665603ull;
  for (char ch : ConfigToJson(c).dump()) {
    h ^= static_cast<uint8_t>(ch);
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline uint32_t BetaToFixed(double beta) {
  const double v = std::round(beta * 65536.0);
  if (v < 1.0 || v > 4294967295.0) throw InvalidArgument("beta not representable in Q16.16");
  return static_cast<uint32_t>(v);
}

inline double FixedToBeta(uint32_t fixed) { return fixed / 65536.0; }

struct BitstreamHeader {
  uint8_t version = kVersion;
  uint8_t flags = 0;
  uint32_t width = 0;
  uint32_t height = 0;
  uint32_t orig_width = 0;
  uint32_t orig_height = 0;
  uint16_t channels_y = 0;
  uint16_t channels_uv = 0;
  uint32_t beta_q16 = 0;

  bool operator==(const BitstreamHeader&) const = default;
};

struct Bitstream {
  BitstreamHeader header;
  std::vector<uint8_t> qmap;
  std::vector<uint8_t> y_hyper;
  std::vector<uint8_t> y_residual;
  std::vector<uint8_t> uv_hyper;
  std::vector<uint8_t> uv_residual;

  std::array<const std::vector<uint8_t>*, 5> Segments() const {
    return {&qmap, &y_hyper, &y_residual, &uv_hyper, &uv_residual};
  }

  size_t TotalBytes() const {
    size_t n = kHeaderBytes;
    for (const auto* s : Segments()) n += 4 + s->size();
    return n;
  }

  std::vector<uint8_t> Serialize() const {
    std::vector<uint8_t> out;
    out.reserve(TotalBytes());
    auto put = [&out](uint64_t v, int bytes) {
      for (int i = 0; i < bytes; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
    };
    out.insert(out.end(), kMagic.begin(), kMagic.end());
    put(header.version, 1);
    put(header.flags, 1);
    put(header.width, 4);
    put(header.height, 4);
    put(header.orig_width, 4);
    put(header.orig_height, 4);
    put(header.channels_y, 2);
    put(header.channels_uv, 2);
    put(header.beta_q16, 4);
    for (const auto* s : Segments()) {
      put(s->size(), 4);
      out.insert(out.end(), s->begin(), s->end());
    }
    return out;
  }

  static Bitstream Parse(std::span<const uint8_t> data) {
    size_t pos = 0;
    auto get = [&](int bytes) -> uint64_t {
      if (data.size() - pos < static_cast<size_t>(bytes)) {
        throw DecodeError("bitstream: truncated at byte " + std::to_string(pos));
      }
      uint64_t v = 0;
      for (int i = 0; i < bytes; ++i) v |= static_cast<uint64_t>(data[pos++]) << (8 * i);
      return v;
    };
    if (data.size() < 4 || std::memcmp(data.data(), kMagic.data(), 4) != 0) {
      throw DecodeError("bitstream: bad magic");
    }
    pos = 4;
    Bitstream b;
    b.header.version = static_cast<uint8_t>(get(1));
    if (b.header.version != kVersion) {
      throw DecodeError("bitstream: unsupported version " + std::to_string(b.header.version));
    }
    b.header.flags = static_cast<uint8_t>(get(1));
    b.header.width = static_cast<uint32_t>(get(4));
    b.header.height = static_cast<uint32_t>(get(4));
    b.header.orig_width = static_cast<uint32_t>(get(4));
    b.header.orig_height = static_cast<uint32_t>(get(4));
    b.header.channels_y = static_cast<uint16_t>(get(2));
    b.header.channels_uv = static_cast<uint16_t>(get(2));
    b.header.beta_q16 = static_cast<uint32_t>(get(4));
    const auto& h = b.header;
    if (h.width == 0 || h.height == 0 || h.width % kPadMultiple != 0 ||
        h.height % kPadMultiple != 0 || h.orig_width > h.width || h.orig_height > h.height ||
        h.orig_width + kPadMultiple <= h.width || h.orig_height + kPadMultiple <= h.height ||
        h.width > (1u << 16) || h.height > (1u << 16)) {
      throw DecodeError("bitstream: malformed picture dimensions");
    }
    if (!(h.channels_y > h.channels_uv && h.channels_uv > 0 && h.channels_y <= kBlockCoeffs) ||
        h.beta_q16 == 0) {
      throw DecodeError("bitstream: malformed header");
    }
    for (std::vector<uint8_t>* s : {&b.qmap, &b.y_hyper, &b.y_residual, &b.uv_hyper, &b.uv_residual}) {
      const size_t len = static_cast<size_t>(get(4));
      if (data.size() - pos < len) throw DecodeError("bitstream: truncated segment");
      s->assign(data.begin() + static_cast<std::ptrdiff_t>(pos),
                data.begin() + static_cast<std::ptrdiff_t>(pos + len));
      pos += len;
    }
    if (pos != data.size()) throw DecodeError("bitstream: trailing bytes");
    return b;
  }
};

namespace codec_internal {

inline constexpr int kMagnitudeAlphabet = 33;

// Exponent (bit length) under `model` followed by the mantissa bits (raw).
inline double EncodeMagnitude(SymbolEncoder& enc, const StaticModel& model, uint32_t u) {
  const int len = std::bit_width(u);
  double bits = enc.Encode(len, model);
  if (len > 1) bits += enc.EncodeBits(u & ((1u << (len - 1)) - 1u), len - 1);
  return bits;
}

inline uint32_t DecodeMagnitude(SymbolDecoder& dec, const StaticModel& model) {
  const int len = dec.Decode(model);
  if (len == 0) return 0;
  if (len == 1) return 1;
  const uint32_t top = 1u << (len - 1);
  return top | dec.DecodeBits(len - 1);
}

inline int32_t CheckedInt(double v) {
  if (!(std::abs(v) < 2147483647.0)) throw InvalidArgument("symbol magnitude exceeds 31 bits");
  return static_cast<int32_t>(v);
}

// Hyper exponent prior: two-sided geometric P(L) ~ 2^(-(r+1)|L - mode|),
// one (mode, r) pair per context sent as raw bits ahead of the values.
inline constexpr int kHyperContexts = 4;
inline constexpr int kModeBits = 6;
inline constexpr int kDecayBits = 3;
inline constexpr int kHyperParamBits = kHyperContexts * (kModeBits + kDecayBits);

struct HyperPrior {
  int mode = 0;
  int decay = 0;
};

inline StaticModel HyperModel(HyperPrior p) {
  const uint32_t budget = kMaxTotal - kMagnitudeAlphabet;
  std::vector<double> w(kMagnitudeAlphabet);
  double z = 0.0;
  for (int l = 0; l < kMagnitudeAlphabet; ++l) {
    w[static_cast<size_t>(l)] = std::exp2(-(p.decay + 1.0) * std::abs(l - p.mode));
    z += w[static_cast<size_t>(l)];
  }
  std::vector<uint32_t> freq(kMagnitudeAlphabet);
  for (int l = 0; l < kMagnitudeAlphabet; ++l) {
    freq[static_cast<size_t>(l)] =
        1u + static_cast<uint32_t>(std::floor(w[static_cast<size_t>(l)] / z * budget));
  }
  return StaticModel(std::move(freq));
}

// Cheapest prior for a histogram of exponents; ties keep the first found.
inline HyperPrior FitHyperPrior(const std::array<uint64_t, kMagnitudeAlphabet>& hist) {
  HyperPrior best;
  double best_bits = std::numeric_limits<double>::infinity();
  for (int mode = 0; mode < kMagnitudeAlphabet; ++mode) {
    for (int decay = 0; decay < (1 << kDecayBits); ++decay) {
      const StaticModel m = HyperModel({mode, decay});
      double bits = 0.0;
      for (int l = 0; l < kMagnitudeAlphabet; ++l) {
        if (hist[static_cast<size_t>(l)] != 0) {
          bits += static_cast<double>(hist[static_cast<size_t>(l)]) * IdealBits(m.freq(l), m.total());
        }
      }
      if (bits < best_bits) {
        best_bits = bits;
        best = {mode, decay};
      }
    }
  }
  return best;
}

inline int HyperContext(int bank, int c) { return bank * 2 + (c == 0 ? 0 : 1); }

inline uint32_t HyperSymbol(int bank, double v) {
  return bank == 0 ? ZigZag(CheckedInt(v)) : static_cast<uint32_t>(CheckedInt(v));
}

}  // namespace codec_internal

// Stream #1. Both banks are coded per element as exponent/mantissa under a
// static per-context prior, so identical hyper values cost identical bits
// wherever they sit. The prior parameters are charged evenly to all cells.
inline std::vector<uint8_t> EncodeHyper(const HyperLatent& z_hat, BitLedger* ledger) {
  using namespace codec_internal;
  std::array<std::array<uint64_t, kMagnitudeAlphabet>, kHyperContexts> hist{};
  for (int bank = 0; bank < 2; ++bank) {
    const LatentTensor& t = bank == 0 ? z_hat.mean : z_hat.scale;
    for (int c = 0; c < t.channels(); ++c) {
      for (int i = 0; i < t.rows(); ++i) {
        for (int j = 0; j < t.cols(); ++j) {
          ++hist[static_cast<size_t>(HyperContext(bank, c))]
                [static_cast<size_t>(std::bit_width(HyperSymbol(bank, t.at(c, i, j))))];
        }
      }
    }
  }
  SymbolEncoder enc;
  std::vector<StaticModel> models;
  for (const auto& h : hist) {
    const HyperPrior p = FitHyperPrior(h);
    enc.EncodeBits(static_cast<uint32_t>(p.mode), kModeBits);
    enc.EncodeBits(static_cast<uint32_t>(p.decay), kDecayBits);
    models.push_back(HyperModel(p));
  }
  const int rows = z_hat.mean.rows(), cols = z_hat.mean.cols();
  if (ledger != nullptr && rows * cols > 0) {
    const double share = static_cast<double>(kHyperParamBits) / (rows * cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) ledger->Add({0, i, j}, share);
    }
  }
  for (int bank = 0; bank < 2; ++bank) {
    const LatentTensor& t = bank == 0 ? z_hat.mean : z_hat.scale;
    for (int c = 0; c < t.channels(); ++c) {
      for (int i = 0; i < t.rows(); ++i) {
        for (int j = 0; j < t.cols(); ++j) {
          const double bits = EncodeMagnitude(enc, models[static_cast<size_t>(HyperContext(bank, c))],
                                              HyperSymbol(bank, t.at(c, i, j)));
          if (ledger != nullptr) ledger->Add({c, i, j}, bits);
        }
      }
    }
  }
  return enc.Finish();
}

inline HyperLatent DecodeHyper(std::span<const uint8_t> stream, int channels, int rows, int cols,
                               BitLedger* ledger) {
  using namespace codec_internal;
  HyperLatent z{LatentTensor(channels, rows, cols), LatentTensor(channels, rows, cols)};
  SymbolDecoder dec(stream);
  std::vector<StaticModel> models;
  for (int k = 0; k < kHyperContexts; ++k) {
    HyperPrior p;
    p.mode = static_cast<int>(dec.DecodeBits(kModeBits));
    p.decay = static_cast<int>(dec.DecodeBits(kDecayBits));
    if (p.mode >= kMagnitudeAlphabet) throw DecodeError("hyper stream: bad prior mode");
    models.push_back(HyperModel(p));
  }
  for (int bank = 0; bank < 2; ++bank) {
    LatentTensor& t = bank == 0 ? z.mean : z.scale;
    for (int c = 0; c < channels; ++c) {
      for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
          const uint32_t u = DecodeMagnitude(dec, models[static_cast<size_t>(HyperContext(bank, c))]);
          t.at(c, i, j) = bank == 0 ? UnZigZag(u) : static_cast<double>(u);
        }
      }
    }
  }
  // Replay the encoder's accounting by re-encoding the decoded values.
  if (ledger != nullptr) {
    *ledger = BitLedger(channels, rows, cols);
    EncodeHyper(z, ledger);
  }
  return z;
}

// Sigma in the coded domain: raw scale, times sigma gain, times map step,
// over the base step, clamped and snapped.
inline LatentTensor ScaleSigma(const LatentTensor& sigma_raw, const GainVector& sigma_gain,
                               const QualityIndexMap* qmap) {
  LatentTensor s = ApplySigmaGain(sigma_raw, sigma_gain);
  if (qmap != nullptr) s = ApplyQmap(s, *qmap, QmapDirection::kForward);
  for (double& v : s.data()) v = SnapSigma(v / kResidualStep);
  return s;
}

struct ResidualPayload {
  std::vector<uint8_t> bytes;
  LatentTensor symbols;
  LatentTensor sigma;
};

// Stream #2: round(Q_s * g * r / step) coded under Laplacians whose sigma went
// through the same scaling. `ledger` receives per-cell ideal bits.
inline ResidualPayload EncodeResidualPayload(const LatentTensor& residual,
                                             const LatentTensor& sigma_raw, const GainVector& gain,
                                             const GainVector& sigma_gain,
                                             const QualityIndexMap* qmap, BitLedger* ledger) {
  if (!residual.SameShape(sigma_raw)) throw InvalidArgument("residual/sigma shape mismatch");
  ResidualPayload out;
  out.sigma = ScaleSigma(sigma_raw, sigma_gain, qmap);
  LatentTensor scaled = ApplyGain(residual, gain);
  if (qmap != nullptr) scaled = ApplyQmap(scaled, *qmap, QmapDirection::kForward);
  out.symbols = scaled;
  SymbolEncoder enc;
  for (int c = 0; c < residual.channels(); ++c) {
    for (int i = 0; i < residual.rows(); ++i) {
      for (int j = 0; j < residual.cols(); ++j) {
        const int32_t s =
            codec_internal::CheckedInt(RoundHalfAway(scaled.at(c, i, j) / kResidualStep));
        out.symbols.at(c, i, j) = s;
        const double bits =
            enc.Encode(s, QuantizedLaplacian::FromIndex(SnapSigmaIndex(out.sigma.at(c, i, j))));
        if (ledger != nullptr) ledger->Add({c, i, j}, bits);
      }
    }
  }
  out.bytes = enc.Finish();
  return out;
}

inline LatentTensor DecodeResidualPayload(std::span<const uint8_t> stream,
                                          const LatentTensor& sigma, BitLedger* ledger) {
  LatentTensor symbols(sigma.channels(), sigma.rows(), sigma.cols());
  SymbolDecoder dec(stream);
  for (int c = 0; c < sigma.channels(); ++c) {
    for (int i = 0; i < sigma.rows(); ++i) {
      for (int j = 0; j < sigma.cols(); ++j) {
        const auto model = QuantizedLaplacian::FromIndex(SnapSigmaIndex(sigma.at(c, i, j)));
        const int32_t s = dec.Decode(model);
        symbols.at(c, i, j) = s;
        if (ledger != nullptr) {
          const auto& t = model.table();
          const bool escape = s < -kLaplaceClip || s > kLaplaceClip;
          const size_t k = escape ? kLaplaceEscape : static_cast<size_t>(s + kLaplaceClip);
          ledger->Add({c, i, j}, IdealBits(t.freq[k], kMaxTotal) + (escape ? kEscapeRawBits : 0));
        }
      }
    }
  }
  return symbols;
}

// y_hat = mu + symbols * step / (Q_s * g).
inline LatentTensor Dequantize(const LatentTensor& symbols, const LatentTensor& mu,
                               const GainVector& gain, const QualityIndexMap* qmap) {
  LatentTensor r = symbols;
  for (double& v : r.data()) v *= kResidualStep;
  if (qmap != nullptr) r = ApplyQmap(r, *qmap, QmapDirection::kInverse);
  r = ApplyGain(r, gain.Inverse());
  for (size_t k = 0; k < r.size(); ++k) r.data()[k] += mu.data()[k];
  return r;
}

inline LatentTensor ConcatChannels(const LatentTensor& a, const LatentTensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("ConcatChannels: shape");
  LatentTensor out(a.channels() + b.channels(), a.rows(), a.cols());
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(),
            out.data().begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

inline LatentTensor SliceChannels(const LatentTensor& t, int begin, int count) {
  LatentTensor out(count, t.rows(), t.cols());
  const size_t plane = static_cast<size_t>(t.rows()) * t.cols();
  std::copy(t.data().begin() + static_cast<std::ptrdiff_t>(begin * plane),
            t.data().begin() + static_cast<std::ptrdiff_t>((begin + count) * plane),
            out.data().begin());
  return out;
}

// Per-component tensors, shared by encoder and decoder results.
struct ComponentData {
  LatentTensor y;         // encoder only
  LatentTensor residual;  // y - mu, encoder only
  HyperLatent z_hat;
  LatentTensor mu;
  LatentTensor sigma_raw;  // upsampled scale bank before any gain
  LatentTensor sigma;      // coded-domain sigma, snapped
  LatentTensor symbols;
  LatentTensor y_hat;
  BitLedger hyper_ledger;     // hyper grid
  BitLedger residual_ledger;  // latent grid

  double TotalBits() const { return hyper_ledger.Total() + residual_ledger.Total(); }
};

struct ComponentSetup {
  GainVector gain;
  GainVector sigma_gain;
  std::optional<QualityIndexMap> qmap;
};

inline GainVector RepeatGain(const GainVector& g, int times) {
  std::vector<double> v;
  for (int k = 0; k < times; ++k) v.insert(v.end(), g.values().begin(), g.values().end());
  return GainVector(std::move(v));
}

inline ComponentData EncodeComponent(const LatentTensor& y, const ComponentSetup& setup,
                                     std::vector<uint8_t>* hyper_bytes,
                                     std::vector<uint8_t>* residual_bytes) {
  ComponentData d;
  d.y = y;
  const int hr = y.rows() / 2, hc = y.cols() / 2;
  d.z_hat = QuantizeHyper(HyperEncode(y));
  d.hyper_ledger = BitLedger(y.channels(), hr, hc);
  *hyper_bytes = EncodeHyper(d.z_hat, &d.hyper_ledger);
  d.mu = Upsample2(d.z_hat.mean);
  d.sigma_raw = Upsample2(d.z_hat.scale);
  d.residual = y;
  for (size_t k = 0; k < y.size(); ++k) d.residual.data()[k] -= d.mu.data()[k];
  d.residual_ledger = BitLedger(y.channels(), y.rows(), y.cols());
  const QualityIndexMap* q = setup.qmap ? &*setup.qmap : nullptr;
  ResidualPayload p = EncodeResidualPayload(d.residual, d.sigma_raw, setup.gain, setup.sigma_gain,
                                            q, &d.residual_ledger);
  *residual_bytes = std::move(p.bytes);
  d.symbols = std::move(p.symbols);
  d.sigma = std::move(p.sigma);
  d.y_hat = Dequantize(d.symbols, d.mu, setup.gain, q);
  return d;
}

inline ComponentData DecodeComponent(std::span<const uint8_t> hyper_bytes,
                                     std::span<const uint8_t> residual_bytes, int channels,
                                     int rows, int cols, const ComponentSetup& setup) {
  ComponentData d;
  d.z_hat = DecodeHyper(hyper_bytes, channels, rows / 2, cols / 2, &d.hyper_ledger);
  const QualityIndexMap* q = setup.qmap ? &*setup.qmap : nullptr;
  d.mu = Upsample2(d.z_hat.mean);
  d.sigma_raw = Upsample2(d.z_hat.scale);
  d.sigma = ScaleSigma(d.sigma_raw, setup.sigma_gain, q);
  d.residual_ledger = BitLedger(channels, rows, cols);
  d.symbols = DecodeResidualPayload(residual_bytes, d.sigma, &d.residual_ledger);
  d.y_hat = Dequantize(d.symbols, d.mu, setup.gain, q);
  return d;
}

// Picture geometry derived from the padded luma size.
struct Geometry {
  int width = 0;   // padded luma
  int height = 0;
  int chroma_width = 0;  // chroma planes of the padded picture
  int chroma_height = 0;
  int chroma_coded_width = 0;  // chroma padded to a multiple of 32
  int chroma_coded_height = 0;

  static Geometry For(int width, int height) {
    Geometry g;
    g.width = width;
    g.height = height;
    g.chroma_width = width / 2;
    g.chroma_height = height / 2;
    g.chroma_coded_width = RoundUp(g.chroma_width, kPadMultiple);
    g.chroma_coded_height = RoundUp(g.chroma_height, kPadMultiple);
    return g;
  }
  int y_rows() const { return height / kBlockSize; }
  int y_cols() const { return width / kBlockSize; }
  int uv_rows() const { return chroma_coded_height / kBlockSize; }
  int uv_cols() const { return chroma_coded_width / kBlockSize; }
};

// Auxiliary luma input for chroma: the decoded luma downsampled 2x, reduced
// to one value per 16x16 chroma block and centred at 128.
inline PlaneF LumaDcPlane(const Plane8& y_rec, const Geometry& g) {
  PlaneF ds(g.chroma_width, g.chroma_height);
  for (int y = 0; y < g.chroma_height; ++y) {
    for (int x = 0; x < g.chroma_width; ++x) {
      ds.at(x, y) = (static_cast<double>(y_rec.at(2 * x, 2 * y)) + y_rec.at(2 * x + 1, 2 * y) +
                     y_rec.at(2 * x, 2 * y + 1) + y_rec.at(2 * x + 1, 2 * y + 1)) /
                    4.0;
    }
  }
  const PlaneF padded = PadPlane(ds, g.chroma_coded_width, g.chroma_coded_height);
  PlaneF dc(g.chroma_coded_width, g.chroma_coded_height);
  for (int bi = 0; bi < g.uv_rows(); ++bi) {
    for (int bj = 0; bj < g.uv_cols(); ++bj) {
      double s = 0.0;
      for (int y = 0; y < kBlockSize; ++y) {
        for (int x = 0; x < kBlockSize; ++x) s += padded.at(bj * kBlockSize + x, bi * kBlockSize + y);
      }
      const double v = s / kBlockCoeffs - 128.0;
      for (int y = 0; y < kBlockSize; ++y) {
        for (int x = 0; x < kBlockSize; ++x) dc.at(bj * kBlockSize + x, bi * kBlockSize + y) = v;
      }
    }
  }
  return dc;
}

struct ComponentGains {
  ComponentSetup y;
  ComponentSetup uv;
};

inline ComponentGains MakeSetups(const GainUnit& unit_y, const GainUnit& unit_uv,
                                 const BitstreamHeader& h,
                                 const std::optional<QualityIndexMap>& qmap) {
  const double beta = FixedToBeta(h.beta_q16);
  const InterpolationMode mode =
      (h.flags & kFlagPaperLiteral) ? InterpolationMode::kPaperLiteral : InterpolationMode::kLinear;
  const bool sigma_gain = !(h.flags & kFlagNoSigmaGain);
  const Geometry g = Geometry::For(static_cast<int>(h.width), static_cast<int>(h.height));
  ComponentGains out;
  out.y.gain = GainForBeta(unit_y, beta, mode);
  out.y.sigma_gain = sigma_gain ? out.y.gain : GainVector::Ones(h.channels_y);
  out.y.qmap = qmap;
  const GainVector guv = GainForBeta(unit_uv, beta, mode);
  out.uv.gain = RepeatGain(guv, 2);
  out.uv.sigma_gain = sigma_gain ? out.uv.gain : GainVector::Ones(2 * h.channels_uv);
  if (qmap) out.uv.qmap = DownsampleQmap(*qmap, g.uv_rows(), g.uv_cols());
  return out;
}

struct Reconstruction {
  PlaneF y_synthesis;  // luma before rounding to 8 bits
  Plane8 y_padded;
  PlanarImage image;  // YUV420, cropped to the original size
};

inline Reconstruction Reconstruct(const ComponentData& y, const ComponentData& uv,
                                  const BitstreamHeader& h, const Geometry& g) {
  Reconstruction r;
  r.y_synthesis = Synthesis(y.y_hat);
  r.y_padded = ToByte(r.y_synthesis);
  const PlaneF dc = LumaDcPlane(r.y_padded, g);
  PlanarImage img = PlanarImage::Make(g.width, g.height, ColorSpace::kYuv420);
  img.planes[0] = r.y_padded;
  for (int p = 0; p < 2; ++p) {
    PlaneF chroma = Synthesis(SliceChannels(uv.y_hat, p * h.channels_uv, h.channels_uv));
    for (size_t k = 0; k < chroma.size(); ++k) chroma.data()[k] += dc.data()[k];
    img.planes[1 + p] = CropPlane(ToByte(chroma), g.chroma_width, g.chroma_height);
  }
  img.orig_width = static_cast<int>(h.orig_width);
  img.orig_height = static_cast<int>(h.orig_height);
  r.image = CropToOriginal(img);
  return r;
}

struct EncodeResult {
  Bitstream stream;
  std::vector<uint8_t> bytes;
  PlanarImage source;          // YUV420, original size
  Plane8 y_source_padded;
  Reconstruction recon;
  ComponentData y;
  ComponentData uv;
  double bpp = 0.0;
  double psnr_y = 0.0;
  double psnr_u = 0.0;
  double psnr_v = 0.0;

  size_t total_bits() const { return bytes.size() * 8; }
  size_t qmap_bits() const { return stream.qmap.size() * 8; }
  double qmap_overhead() const {
    return static_cast<double>(qmap_bits()) / static_cast<double>(total_bits());
  }
};

inline PlanarImage ToYuv420(const PlanarImage& image) {
  switch (image.colorspace) {
    case ColorSpace::kRgb:
      return RgbToYuv420(image);
    case ColorSpace::kYuv420:
      return image;
    case ColorSpace::kYuv444:
      break;
  }
  throw InvalidArgument("encode: YUV444 input is not supported; pass RGB or YUV420");
}

inline BitstreamHeader MakeHeader(const CodecConfig& config, const Geometry& g,
                                  const PlanarImage& src) {
  BitstreamHeader h;
  h.flags = static_cast<uint8_t>((config.qmap ? kFlagQmap : 0) |
                                 (config.qpred == QPredMode::kAverage ? kFlagQpredAverage : 0) |
                                 (config.interpolation == InterpolationMode::kPaperLiteral
                                      ? kFlagPaperLiteral
                                      : 0) |
                                 (config.sigma_gain ? 0 : kFlagNoSigmaGain));
  h.width = static_cast<uint32_t>(g.width);
  h.height = static_cast<uint32_t>(g.height);
  h.orig_width = static_cast<uint32_t>(src.width);
  h.orig_height = static_cast<uint32_t>(src.height);
  h.channels_y = static_cast<uint16_t>(config.channels_y);
  h.channels_uv = static_cast<uint16_t>(config.channels_uv);
  h.beta_q16 = BetaToFixed(config.beta);
  return h;
}

inline EncodeResult Encode(const PlanarImage& image, const CodecConfig& config) {
  config.Validate();
  if (image.width < 1 || image.height < 1) throw InvalidArgument("encode: empty image");
  EncodeResult res;
  res.source = ToYuv420(image);
  res.source.orig_width = res.source.width;
  res.source.orig_height = res.source.height;
  const PlanarImage padded = PadReplicate(res.source, kPadMultiple);
  const Geometry g = Geometry::For(padded.width, padded.height);
  if (config.qmap && (config.qmap->rows() != g.y_rows() || config.qmap->cols() != g.y_cols())) {
    throw InvalidArgument("encode: quality map is " + std::to_string(config.qmap->rows()) + "x" +
                          std::to_string(config.qmap->cols()) + ", latent grid is " +
                          std::to_string(g.y_rows()) + "x" + std::to_string(g.y_cols()));
  }
  if (config.qmap && !config.qmap->Signalable()) {
    throw InvalidArgument("encode: quality map indices must lie in [-8, 8]");
  }
  res.y_source_padded = padded.planes[0];
  BitstreamHeader& h = res.stream.header;
  h = MakeHeader(config, g, res.source);
  const ComponentGains setups = MakeSetups(config.UnitY(), config.UnitUv(), h, config.qmap);
  if (config.qmap) res.stream.qmap = EncodeQmap(*config.qmap, config.qpred);

  res.y = EncodeComponent(Analysis(ToFloat(padded.planes[0]), config.channels_y), setups.y,
                          &res.stream.y_hyper, &res.stream.y_residual);
  const Plane8 y_rec = ToByte(Synthesis(res.y.y_hat));
  const PlaneF dc = LumaDcPlane(y_rec, g);
  LatentTensor uv_latent;
  for (int p = 0; p < 2; ++p) {
    PlaneF c = PadPlane(ToFloat(padded.planes[1 + p]), g.chroma_coded_width, g.chroma_coded_height);
    for (size_t k = 0; k < c.size(); ++k) c.data()[k] -= dc.data()[k];
    LatentTensor t = Analysis(c, config.channels_uv);
    uv_latent = p == 0 ? t : ConcatChannels(uv_latent, t);
  }
  res.uv = EncodeComponent(uv_latent, setups.uv, &res.stream.uv_hyper, &res.stream.uv_residual);

  res.bytes = res.stream.Serialize();
  res.recon = Reconstruct(res.y, res.uv, h, g);
  res.bpp = static_cast<double>(res.total_bits()) / (static_cast<double>(h.orig_width) * h.orig_height);
  res.psnr_y = Psnr(res.source.planes[0], res.recon.image.planes[0]);
  res.psnr_u = Psnr(res.source.planes[1], res.recon.image.planes[1]);
  res.psnr_v = Psnr(res.source.planes[2], res.recon.image.planes[2]);
  return res;
}

struct DecodeOptions {
  std::optional<GainUnit> gain_y;
  std::optional<GainUnit> gain_uv;
};

struct DecodeResult {
  BitstreamHeader header;
  std::optional<QualityIndexMap> qmap;
  Reconstruction recon;
  ComponentData y;
  ComponentData uv;
};

inline DecodeResult Decode(std::span<const uint8_t> bytes, const DecodeOptions& opts = {}) {
  const Bitstream b = Bitstream::Parse(bytes);
  DecodeResult res;
  res.header = b.header;
  const BitstreamHeader& h = b.header;
  const Geometry g = Geometry::For(static_cast<int>(h.width), static_cast<int>(h.height));
  const QPredMode qpred =
      (h.flags & kFlagQpredAverage) ? QPredMode::kAverage : QPredMode::kHalfDifference;
  if (h.flags & kFlagQmap) {
    res.qmap = DecodeQmap(b.qmap, g.y_rows(), g.y_cols(), qpred);
  } else if (!b.qmap.empty()) {
    throw DecodeError("bitstream: qmap segment present without flag");
  }
  const GainUnit unit_y = opts.gain_y ? *opts.gain_y : GainUnit::Default(h.channels_y);
  const GainUnit unit_uv = opts.gain_uv ? *opts.gain_uv : GainUnit::Default(h.channels_uv);
  if (unit_y.channels() != h.channels_y || unit_uv.channels() != h.channels_uv) {
    throw DecodeError("bitstream: gain unit does not match channel counts");
  }
  const ComponentGains setups = MakeSetups(unit_y, unit_uv, h, res.qmap);
  res.y = DecodeComponent(b.y_hyper, b.y_residual, h.channels_y, g.y_rows(), g.y_cols(), setups.y);
  res.uv = DecodeComponent(b.uv_hyper, b.uv_residual, 2 * h.channels_uv, g.uv_rows(), g.uv_cols(),
                           setups.uv);
  res.recon = Reconstruct(res.y, res.uv, h, g);
  return res;
}

// Luma bits per 16x16 block: residual bits summed over channels plus each
// hyper cell's bits split equally over its four latent cells.
inline BitDistributionMap BitsPerBlock(const BitLedger& residual, const BitLedger& hyper) {
  BitDistributionMap m =
      BitDistributionMap::Uniform(residual.cols() * kBlockSize, residual.rows() * kBlockSize, kBlockSize);
  for (int i = 0; i < residual.rows(); ++i) {
    for (int j = 0; j < residual.cols(); ++j) {
      m.at(i, j) = residual.CellTotal(i, j) + hyper.CellTotal(i / 2, j / 2) / 4.0;
    }
  }
  m.set_latent_grid(true);
  return m;
}

inline BitDistributionMap BitsPerBlock(const ComponentData& luma) {
  return BitsPerBlock(luma.residual_ledger, luma.hyper_ledger);
}

// Luma plus chroma bits on the luma grid. A chroma cell covers up to four
// luma cells and its bits are split equally over those inside the grid.
inline BitDistributionMap AllBitsPerBlock(const ComponentData& luma, const ComponentData& chroma) {
  BitDistributionMap m = BitsPerBlock(luma);
  const BitDistributionMap c = BitsPerBlock(chroma);
  for (int i = 0; i < c.rows(); ++i) {
    for (int j = 0; j < c.cols(); ++j) {
      std::vector<std::pair<int, int>> cover;
      for (int di = 0; di < 2; ++di) {
        for (int dj = 0; dj < 2; ++dj) {
          if (2 * i + di < m.rows() && 2 * j + dj < m.cols()) cover.emplace_back(2 * i + di, 2 * j + dj);
        }
      }
      if (cover.empty()) {
        // Chroma padding beyond the luma grid: charge the nearest luma cell.
        cover.emplace_back(std::min(2 * i, m.rows() - 1), std::min(2 * j, m.cols() - 1));
      }
      for (const auto& [r, k] : cover) m.at(r, k) += c.at(i, j) / static_cast<double>(cover.size());
    }
  }
  return m;
}

}  // namespace qmc

#endif  // QMC_CODEC_HPP_
