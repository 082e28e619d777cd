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

// Gain units: per-channel quantization scale vectors keyed by the
// rate-distortion trade-off beta, for continuous variable rate.

#ifndef QMC_GAIN_HPP_
#define QMC_GAIN_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmc/error.hpp"
#include "qmc/tensor.hpp"

namespace qmc {

// Per-channel positive scale factors. The inverse is always derived.
class GainVector {
 public:
  GainVector() = default;
  explicit GainVector(std::vector<double> m) : m_(std::move(m)) {
    for (double v : m_) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw InvalidArgument("GainVector: entries must be positive and finite");
      }
    }
  }

  static GainVector Ones(int channels) {
    return GainVector(std::vector<double>(static_cast<size_t>(channels), 1.0));
  }

  int channels() const { return static_cast<int>(m_.size()); }
  double operator[](int c) const { return m_[static_cast<size_t>(c)]; }
  const std::vector<double>& values() const { return m_; }

  GainVector Inverse() const {
    std::vector<double> inv(m_.size());
    std::transform(m_.begin(), m_.end(), inv.begin(), [](double v) { return 1.0 / v; });
    return GainVector(std::move(inv));
  }

  GainVector Scaled(double s) const {
    std::vector<double> out(m_.size());
    std::transform(m_.begin(), m_.end(), out.begin(), [s](double v) { return v * s; });
    return GainVector(std::move(out));
  }

  bool operator==(const GainVector&) const = default;

 private:
  std::vector<double> m_;
};

enum class InterpolationMode {
  kLinear,        // m_l + (m_h - m_l) * t
  kPaperLiteral,  // m_l * t, t = (beta - beta_l) / (beta_h - beta_l)
};

inline const char* InterpolationModeName(InterpolationMode mode) {
  return mode == InterpolationMode::kLinear ? "linear" : "paper-literal";
}

// Ordered (beta, gain vector) pairs, strictly increasing in beta.
class GainUnit {
 public:
  struct Entry {
    double beta;
    GainVector gain;
  };

  GainUnit() = default;
  explicit GainUnit(std::vector<Entry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw InvalidArgument("GainUnit: no entries");
    const int c = entries_.front().gain.channels();
    for (size_t i = 0; i < entries_.size(); ++i) {
      if (!(entries_[i].beta > 0.0)) throw InvalidArgument("GainUnit: beta must be > 0");
      if (entries_[i].gain.channels() != c) {
        throw InvalidArgument("GainUnit: vectors differ in channel count");
      }
      if (i > 0 && !(entries_[i].beta > entries_[i - 1].beta)) {
        throw InvalidArgument("GainUnit: betas must be strictly increasing");
      }
    }
  }

  // Four stored betas {1, 2, 4, 8} with m[c] = sqrt(beta / beta_min).
  static GainUnit Default(int channels) {
    std::vector<Entry> e;
    for (double beta : {1.0, 2.0, 4.0, 8.0}) {
      e.push_back({beta, GainVector(std::vector<double>(
                             static_cast<size_t>(channels), std::sqrt(beta / 1.0)))});
    }
    return GainUnit(std::move(e));
  }

  const std::vector<Entry>& entries() const { return entries_; }
  int channels() const { return entries_.front().gain.channels(); }
  double beta_min() const { return entries_.front().beta; }
  double beta_max() const { return entries_.back().beta; }

  bool operator==(const GainUnit& o) const {
    if (entries_.size() != o.entries_.size()) return false;
    for (size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].beta != o.entries_[i].beta || !(entries_[i].gain == o.entries_[i].gain)) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<Entry> entries_;
};

// Gain vector for an arbitrary beta. Outside [beta_min, beta_max] the nearest
// stored vector is scaled by beta / beta_t; inside, the bracketing pair is
// interpolated according to `mode`.
inline GainVector GainForBeta(const GainUnit& unit, double beta,
                              InterpolationMode mode = InterpolationMode::kLinear) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw InvalidArgument("GainForBeta: beta must be positive");
  }
  const auto& e = unit.entries();
  for (const auto& entry : e) {
    if (entry.beta == beta) return entry.gain;
  }
  if (beta < e.front().beta) return e.front().gain.Scaled(beta / e.front().beta);
  if (beta > e.back().beta) return e.back().gain.Scaled(beta / e.back().beta);
  size_t h = 1;
  while (e[h].beta < beta) ++h;
  const auto& lo = e[h - 1];
  const auto& hi = e[h];
  const double t = (beta - lo.beta) / (hi.beta - lo.beta);
  if (mode == InterpolationMode::kPaperLiteral) return lo.gain.Scaled(t);
  std::vector<double> m(static_cast<size_t>(lo.gain.channels()));
  for (int c = 0; c < lo.gain.channels(); ++c) {
    m[static_cast<size_t>(c)] = lo.gain[c] + (hi.gain[c] - lo.gain[c]) * t;
  }
  return GainVector(std::move(m));
}

// Multiplies every element of channel c by g[c].
inline LatentTensor ApplyGain(const LatentTensor& latent, const GainVector& g) {
  if (latent.channels() != g.channels()) {
    throw InvalidArgument("ApplyGain: channel mismatch (" +
                          std::to_string(latent.channels()) + " vs " +
                          std::to_string(g.channels()) + ")");
  }
  LatentTensor out = latent;
  const size_t plane = static_cast<size_t>(latent.rows()) * latent.cols();
  for (int c = 0; c < latent.channels(); ++c) {
    double* p = out.data().data() + static_cast<size_t>(c) * plane;
    for (size_t k = 0; k < plane; ++k) p[k] *= g[c];
  }
  return out;
}

// The sigma map lives in the latent's scale, so the same vector applies.
inline LatentTensor ApplySigmaGain(const LatentTensor& sigma, const GainVector& g) {
  return ApplyGain(sigma, g);
}

inline nlohmann::json GainUnitToJson(const GainUnit& unit) {
  nlohmann::json j;
  j["betas"] = nlohmann::json::array();
  j["vectors"] = nlohmann::json::array();
  for (const auto& e : unit.entries()) {
    j["betas"].push_back(e.beta);
    j["vectors"].push_back(e.gain.values());
  }
  return j;
}

inline GainUnit GainUnitFromJson(const nlohmann::json& j) {
  try {
    const auto betas = j.at("betas").get<std::vector<double>>();
    const auto vectors = j.at("vectors").get<std::vector<std::vector<double>>>();
    if (betas.size() != vectors.size()) {
      throw FormatError("gain unit: betas and vectors differ in length");
    }
    std::vector<GainUnit::Entry> entries;
    for (size_t i = 0; i < betas.size(); ++i) {
      entries.push_back({betas[i], GainVector(vectors[i])});
    }
    return GainUnit(std::move(entries));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("gain unit: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("gain unit: ") + e.what());
  }
}

}  // namespace qmc

#endif  // QMC_GAIN_HPP_
