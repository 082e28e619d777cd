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

// Deterministic stand-ins for the learned transforms. Analysis maps each
// 16x16 block to its C lowest zig-zag DCT coefficients (one latent element
// per block); the hyper path pools 2x2 latent cells into a mean bank and a
// scale bank (one hyper element per 32x32 block).

#ifndef QMC_TRANSFORM_HPP_
#define QMC_TRANSFORM_HPP_

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "qmc/entropy.hpp"
#include "qmc/error.hpp"
#include "qmc/gain.hpp"
#include "qmc/image.hpp"
#include "qmc/qmap.hpp"
#include "qmc/tensor.hpp"

namespace qmc {

inline constexpr int kBlockSize = 16;
inline constexpr int kBlockCoeffs = kBlockSize * kBlockSize;

namespace transform_internal {

// basis[k][n] = a(k) cos(pi (2n + 1) k / 32), orthonormal.
inline const std::array<std::array<double, kBlockSize>, kBlockSize>& DctBasis() {
  static const auto basis = [] {
    std::array<std::array<double, kBlockSize>, kBlockSize> b{};
    for (int k = 0; k < kBlockSize; ++k) {
      const double a = k == 0 ? std::sqrt(1.0 / kBlockSize) : std::sqrt(2.0 / kBlockSize);
      for (int n = 0; n < kBlockSize; ++n) {
        b[k][n] = a * std::cos(std::numbers::pi * (2 * n + 1) * k / (2.0 * kBlockSize));
      }
    }
    return b;
  }();
  return basis;
}

using Block = std::array<double, kBlockCoeffs>;

inline Block ForwardDct(const Block& in) {
  const auto& b = DctBasis();
  Block tmp{}, out{};
  for (int y = 0; y < kBlockSize; ++y) {
    for (int u = 0; u < kBlockSize; ++u) {
      double s = 0.0;
      for (int x = 0; x < kBlockSize; ++x) s += b[u][x] * in[y * kBlockSize + x];
      tmp[y * kBlockSize + u] = s;
    }
  }
  for (int v = 0; v < kBlockSize; ++v) {
    for (int u = 0; u < kBlockSize; ++u) {
      double s = 0.0;
      for (int y = 0; y < kBlockSize; ++y) s += b[v][y] * tmp[y * kBlockSize + u];
      out[v * kBlockSize + u] = s;
    }
  }
  return out;
}

inline Block InverseDct(const Block& in) {
  const auto& b = DctBasis();
  Block tmp{}, out{};
  for (int v = 0; v < kBlockSize; ++v) {
    for (int x = 0; x < kBlockSize; ++x) {
      double s = 0.0;
      for (int u = 0; u < kBlockSize; ++u) s += b[u][x] * in[v * kBlockSize + u];
      tmp[v * kBlockSize + x] = s;
    }
  }
  for (int y = 0; y < kBlockSize; ++y) {
    for (int x = 0; x < kBlockSize; ++x) {
      double s = 0.0;
      for (int v = 0; v < kBlockSize; ++v) s += b[v][y] * tmp[v * kBlockSize + x];
      out[y * kBlockSize + x] = s;
    }
  }
  return out;
}

}  // namespace transform_internal

// Raster positions (v * 16 + u) in zig-zag order.
inline const std::array<int, kBlockCoeffs>& ZigZagOrder() {
  static const auto order = [] {
    std::array<int, kBlockCoeffs> o{};
    int k = 0;
    for (int s = 0; s < 2 * kBlockSize - 1; ++s) {
      if (s % 2 == 1) {
        for (int v = 0; v <= s; ++v) {
          const int u = s - v;
          if (v < kBlockSize && u < kBlockSize) o[k++] = v * kBlockSize + u;
        }
      } else {
        for (int v = s; v >= 0; --v) {
          const int u = s - v;
          if (v < kBlockSize && u < kBlockSize) o[k++] = v * kBlockSize + u;
        }
      }
    }
    return o;
  }();
  return order;
}

// Plane dims must be multiples of 16.
inline LatentTensor Analysis(const PlaneF& plane, int channels) {
  if (channels < 1 || channels > kBlockCoeffs) {
    throw InvalidArgument("Analysis: channels must be in [1, 256]");
  }
  if (plane.width() % kBlockSize != 0 || plane.height() % kBlockSize != 0) {
    throw InvalidArgument("Analysis: plane not padded to a multiple of 16");
  }
  const auto& zz = ZigZagOrder();
  LatentTensor y(channels, plane.height() / kBlockSize, plane.width() / kBlockSize);
  transform_internal::Block blk{};
  for (int i = 0; i < y.rows(); ++i) {
    for (int j = 0; j < y.cols(); ++j) {
      for (int r = 0; r < kBlockSize; ++r) {
        const double* src = plane.Row(i * kBlockSize + r) + j * kBlockSize;
        std::copy(src, src + kBlockSize, blk.begin() + r * kBlockSize);
      }
      const auto coeffs = transform_internal::ForwardDct(blk);
      for (int c = 0; c < channels; ++c) y.at(c, i, j) = coeffs[static_cast<size_t>(zz[c])];
    }
  }
  return y;
}

// Coefficients beyond the latent's channel count are taken as zero. No
// clamping here.
inline PlaneF Synthesis(const LatentTensor& latent) {
  const auto& zz = ZigZagOrder();
  PlaneF out(latent.cols() * kBlockSize, latent.rows() * kBlockSize);
  for (int i = 0; i < latent.rows(); ++i) {
    for (int j = 0; j < latent.cols(); ++j) {
      transform_internal::Block coeffs{};
      for (int c = 0; c < latent.channels(); ++c) {
        coeffs[static_cast<size_t>(zz[c])] = latent.at(c, i, j);
      }
      const auto px = transform_internal::InverseDct(coeffs);
      for (int r = 0; r < kBlockSize; ++r) {
        std::copy(px.begin() + r * kBlockSize, px.begin() + (r + 1) * kBlockSize,
                  out.Row(i * kBlockSize + r) + j * kBlockSize);
      }
    }
  }
  return out;
}

// Mean bank: 2x2 average of y. Scale bank: 2x2 average of |y - mean|.
// Values are real; QuantizeHyper rounds them for coding.
inline HyperLatent HyperEncode(const LatentTensor& y) {
  if (y.rows() % 2 != 0 || y.cols() % 2 != 0) {
    throw InvalidArgument("HyperEncode: latent dims must be even");
  }
  HyperLatent z{LatentTensor(y.channels(), y.rows() / 2, y.cols() / 2),
                LatentTensor(y.channels(), y.rows() / 2, y.cols() / 2)};
  for (int c = 0; c < y.channels(); ++c) {
    for (int i = 0; i < z.mean.rows(); ++i) {
      for (int j = 0; j < z.mean.cols(); ++j) {
        const double a = y.at(c, 2 * i, 2 * j), b = y.at(c, 2 * i, 2 * j + 1);
        const double d = y.at(c, 2 * i + 1, 2 * j), e = y.at(c, 2 * i + 1, 2 * j + 1);
        const double m = (a + b + d + e) / 4.0;
        z.mean.at(c, i, j) = m;
        z.scale.at(c, i, j) =
            (std::abs(a - m) + std::abs(b - m) + std::abs(d - m) + std::abs(e - m)) / 4.0;
      }
    }
  }
  return z;
}

// Round half away from zero.
inline double RoundHalfAway(double v) { return std::round(v); }

inline HyperLatent QuantizeHyper(const HyperLatent& z) {
  HyperLatent q = z;
  for (double& v : q.mean.data()) v = RoundHalfAway(v);
  for (double& v : q.scale.data()) v = RoundHalfAway(v);
  return q;
}

inline LatentTensor Upsample2(const LatentTensor& t) {
  LatentTensor out(t.channels(), t.rows() * 2, t.cols() * 2);
  for (int c = 0; c < t.channels(); ++c) {
    for (int i = 0; i < out.rows(); ++i) {
      for (int j = 0; j < out.cols(); ++j) out.at(c, i, j) = t.at(c, i / 2, j / 2);
    }
  }
  return out;
}

struct MuSigma {
  LatentTensor mu;
  LatentTensor sigma;  // snapped to the entropy sigma grid
};

// mu: nearest-neighbour upsampled mean bank. sigma: upsampled scale bank,
// times the sigma gain, times the quality-map step when a map is given,
// clamped and snapped.
inline MuSigma PredictMuSigma(const HyperLatent& z_hat, const GainVector& sigma_gain,
                              const QualityIndexMap* qmap = nullptr) {
  MuSigma out{Upsample2(z_hat.mean), ApplySigmaGain(Upsample2(z_hat.scale), sigma_gain)};
  if (qmap != nullptr) out.sigma = ApplyQmap(out.sigma, *qmap, QmapDirection::kForward);
  for (double& s : out.sigma.data()) s = SnapSigma(s);
  return out;
}

}  // namespace qmc

#endif  // QMC_TRANSFORM_HPP_
