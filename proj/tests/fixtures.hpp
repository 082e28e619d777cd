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

// Deterministic synthetic test pictures.

#ifndef QMC_TESTS_FIXTURES_HPP_
#define QMC_TESTS_FIXTURES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "qmc/image.hpp"

namespace qmc::testing {

inline constexpr int kFixtureSize = 256;

// Smooth diagonal color ramp.
inline PlanarImage FlatImage(int w = kFixtureSize, int h = kFixtureSize) {
  PlanarImage img = PlanarImage::Make(w, h, ColorSpace::kRgb);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.planes[0].at(x, y) = ClampToByte(60.0 + 120.0 * x / w);
      img.planes[1].at(x, y) = ClampToByte(80.0 + 90.0 * y / h);
      img.planes[2].at(x, y) = ClampToByte(140.0 - 60.0 * (x + y) / (w + h));
    }
  }
  return img;
}

// Smoothly interpolated lattice noise in [-1, 1] with the given cell size.
inline PlaneF ValueNoise(int w, int h, int cell, uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const int gw = w / cell + 2, gh = h / cell + 2;
  PlaneF grid(gw, gh);
  for (double& v : grid.data()) v = uni(rng);
  auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };
  PlaneF out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int gx = x / cell, gy = y / cell;
      const double tx = smooth(static_cast<double>(x % cell) / cell);
      const double ty = smooth(static_cast<double>(y % cell) / cell);
      const double top = grid.at(gx, gy) * (1 - tx) + grid.at(gx + 1, gy) * tx;
      const double bot = grid.at(gx, gy + 1) * (1 - tx) + grid.at(gx + 1, gy + 1) * tx;
      out.at(x, y) = top * (1 - ty) + bot * ty;
    }
  }
  return out;
}

// Fractal (1/f) value noise: octave amplitudes proportional to cell size,
// texture strength increasing from left to right.
inline PlanarImage TexturedImage(int w = kFixtureSize, int h = kFixtureSize) {
  std::vector<PlaneF> luma, chroma;
  uint32_t seed = 12345;
  for (int cell : {64, 32, 16, 8, 4}) {
    luma.push_back(ValueNoise(w, h, cell, seed++));
    chroma.push_back(ValueNoise(w, h, cell, seed++));
  }
  PlanarImage img = PlanarImage::Make(w, h, ColorSpace::kRgb);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double strength = 0.4 + 1.2 * x / w;
      double l = 0.0, c = 0.0;
      int k = 0;
      for (double amp : {60.0, 30.0, 15.0, 8.0, 4.0}) {
        l += amp * luma[static_cast<size_t>(k)].at(x, y) * (k >= 2 ? strength : 1.0);
        c += amp * 0.5 * chroma[static_cast<size_t>(k)].at(x, y);
        ++k;
      }
      img.planes[0].at(x, y) = ClampToByte(125.0 + l + c);
      img.planes[1].at(x, y) = ClampToByte(120.0 + l * 0.9);
      img.planes[2].at(x, y) = ClampToByte(115.0 + l * 0.8 - c);
    }
  }
  return img;
}

// Fine checkerboard plus noise.
inline PlanarImage HighFrequencyImage(int w = kFixtureSize, int h = kFixtureSize) {
  std::mt19937 rng(777);
  std::uniform_int_distribution<int> noise(-40, 40);
  PlanarImage img = PlanarImage::Make(w, h, ColorSpace::kRgb);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double c = ((x / 2 + y / 2) % 2 == 0) ? 70.0 : 185.0;
      for (int p = 0; p < 3; ++p) img.planes[p].at(x, y) = ClampToByte(c + noise(rng));
    }
  }
  return img;
}

// Non-zero inside the central half of the picture.
inline Plane8 CenteredRoiMask(int w = kFixtureSize, int h = kFixtureSize) {
  Plane8 m(w, h);
  for (int y = h / 4; y < h - h / 4; ++y) {
    for (int x = w / 4; x < w - w / 4; ++x) m.at(x, y) = 255;
  }
  return m;
}

inline PlanarImage ConstantImage(int w, int h, uint8_t r, uint8_t g, uint8_t b) {
  PlanarImage img = PlanarImage::Make(w, h, ColorSpace::kRgb);
  std::fill(img.planes[0].data().begin(), img.planes[0].data().end(), r);
  std::fill(img.planes[1].data().begin(), img.planes[1].data().end(), g);
  std::fill(img.planes[2].data().begin(), img.planes[2].data().end(), b);
  return img;
}

}  // namespace qmc::testing

#endif  // QMC_TESTS_FIXTURES_HPP_
