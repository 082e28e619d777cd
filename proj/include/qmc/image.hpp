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

// Planar images, BT.709 full-range color conversion, replicate padding,
// PSNR and block statistics.

#ifndef QMC_IMAGE_HPP_
#define QMC_IMAGE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "qmc/error.hpp"

namespace qmc {

// Row-major 2-D array.
template <typename T>
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<size_t>(width) * static_cast<size_t>(height), fill) {
    if (width < 0 || height < 0) {
      throw InvalidArgument("Plane: negative dimensions");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y) { return data_[Index(x, y)]; }
  const T& at(int x, int y) const { return data_[Index(x, y)]; }
  T* Row(int y) { return data_.data() + Index(0, y); }
  const T* Row(int y) const { return data_.data() + Index(0, y); }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Plane& other) const = default;

 private:
  size_t Index(int x, int y) const {
    return static_cast<size_t>(y) * static_cast<size_t>(width_) +
           static_cast<size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Plane8 = Plane<uint8_t>;
using PlaneF = Plane<double>;

enum class ColorSpace { kRgb, kYuv444, kYuv420 };

inline const char* ColorSpaceName(ColorSpace cs) {
  switch (cs) {
    case ColorSpace::kRgb:
      return "RGB";
    case ColorSpace::kYuv444:
      return "YUV444";
    case ColorSpace::kYuv420:
      return "YUV420";
  }
  return "?";
}

// Three 8-bit planes. For YUV420 planes 1 and 2 are ceil(h/2) x ceil(w/2).
// orig_width/orig_height record the size before PadReplicate.
struct PlanarImage {
  int width = 0;
  int height = 0;
  int orig_width = 0;
  int orig_height = 0;
  ColorSpace colorspace = ColorSpace::kRgb;
  std::array<Plane8, 3> planes;

  static PlanarImage Make(int width, int height, ColorSpace cs) {
    PlanarImage img;
    img.width = img.orig_width = width;
    img.height = img.orig_height = height;
    img.colorspace = cs;
    const int cw = cs == ColorSpace::kYuv420 ? (width + 1) / 2 : width;
    const int ch = cs == ColorSpace::kYuv420 ? (height + 1) / 2 : height;
    img.planes[0] = Plane8(width, height);
    img.planes[1] = Plane8(cw, ch);
    img.planes[2] = Plane8(cw, ch);
    return img;
  }

  bool operator==(const PlanarImage& other) const = default;
};

inline uint8_t ClampToByte(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<uint8_t>(std::lround(v));
}

inline PlaneF ToFloat(const Plane8& p) {
  PlaneF out(p.width(), p.height());
  std::copy(p.data().begin(), p.data().end(), out.data().begin());
  return out;
}

inline Plane8 ToByte(const PlaneF& p) {
  Plane8 out(p.width(), p.height());
  std::transform(p.data().begin(), p.data().end(), out.data().begin(),
                 ClampToByte);
  return out;
}

// BT.709 luma weights.
inline constexpr double kKr = 0.2126;
inline constexpr double kKb = 0.0722;
inline constexpr double kKg = 1.0 - kKr - kKb;
inline constexpr double kCbScale = 2.0 * (1.0 - kKb);  // 1.8556
inline constexpr double kCrScale = 2.0 * (1.0 - kKr);  // 1.5748

struct Yuv {
  double y, u, v;
};

inline Yuv RgbToYuvPixel(double r, double g, double b) {
  const double y = kKr * r + kKg * g + kKb * b;
  return {y, (b - y) / kCbScale + 128.0, (r - y) / kCrScale + 128.0};
}

inline std::array<double, 3> YuvToRgbPixel(double y, double u, double v) {
  const double cb = u - 128.0;
  const double cr = v - 128.0;
  const double r = y + kCrScale * cr;
  const double b = y + kCbScale * cb;
  const double g = (y - kKr * r - kKb * b) / kKg;
  return {r, g, b};
}

// Full-range BT.709 with 2x2 box-averaged chroma. Odd edges average the
// samples that exist.
inline PlanarImage RgbToYuv420(const PlanarImage& img) {
  if (img.colorspace != ColorSpace::kRgb) {
    throw InvalidArgument("RgbToYuv420: input must be RGB");
  }
  const int w = img.width;
  const int h = img.height;
  PlaneF u_full(w, h), v_full(w, h);
  PlanarImage out = PlanarImage::Make(w, h, ColorSpace::kYuv420);
  out.orig_width = img.orig_width;
  out.orig_height = img.orig_height;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Yuv p = RgbToYuvPixel(img.planes[0].at(x, y), img.planes[1].at(x, y),
                                  img.planes[2].at(x, y));
      out.planes[0].at(x, y) = ClampToByte(p.y);
      u_full.at(x, y) = p.u;
      v_full.at(x, y) = p.v;
    }
  }
  const int cw = out.planes[1].width();
  const int ch = out.planes[1].height();
  for (int cy = 0; cy < ch; ++cy) {
    for (int cx = 0; cx < cw; ++cx) {
      double su = 0.0, sv = 0.0;
      int n = 0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const int x = 2 * cx + dx;
          const int y = 2 * cy + dy;
          if (x < w && y < h) {
            su += u_full.at(x, y);
            sv += v_full.at(x, y);
            ++n;
          }
        }
      }
      out.planes[1].at(cx, cy) = ClampToByte(su / n);
      out.planes[2].at(cx, cy) = ClampToByte(sv / n);
    }
  }
  return out;
}

inline PlanarImage Yuv420ToRgb(const PlanarImage& img) {
  if (img.colorspace != ColorSpace::kYuv420) {
    throw InvalidArgument("Yuv420ToRgb: input must be YUV420");
  }
  PlanarImage out = PlanarImage::Make(img.width, img.height, ColorSpace::kRgb);
  out.orig_width = img.orig_width;
  out.orig_height = img.orig_height;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const auto rgb =
          YuvToRgbPixel(img.planes[0].at(x, y), img.planes[1].at(x / 2, y / 2),
                        img.planes[2].at(x / 2, y / 2));
      for (int c = 0; c < 3; ++c) out.planes[c].at(x, y) = ClampToByte(rgb[c]);
    }
  }
  return out;
}

inline int RoundUp(int value, int multiple) {
  return (value + multiple - 1) / multiple * multiple;
}

template <typename T>
Plane<T> PadPlane(const Plane<T>& p, int width, int height) {
  if (p.width() == width && p.height() == height) return p;
  if (p.empty()) throw InvalidArgument("PadPlane: empty plane");
  Plane<T> out(width, height);
  for (int y = 0; y < height; ++y) {
    const T* src = p.Row(std::min(y, p.height() - 1));
    T* dst = out.Row(y);
    for (int x = 0; x < width; ++x) dst[x] = src[std::min(x, p.width() - 1)];
  }
  return out;
}

template <typename T>
Plane<T> CropPlane(const Plane<T>& p, int width, int height) {
  if (width > p.width() || height > p.height()) {
    throw InvalidArgument("CropPlane: crop larger than plane");
  }
  Plane<T> out(width, height);
  for (int y = 0; y < height; ++y) {
    std::copy(p.Row(y), p.Row(y) + width, out.Row(y));
  }
  return out;
}

// Extends width and height to the next multiple by edge replication.
// For YUV420 the chroma planes follow the padded luma size.
inline PlanarImage PadReplicate(const PlanarImage& img, int multiple) {
  if (multiple < 1) throw InvalidArgument("PadReplicate: multiple must be >= 1");
  PlanarImage out = img;
  out.width = RoundUp(img.width, multiple);
  out.height = RoundUp(img.height, multiple);
  const bool sub = img.colorspace == ColorSpace::kYuv420;
  out.planes[0] = PadPlane(img.planes[0], out.width, out.height);
  for (int c = 1; c < 3; ++c) {
    out.planes[c] =
        PadPlane(img.planes[c], sub ? (out.width + 1) / 2 : out.width,
                 sub ? (out.height + 1) / 2 : out.height);
  }
  return out;
}

// Crops back to orig_width x orig_height.
inline PlanarImage CropToOriginal(const PlanarImage& img) {
  PlanarImage out = img;
  out.width = img.orig_width;
  out.height = img.orig_height;
  const bool sub = img.colorspace == ColorSpace::kYuv420;
  out.planes[0] = CropPlane(img.planes[0], out.width, out.height);
  for (int c = 1; c < 3; ++c) {
    out.planes[c] =
        CropPlane(img.planes[c], sub ? (out.width + 1) / 2 : out.width,
                  sub ? (out.height + 1) / 2 : out.height);
  }
  return out;
}

inline constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();

template <typename T>
double SumSquaredError(const Plane<T>& a, const Plane<T>& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InvalidArgument("SumSquaredError: dimension mismatch");
  }
  double sse = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - b.data()[i];
    sse += d * d;
  }
  return sse;
}

// Returns kPsnrInfinite when the planes are identical.
template <typename T>
double Psnr(const Plane<T>& reference, const Plane<T>& test,
            double peak = 255.0) {
  const double sse = SumSquaredError(reference, test);
  if (sse == 0.0) return kPsnrInfinite;
  const double mse = sse / static_cast<double>(reference.size());
  return 10.0 * std::log10(peak * peak / mse);
}

inline std::string FormatPsnr(double db) {
  if (std::isinf(db)) return "inf";
  return std::to_string(db);
}

// Population variance of each non-overlapping block. Plane dims must be
// multiples of the block size.
template <typename T>
PlaneF BlockVarianceMap(const Plane<T>& plane, int block = 16) {
  if (block < 1 || plane.width() % block != 0 || plane.height() % block != 0) {
    throw InvalidArgument("BlockVarianceMap: plane not padded to block size");
  }
  PlaneF out(plane.width() / block, plane.height() / block);
  const double n = static_cast<double>(block) * block;
  for (int by = 0; by < out.height(); ++by) {
    for (int bx = 0; bx < out.width(); ++bx) {
      double sum = 0.0;
      for (int y = 0; y < block; ++y) {
        const T* row = plane.Row(by * block + y) + bx * block;
        for (int x = 0; x < block; ++x) sum += row[x];
      }
      const double mean = sum / n;
      double ss = 0.0;
      for (int y = 0; y < block; ++y) {
        const T* row = plane.Row(by * block + y) + bx * block;
        for (int x = 0; x < block; ++x) {
          const double d = row[x] - mean;
          ss += d * d;
        }
      }
      out.at(bx, by) = ss / n;
    }
  }
  return out;
}

}  // namespace qmc

#endif  // QMC_IMAGE_HPP_
