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

// Binary PNM (P5 grayscale, P6 RGB), maxval 255 only.

#ifndef QMC_PNM_HPP_
#define QMC_PNM_HPP_

#include <cctype>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "qmc/error.hpp"
#include "qmc/image.hpp"

namespace qmc {

struct PnmData {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 for P5, 3 for P6
  std::vector<uint8_t> samples;  // interleaved
};

namespace pnm_internal {

class HeaderReader {
 public:
  explicit HeaderReader(const std::vector<uint8_t>& bytes) : bytes_(bytes) {}

  void SkipSpaceAndComments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int ReadInt() {
    SkipSpaceAndComments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw FormatError("PNM: expected integer in header");
    }
    long long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > (1 << 24)) throw FormatError("PNM: header value too large");
    }
    return static_cast<int>(v);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void ConsumeSingleSpace() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw FormatError("PNM: missing whitespace after maxval");
    }
    ++pos_;
  }

  size_t pos() const { return pos_; }
  void set_pos(size_t p) { pos_ = p; }

 private:
  const std::vector<uint8_t>& bytes_;
  size_t pos_ = 0;
};

}  // namespace pnm_internal

inline PnmData DecodePnm(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError("PNM: only binary P5/P6 supported");
  }
  PnmData out;
  out.channels = bytes[1] == '5' ? 1 : 3;
  pnm_internal::HeaderReader reader(bytes);
  reader.set_pos(2);
  out.width = reader.ReadInt();
  out.height = reader.ReadInt();
  const int maxval = reader.ReadInt();
  if (maxval != 255) throw FormatError("PNM: only maxval 255 supported");
  if (out.width <= 0 || out.height <= 0) throw FormatError("PNM: empty image");
  reader.ConsumeSingleSpace();
  const size_t n = static_cast<size_t>(out.width) * out.height * out.channels;
  if (bytes.size() - reader.pos() < n) throw FormatError("PNM: truncated raster");
  out.samples.assign(bytes.begin() + static_cast<std::ptrdiff_t>(reader.pos()),
                     bytes.begin() + static_cast<std::ptrdiff_t>(reader.pos() + n));
  return out;
}

inline std::vector<uint8_t> EncodePnm(const PnmData& data) {
  std::ostringstream header;
  header << (data.channels == 1 ? "P5" : "P6") << "\n"
         << data.width << " " << data.height << "\n255\n";
  const std::string h = header.str();
  std::vector<uint8_t> out(h.begin(), h.end());
  out.insert(out.end(), data.samples.begin(), data.samples.end());
  return out;
}

inline std::vector<uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                              std::istreambuf_iterator<char>());
}

inline void WriteFileBytes(const std::string& path,
                           const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

inline Plane8 ReadPgm(const std::string& path) {
  const PnmData d = DecodePnm(ReadFileBytes(path));
  if (d.channels != 1) throw FormatError("'" + path + "' is not a P5 image");
  Plane8 p(d.width, d.height);
  p.data() = d.samples;
  return p;
}

inline void WritePgm(const std::string& path, const Plane8& plane) {
  WriteFileBytes(path, EncodePnm({plane.width(), plane.height(), 1, plane.data()}));
}

// Reads P6 as RGB, or P5 as a gray RGB image (R = G = B).
inline PlanarImage ReadPpm(const std::string& path) {
  const PnmData d = DecodePnm(ReadFileBytes(path));
  PlanarImage img = PlanarImage::Make(d.width, d.height, ColorSpace::kRgb);
  const size_t n = static_cast<size_t>(d.width) * d.height;
  for (size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) {
      img.planes[c].data()[i] =
          d.channels == 1 ? d.samples[i] : d.samples[i * 3 + static_cast<size_t>(c)];
    }
  }
  return img;
}

inline void WritePpm(const std::string& path, const PlanarImage& img) {
  PlanarImage rgb = img.colorspace == ColorSpace::kYuv420 ? Yuv420ToRgb(img) : img;
  if (rgb.colorspace != ColorSpace::kRgb) {
    throw InvalidArgument("WritePpm: YUV444 output is not supported");
  }
  PnmData d{rgb.width, rgb.height, 3, {}};
  const size_t n = static_cast<size_t>(rgb.width) * rgb.height;
  d.samples.resize(n * 3);
  for (size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) d.samples[i * 3 + static_cast<size_t>(c)] = rgb.planes[c].data()[i];
  }
  WriteFileBytes(path, EncodePnm(d));
}

}  // namespace qmc

#endif  // QMC_PNM_HPP_
