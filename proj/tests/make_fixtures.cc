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

// Writes the synthetic fixture pictures, ROI mask and traces into a directory.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "fixtures.hpp"
#include "qmc/bdm.hpp"
#include "qmc/pnm.hpp"

namespace {

qmc::Trace GridTrace(int w, int h, int block, bool concentrate) {
  qmc::Trace t{w, h, {}};
  for (int y = 0; y < h; y += block) {
    for (int x = 0; x < w; x += block) {
      const double bits = concentrate && x >= w / 2 ? 400.0 : 40.0;
      t.blocks.push_back({x, y, std::min(block, w - x), std::min(block, h - y), bits});
    }
  }
  return t;
}

void WriteJson(const std::filesystem::path& p, const nlohmann::json& j) {
  std::ofstream(p) << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: make_fixtures <dir>\n");
    return 2;
  }
  namespace t = qmc::testing;
  const std::filesystem::path dir = argv[1];
  std::filesystem::create_directories(dir);
  qmc::WritePpm((dir / "flat.ppm").string(), t::FlatImage());
  qmc::WritePpm((dir / "textured.ppm").string(), t::TexturedImage());
  qmc::WritePpm((dir / "highfreq.ppm").string(), t::HighFrequencyImage());
  qmc::WritePpm((dir / "small.ppm").string(), t::TexturedImage(45, 37));
  qmc::WritePgm((dir / "roi.pgm").string(), t::CenteredRoiMask());
  WriteJson(dir / "trace_uniform.json", qmc::TraceToJson(GridTrace(256, 256, 16, false)));
  WriteJson(dir / "trace_concentrated.json", qmc::TraceToJson(GridTrace(256, 256, 32, true)));
  qmc::Trace overlap = GridTrace(64, 64, 32, false);
  overlap.blocks[1].x -= 1;
  WriteJson(dir / "trace_overlap.json", qmc::TraceToJson(overlap));
  return 0;
}
