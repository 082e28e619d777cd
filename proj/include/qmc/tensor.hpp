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

#ifndef QMC_TENSOR_HPP_
#define QMC_TENSOR_HPP_

#include <cstddef>
#include <vector>

#include "qmc/error.hpp"

namespace qmc {

// C x rows x cols real tensor. Used for the latent (1/16 scale), the hyper
// banks (1/32 scale), mu and sigma.
class LatentTensor {
 public:
  LatentTensor() = default;
  LatentTensor(int channels, int rows, int cols, double fill = 0.0)
      : channels_(channels), rows_(rows), cols_(cols),
        data_(static_cast<size_t>(channels) * rows * cols, fill) {
    if (channels < 0 || rows < 0 || cols < 0) {
      throw InvalidArgument("LatentTensor: negative shape");
    }
  }

  int channels() const { return channels_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }

  double& at(int c, int i, int j) { return data_[Index(c, i, j)]; }
  double at(int c, int i, int j) const { return data_[Index(c, i, j)]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool SameShape(const LatentTensor& o) const {
    return channels_ == o.channels_ && rows_ == o.rows_ && cols_ == o.cols_;
  }

  bool operator==(const LatentTensor&) const = default;

 private:
  size_t Index(int c, int i, int j) const {
    return (static_cast<size_t>(c) * rows_ + i) * cols_ + j;
  }

  int channels_ = 0;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Hyper latent: both banks share the shape (C, rows/2, cols/2) of the latent
// they summarise.
struct HyperLatent {
  LatentTensor mean;
  LatentTensor scale;
};

}  // namespace qmc

#endif  // QMC_TENSOR_HPP_
