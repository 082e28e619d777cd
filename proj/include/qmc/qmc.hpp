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

#ifndef QMC_QMC_HPP_
#define QMC_QMC_HPP_

#include "qmc/bdm.hpp"
#include "qmc/codec.hpp"
#include "qmc/entropy.hpp"
#include "qmc/error.hpp"
#include "qmc/experiment.hpp"
#include "qmc/gain.hpp"
#include "qmc/image.hpp"
#include "qmc/pnm.hpp"
#include "qmc/qmap.hpp"
#include "qmc/range_coder.hpp"
#include "qmc/rate_match.hpp"
#include "qmc/rd_optimize.hpp"
#include "qmc/tensor.hpp"
#include "qmc/transform.hpp"

#endif  // QMC_QMC_HPP_
