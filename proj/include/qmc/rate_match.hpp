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

// Bit-rate matcher: finds beta so that the full container hits a target bpp.

#ifndef QMC_RATE_MATCH_HPP_
#define QMC_RATE_MATCH_HPP_

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmc/codec.hpp"
#include "qmc/error.hpp"
#include "qmc/image.hpp"

namespace qmc {

struct RateTarget {
  double bpp = 0.0;
  double tolerance = 0.10;
  int max_iterations = 20;

  void Validate() const {
    if (!(bpp > 0.0) || !std::isfinite(bpp)) throw InvalidArgument("RateTarget: bpp must be > 0");
    if (!(tolerance > 0.0 && tolerance < 1.0)) {
      throw InvalidArgument("RateTarget: tolerance must be in (0, 1)");
    }
    if (max_iterations < 1) throw InvalidArgument("RateTarget: max_iterations must be >= 1");
  }
};

// The target lies outside the rates spanned by the beta search interval.
class NotReachable : public std::runtime_error {
 public:
  NotReachable(double target, double beta_low, double bpp_low, double beta_high, double bpp_high)
      : std::runtime_error(Message(target, beta_low, bpp_low, beta_high, bpp_high)),
        target_(target),
        beta_low_(beta_low),
        bpp_low_(bpp_low),
        beta_high_(beta_high),
        bpp_high_(bpp_high) {}

  double target() const { return target_; }
  double beta_low() const { return beta_low_; }
  double bpp_low() const { return bpp_low_; }
  double beta_high() const { return beta_high_; }
  double bpp_high() const { return bpp_high_; }

 private:
  static std::string Message(double t, double bl, double rl, double bh, double rh) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "target %.4f bpp not reachable: beta %.6g -> %.4f bpp, beta %.6g -> %.4f bpp", t,
                  bl, rl, bh, rh);
    return buf;
  }

  double target_, beta_low_, bpp_low_, beta_high_, bpp_high_;
};

enum class RateStatus { kConverged, kIterationLimit };

inline const char* RateStatusName(RateStatus s) {
  return s == RateStatus::kConverged ? "converged" : "iteration-limit";
}

struct RateTrial {
  double beta;
  double bpp;
};

struct RateMatchResult {
  RateStatus status = RateStatus::kConverged;
  double beta = 0.0;
  double bpp = 0.0;
  std::vector<RateTrial> trials;
  EncodeResult encode;

  double relative_error(double target) const { return std::abs(bpp - target) / target; }
};

// Bisection on log(beta) over [beta_min / 8, beta_max * 8] of the luma gain
// unit. The two interval ends are encoded first; the target must lie between
// their rates. `config.beta` is ignored.
inline RateMatchResult MatchRate(const PlanarImage& image, const CodecConfig& config,
                                 const RateTarget& target) {
  target.Validate();
  const GainUnit unit = config.UnitY();
  CodecConfig cfg = config;
  RateMatchResult res;
  auto trial = [&](double beta) {
    cfg.beta = beta;
    EncodeResult e = Encode(image, cfg);
    res.trials.push_back({beta, e.bpp});
    return e;
  };
  auto within = [&](double bpp) { return std::abs(bpp - target.bpp) / target.bpp < target.tolerance; };
  auto accept = [&](EncodeResult e, double beta) {
    const double err = std::abs(e.bpp - target.bpp);
    if (res.encode.bytes.empty() || err < std::abs(res.bpp - target.bpp)) {
      res.beta = beta;
      res.bpp = e.bpp;
      res.encode = std::move(e);
    }
  };

  double lo = unit.beta_min() / 8.0;
  double hi = unit.beta_max() * 8.0;
  EncodeResult e_lo = trial(lo);
  EncodeResult e_hi = trial(hi);
  const double bpp_lo = e_lo.bpp, bpp_hi = e_hi.bpp;
  if (!(within(bpp_lo) || within(bpp_hi)) &&
      (target.bpp < bpp_lo || target.bpp > bpp_hi)) {
    throw NotReachable(target.bpp, lo, bpp_lo, hi, bpp_hi);
  }
  accept(std::move(e_lo), lo);
  accept(std::move(e_hi), hi);
  if (within(res.bpp)) return res;

  for (int it = 0; it < target.max_iterations; ++it) {
    const double mid = std::sqrt(lo * hi);
    EncodeResult e = trial(mid);
    const double bpp = e.bpp;
    accept(std::move(e), mid);
    if (within(bpp)) {
      res.status = RateStatus::kConverged;
      return res;
    }
    (bpp < target.bpp ? lo : hi) = mid;
  }
  res.status = RateStatus::kIterationLimit;
  return res;
}

}  // namespace qmc

#endif  // QMC_RATE_MATCH_HPP_
