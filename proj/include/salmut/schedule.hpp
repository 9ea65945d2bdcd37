#pragma once

#include <cmath>
#include <stdexcept>

namespace salmut {

// Step-size family a(m) = 1 / (floor(m/denom_stride) + offset)^exponent.
// The value-update schedule holds each step for denom_stride counts before
// decaying; the defaults are the ones used throughout the experiments.
// {1, 0, 1} gives plain 1/m, i.e. a running mean.
struct PowerSchedule {
  double denom_stride = 100.0;
  double offset = 2.0;
  double exponent = 0.6;

  double at(long long m) const {
    if (m < 1) throw std::invalid_argument("PowerSchedule: index must be >= 1");
    const double denom = std::floor(static_cast<double>(m) / denom_stride) + offset;
    if (denom <= 0.0) throw std::invalid_argument("PowerSchedule: nonpositive denominator");
    return 1.0 / std::pow(denom, exponent);
  }

  void validate() const {
    if (denom_stride < 1.0) throw std::invalid_argument("PowerSchedule: denom_stride must be >= 1");
    if (offset < 0.0) throw std::invalid_argument("PowerSchedule: offset must be >= 0");
    if (offset == 0.0 && denom_stride > 1.0)
      throw std::invalid_argument("PowerSchedule: offset 0 needs denom_stride 1");
    if (exponent <= 0.5 || exponent > 1.0)
      throw std::invalid_argument("PowerSchedule: exponent must lie in (0.5, 1]");
  }
};

// Threshold-update step size b(n) = gain / n, with gain 0 meaning the
// thresholds are frozen.
struct HarmonicSchedule {
  double gain = 10.0;

  double at(long long n) const {
    if (n < 1) throw std::invalid_argument("HarmonicSchedule: index must be >= 1");
    return gain / static_cast<double>(n);
  }

  void validate() const {
    if (gain < 0.0) throw std::invalid_argument("HarmonicSchedule: gain must be >= 0");
  }
};

// The two timescales together: b(n)/a(n) -> 0, so threshold moves vanish
// relative to value moves.
struct StepSchedule {
  PowerSchedule faster{};
  HarmonicSchedule slower{};

  void validate() const {
    faster.validate();
    slower.validate();
  }
};

inline double step_size_a(const StepSchedule& s, long long m) { return s.faster.at(m); }
inline double step_size_b(const StepSchedule& s, long long n) { return s.slower.at(n); }

}  // namespace salmut
