#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "salmut/event_model.hpp"

namespace salmut {

// Overflow-safe logistic; templated so the finite-difference oracles can
// run it at long double precision.
template <class Real>
Real logistic(Real x) {
  if (x >= Real(0)) return Real(1) / (Real(1) + std::exp(-x));
  const Real e = std::exp(x);
  return e / (Real(1) + e);
}

// Probability that the randomized relaxation of the threshold rule keeps
// the state (blocks) when a controlled event fires at state s under
// threshold t. Tends to 0 well below the threshold and to 1 well above;
// equals 1/2 halfway between s = t and s = t - 1.
template <class Real>
Real smooth_prob(Real s, Real t) {
  return logistic<Real>(s - t - Real(0.5));
}

inline double smooth_prob(int s, double t) {
  return smooth_prob<double>(static_cast<double>(s), t);
}

// d/dt of smooth_prob, always negative: raising the threshold lowers the
// blocking probability
template <class Real>
Real smooth_prob_grad(Real s, Real t) {
  const Real f = smooth_prob<Real>(s, t);
  return -f * (Real(1) - f);
}

inline double smooth_prob_grad(int s, double t) {
  return smooth_prob_grad<double>(static_cast<double>(s), t);
}

// Real-valued admission thresholds, one per controlled class, kept ordered
// bound >= tau[0] >= tau[1] >= ... >= 0 at all times. Class 0 is the most
// valuable, so it keeps the largest threshold.
class ThresholdVector {
 public:
  ThresholdVector(numvec entries, double bound) : tau_(std::move(entries)), bound_(bound) {
    if (bound_ <= 0.0) throw std::invalid_argument("ThresholdVector: bound must be positive");
    if (tau_.empty()) throw std::invalid_argument("ThresholdVector: need at least one entry");
    for (std::size_t k = 0; k < tau_.size(); ++k) {
      if (!(tau_[k] >= 0.0) || tau_[k] > bound_)
        throw std::invalid_argument("ThresholdVector: entry outside [0, bound]");
      if (k > 0 && tau_[k] > tau_[k - 1])
        throw std::invalid_argument("ThresholdVector: entries must be nonincreasing");
    }
  }

  static ThresholdVector zeros(std::size_t n, double bound) {
    return ThresholdVector(numvec(n, 0.0), bound);
  }

  std::size_t size() const { return tau_.size(); }
  double bound() const { return bound_; }
  double operator[](std::size_t k) const { return tau_[k]; }
  const numvec& entries() const { return tau_; }

  // clamp a candidate value for component k into its feasible interval
  // [0, preceding entry]; the first component is capped by the bound
  double project(std::size_t k, double x) const {
    if (k >= tau_.size()) throw std::invalid_argument("ThresholdVector: component out of range");
    const double hi = k == 0 ? bound_ : tau_[k - 1];
    return std::clamp(x, 0.0, hi);
  }

  // set component k to the projected candidate, then sweep the later
  // components downward so the ordering invariant survives a large move.
  // Returns how many entries actually changed.
  int update_component(std::size_t k, double x) {
    if (k >= tau_.size()) throw std::invalid_argument("ThresholdVector: component out of range");
    int changed = 0;
    double v = project(k, x);
    if (v != tau_[k]) {
      tau_[k] = v;
      ++changed;
    }
    for (std::size_t j = k + 1; j < tau_.size(); ++j) {
      if (tau_[j] > tau_[j - 1]) {
        tau_[j] = tau_[j - 1];
        ++changed;
      }
    }
    return changed;
  }

 private:
  numvec tau_;
  double bound_;
};

// Hard policy read off the thresholds: admit class k at state s iff
// s < tau[k], never at the ceiling.
inline ActionKind select_action(const ThresholdVector& tau, int s, std::size_t class_index,
                                int max_state) {
  if (s < 0 || s > max_state) throw std::invalid_argument("select_action: state out of range");
  if (class_index >= tau.size()) throw std::invalid_argument("select_action: class out of range");
  if (s == max_state) return ActionKind::Block;
  return static_cast<double>(s) < tau[class_index] ? ActionKind::Admit : ActionKind::Block;
}

}  // namespace salmut
