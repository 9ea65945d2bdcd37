#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "salmut/event_model.hpp"
#include "salmut/threshold.hpp"

namespace salmut {

struct RviaResult {
  numvec values;                 // normalized so values[reference] == 0
  std::vector<int> thresholds;   // one per controlled class
  double gain = 0.0;
  long long iterations = 0;
  double final_span = 0.0;
};

struct ConcavityReport {
  bool ok = true;
  int first_violation = -1;  // state s where V(s+1)-V(s) increased
};

struct MonotoneReport {
  bool ok = true;
  int sweep = -1;
  int state = -1;
};

struct PolicyEvaluation {
  numvec stationary;
  double sigma = 0.0;
  numvec values;  // bias values, normalized at the model's reference state
};

struct BruteForceResult {
  std::vector<int> thresholds;
  double gain = 0.0;
  long long policies_evaluated = 0;
};

struct SliceViolation {
  int coordinate = -1;          // class whose threshold varies
  std::vector<int> fixed;       // the other coordinates, in class order
  int at_value = -1;            // slice position where the profile rises again
};

struct UnimodalityReport {
  long long slices_checked = 0;
  std::vector<SliceViolation> violations;
  bool ok() const { return violations.empty(); }
};

struct SmoothedMaximizer {
  numvec tau;
  numvec gradient;
  double optimality_gap = 0.0;  // largest first-order violation over feasible moves
  double sigma = 0.0;
};

// One synchronous dynamic-programming sweep. Each event contributes its
// probability times the best feasible action value; the admit branch
// disappears at the ceiling automatically because it is infeasible there.
numvec via_sweep(const EventModel& model, const numvec& values);

// Relative value iteration from zero: sweep, renormalize at the reference
// state, stop when the span of successive differences drops below tol.
// The gain is the pre-normalization increment at the reference state.
RviaResult rvia_solve(const EventModel& model, double tol = 1e-10, long long max_iter = 1000000);

// Per class, the first state whose forward difference drops to -reward or
// below; the ceiling if none does. On concave values with class rewards
// weakly decreasing these come out ordered.
std::vector<int> extract_thresholds(const numvec& values, const EventModel& model);

ConcavityReport check_concavity(const numvec& values, double tol = 1e-9);

// Runs `sweeps` plain sweeps from zero and verifies the forward differences
// never increase from one sweep to the next (within tol).
MonotoneReport check_monotone_in_n(const EventModel& model, int sweeps, double tol = 1e-9);

// Single-step transition matrix of the deterministic threshold policy
// (admit class k at s iff s < tau[k]); real-valued thresholds allowed.
Eigen::MatrixXd hard_kernel(const EventModel& model, const numvec& tau);
numvec hard_reward(const EventModel& model, const numvec& tau);

// Randomized relaxation: a controlled event at s stays put with probability
// smooth_prob(s, tau[k]) and admits otherwise. At the ceiling it always
// stays and earns no admission reward, whatever the threshold.
Eigen::MatrixXd smoothed_kernel(const EventModel& model, const ThresholdVector& tau);
double smoothed_reward(const EventModel& model, const ThresholdVector& tau, int s);

// Unique stationary row vector of an irreducible-unichain kernel. Throws if
// the kernel is not stochastic or the chain has no unique stationary law.
numvec stationary_distribution(const Eigen::MatrixXd& kernel);

// Stationary distribution, long-run average reward, and bias values of the
// threshold policy, hard or smoothed. The numvec overload accepts unordered
// entries: each class reads only its own threshold, so the policy is well
// defined either way (a learner's greedy thresholds can cross mid-training).
PolicyEvaluation average_reward_sigma(const EventModel& model, const numvec& tau, bool smoothed);
PolicyEvaluation average_reward_sigma(const EventModel& model, const ThresholdVector& tau,
                                      bool smoothed);

// Exact gradient of the smoothed average reward with respect to each
// threshold. include_g_term=false drops the direct reward sensitivity and
// keeps only the value-shift part, mirroring the learner's coupled-draw
// variant in expectation up to that same term.
numvec gradient_sigma(const EventModel& model, const ThresholdVector& tau,
                      bool include_g_term = true);

// All integer threshold vectors with bound >= t1 >= ... >= tN >= 0,
// ascending lexicographic order.
std::vector<std::vector<int>> enumerate_ordered_policies(int max_state, int num_classes);

// Exhaustive search over ordered integer vectors under the hard policy.
BruteForceResult brute_force_optimal_tau(const EventModel& model);

// For every coordinate and every fixed setting of the others, walk the
// feasible integer range and flag profiles that rise again after falling.
UnimodalityReport unimodality_scan(const EventModel& model, double tol = 1e-9);

// Coordinate-wise maximization of the smoothed average reward over the
// ordered box, with a first-order optimality certificate. The gap reported
// is the worst uphill directional derivative among feasible block moves.
SmoothedMaximizer maximize_smoothed_sigma(const EventModel& model, double coord_tol = 1e-11,
                                          int max_cycles = 200);

namespace detail {

template <class Real>
using DenseMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
template <class Real>
using DenseVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

// Kernel and expected lump reward of the smoothed policy for raw threshold
// entries. No ordering validation here: the finite-difference oracles nudge
// one coordinate at a time and may momentarily break the ordering.
template <class Real>
void smoothed_system(const EventModel& model, const std::vector<Real>& tau,
                     DenseMatrix<Real>& kernel, DenseVector<Real>& reward) {
  const int n = model.num_states();
  const int W = model.max_state();
  kernel = DenseMatrix<Real>::Zero(n, n);
  reward = DenseVector<Real>::Zero(n);
  for (int s = 0; s < n; ++s) {
    Real g = -Real(model.cost(s));
    const numvec& probs = model.event_probs(s);
    for (int i = 0; i < model.num_events(); ++i) {
      const Real p = Real(probs[i]);
      if (p == Real(0)) continue;
      if (!model.is_controlled(i)) {
        kernel(s, model.apply_action(s, i, ActionKind::Continue)) += p;
        continue;
      }
      if (s == W) {
        kernel(s, model.apply_action(s, i, ActionKind::Block)) += p;
        continue;
      }
      const int k = model.controlled_index(i);
      const Real f = smooth_prob<Real>(Real(s), tau[static_cast<std::size_t>(k)]);
      kernel(s, model.apply_action(s, i, ActionKind::Block)) += p * f;
      kernel(s, model.apply_action(s, i, ActionKind::Admit)) += p * (Real(1) - f);
      g += p * (Real(1) - f) * Real(model.reward(i));
    }
    reward(s) = g;
  }
}

template <class Real>
DenseVector<Real> stationary(const DenseMatrix<Real>& kernel, double residual_tol = 1e-10) {
  const auto n = kernel.rows();
  if (kernel.cols() != n) throw std::invalid_argument("stationary: kernel must be square");
  for (Eigen::Index s = 0; s < n; ++s) {
    Real row = kernel.row(s).sum();
    if (std::abs(double(row - Real(1))) > 1e-12)
      throw std::invalid_argument("stationary: kernel rows must sum to one");
  }
  // pi' (P - I) = 0 with one equation replaced by normalization
  DenseMatrix<Real> A = kernel.transpose() - DenseMatrix<Real>::Identity(n, n);
  A.row(n - 1).setOnes();
  DenseVector<Real> b = DenseVector<Real>::Zero(n);
  b(n - 1) = Real(1);
  Eigen::FullPivLU<DenseMatrix<Real>> lu(A);
  if (!lu.isInvertible())
    throw std::runtime_error("stationary: no unique stationary distribution (chain not unichain)");
  DenseVector<Real> pi = lu.solve(b);
  for (Eigen::Index s = 0; s < n; ++s) {
    if (pi(s) < Real(0)) {
      if (double(pi(s)) < -1e-12) throw std::runtime_error("stationary: negative mass in solution");
      pi(s) = Real(0);
    }
  }
  pi /= pi.sum();
  const Real residual = (kernel.transpose() * pi - pi).template lpNorm<Eigen::Infinity>();
  if (double(residual) > residual_tol)
    throw std::runtime_error("stationary: fixed-point residual too large");
  return pi;
}

// Bias values and gain from the linear system
//   V(s) - sum_t P(s,t) V(t) + sigma = g(s),  V(reference) = 0.
template <class Real>
void policy_values(const DenseMatrix<Real>& kernel, const DenseVector<Real>& reward,
                   int reference_state, DenseVector<Real>& values, Real& sigma) {
  const auto n = kernel.rows();
  DenseMatrix<Real> A = DenseMatrix<Real>::Zero(n + 1, n + 1);
  A.topLeftCorner(n, n) = DenseMatrix<Real>::Identity(n, n) - kernel;
  A.topRightCorner(n, 1).setOnes();
  A(n, reference_state) = Real(1);
  DenseVector<Real> b = DenseVector<Real>::Zero(n + 1);
  b.head(n) = reward;
  Eigen::FullPivLU<DenseMatrix<Real>> lu(A);
  if (!lu.isInvertible())
    throw std::runtime_error("policy_values: singular evaluation system (chain not unichain)");
  DenseVector<Real> x = lu.solve(b);
  const Real residual = (A * x - b).template lpNorm<Eigen::Infinity>();
  if (double(residual) > 1e-9) throw std::runtime_error("policy_values: residual too large");
  values = x.head(n);
  sigma = x(n);
}

template <class Real>
Real smoothed_sigma(const EventModel& model, const std::vector<Real>& tau) {
  DenseMatrix<Real> kernel;
  DenseVector<Real> reward;
  smoothed_system(model, tau, kernel, reward);
  DenseVector<Real> pi = stationary(kernel);
  return pi.dot(reward);
}

}  // namespace detail

}  // namespace salmut
