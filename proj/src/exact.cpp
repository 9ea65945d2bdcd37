#include "salmut/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace salmut {

namespace {

void check_values_size(const numvec& values, const EventModel& model, const char* who) {
  if (static_cast<int>(values.size()) != model.num_states())
    throw std::invalid_argument(std::string(who) + ": value table size does not match the model");
}

// kernel and expected lump reward of the deterministic threshold policy;
// thresholds may be real-valued, admit iff s < tau[class]
void hard_system(const EventModel& model, const numvec& tau, Eigen::MatrixXd& kernel,
                 Eigen::VectorXd& reward) {
  if (static_cast<int>(tau.size()) != model.num_classes())
    throw std::invalid_argument("hard_system: one threshold per controlled class required");
  const int n = model.num_states();
  const int W = model.max_state();
  kernel = Eigen::MatrixXd::Zero(n, n);
  reward = Eigen::VectorXd::Zero(n);
  for (int s = 0; s < n; ++s) {
    double g = -model.cost(s);
    const numvec& probs = model.event_probs(s);
    for (int i = 0; i < model.num_events(); ++i) {
      const double p = probs[i];
      if (p == 0.0) continue;
      if (!model.is_controlled(i)) {
        kernel(s, model.apply_action(s, i, ActionKind::Continue)) += p;
        continue;
      }
      const int k = model.controlled_index(i);
      const bool admit = s < W && static_cast<double>(s) < tau[static_cast<std::size_t>(k)];
      if (admit) {
        kernel(s, model.apply_action(s, i, ActionKind::Admit)) += p;
        g += p * model.reward(i);
      } else {
        kernel(s, model.apply_action(s, i, ActionKind::Block)) += p;
      }
    }
    reward(s) = g;
  }
}

numvec to_numvec(const Eigen::VectorXd& v) { return numvec(v.data(), v.data() + v.size()); }

PolicyEvaluation evaluate_system(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& reward,
                                 int reference_state) {
  PolicyEvaluation out;
  Eigen::VectorXd pi = detail::stationary<double>(kernel);
  const double sigma_pi = pi.dot(reward);
  Eigen::VectorXd values;
  double sigma_aug = 0.0;
  detail::policy_values<double>(kernel, reward, reference_state, values, sigma_aug);
  if (std::abs(sigma_pi - sigma_aug) > 1e-9)
    throw std::runtime_error("average_reward_sigma: gain estimates disagree");
  out.stationary = to_numvec(pi);
  out.sigma = sigma_aug;
  out.values = to_numvec(values);
  return out;
}

}  // namespace

numvec via_sweep(const EventModel& model, const numvec& values) {
  check_values_size(values, model, "via_sweep");
  const int n = model.num_states();
  numvec out(static_cast<std::size_t>(n), 0.0);
  for (int s = 0; s < n; ++s) {
    double acc = 0.0;
    const numvec& probs = model.event_probs(s);
    for (int i = 0; i < model.num_events(); ++i) {
      const double p = probs[i];
      if (p == 0.0) continue;
      double best = -std::numeric_limits<double>::infinity();
      for (ActionKind a : model.feasible_actions(s, i)) {
        const double q = model.lump_reward(s, i, a) +
                         values[static_cast<std::size_t>(model.apply_action(s, i, a))];
        best = std::max(best, q);
      }
      acc += p * best;
    }
    out[static_cast<std::size_t>(s)] = acc;
  }
  return out;
}

RviaResult rvia_solve(const EventModel& model, double tol, long long max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("rvia_solve: tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("rvia_solve: max_iter must be >= 1");
  const int ref = model.reference_state();
  numvec v(static_cast<std::size_t>(model.num_states()), 0.0);
  double span = std::numeric_limits<double>::infinity();
  for (long long it = 1; it <= max_iter; ++it) {
    numvec t = via_sweep(model, v);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t s = 0; s < v.size(); ++s) {
      const double d = t[s] - v[s];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    span = hi - lo;
    const double gain = t[static_cast<std::size_t>(ref)] - v[static_cast<std::size_t>(ref)];
    const double shift = t[static_cast<std::size_t>(ref)];
    for (double& x : t) x -= shift;
    v = std::move(t);
    if (span < tol) {
      RviaResult res;
      res.values = std::move(v);
      res.thresholds = extract_thresholds(res.values, model);
      res.gain = gain;
      res.iterations = it;
      res.final_span = span;
      return res;
    }
  }
  throw std::runtime_error("rvia_solve: span still " + std::to_string(span) + " after " +
                           std::to_string(max_iter) + " sweeps");
}

std::vector<int> extract_thresholds(const numvec& values, const EventModel& model) {
  check_values_size(values, model, "extract_thresholds");
  const int W = model.max_state();
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(model.num_classes()));
  for (int i : model.controlled_events()) {
    int u = W;
    for (int s = 0; s < W; ++s) {
      const double diff = values[static_cast<std::size_t>(s) + 1] - values[static_cast<std::size_t>(s)];
      if (diff <= -model.reward(i)) {
        u = s;
        break;
      }
    }
    out.push_back(u);
  }
  return out;
}

ConcavityReport check_concavity(const numvec& values, double tol) {
  ConcavityReport rep;
  if (values.size() < 3) return rep;
  for (std::size_t s = 0; s + 2 < values.size(); ++s) {
    const double d0 = values[s + 1] - values[s];
    const double d1 = values[s + 2] - values[s + 1];
    if (d1 > d0 + tol) {
      rep.ok = false;
      rep.first_violation = static_cast<int>(s);
      return rep;
    }
  }
  return rep;
}

MonotoneReport check_monotone_in_n(const EventModel& model, int sweeps, double tol) {
  if (sweeps < 2) throw std::invalid_argument("check_monotone_in_n: need at least 2 sweeps");
  MonotoneReport rep;
  const std::size_t n = static_cast<std::size_t>(model.num_states());
  numvec v(n, 0.0);
  numvec prev_diff(n - 1, 0.0);
  for (int sweep = 1; sweep <= sweeps; ++sweep) {
    v = via_sweep(model, v);
    for (std::size_t s = 0; s + 1 < n; ++s) {
      const double d = v[s + 1] - v[s];
      if (d > prev_diff[s] + tol) {
        rep.ok = false;
        rep.sweep = sweep;
        rep.state = static_cast<int>(s);
        return rep;
      }
      prev_diff[s] = d;
    }
  }
  return rep;
}

Eigen::MatrixXd hard_kernel(const EventModel& model, const numvec& tau) {
  Eigen::MatrixXd kernel;
  Eigen::VectorXd reward;
  hard_system(model, tau, kernel, reward);
  return kernel;
}

numvec hard_reward(const EventModel& model, const numvec& tau) {
  Eigen::MatrixXd kernel;
  Eigen::VectorXd reward;
  hard_system(model, tau, kernel, reward);
  return to_numvec(reward);
}

Eigen::MatrixXd smoothed_kernel(const EventModel& model, const ThresholdVector& tau) {
  if (static_cast<int>(tau.size()) != model.num_classes())
    throw std::invalid_argument("smoothed_kernel: one threshold per controlled class required");
  detail::DenseMatrix<double> kernel;
  detail::DenseVector<double> reward;
  detail::smoothed_system<double>(model, tau.entries(), kernel, reward);
  return kernel;
}

double smoothed_reward(const EventModel& model, const ThresholdVector& tau, int s) {
  if (static_cast<int>(tau.size()) != model.num_classes())
    throw std::invalid_argument("smoothed_reward: one threshold per controlled class required");
  if (s < 0 || s > model.max_state())
    throw std::invalid_argument("smoothed_reward: state out of range");
  const int W = model.max_state();
  double g = -model.cost(s);
  if (s == W) return g;
  const numvec& probs = model.event_probs(s);
  for (int i : model.controlled_events()) {
    const double f = smooth_prob(s, tau[static_cast<std::size_t>(model.controlled_index(i))]);
    g += probs[static_cast<std::size_t>(i)] * (1.0 - f) * model.reward(i);
  }
  return g;
}

numvec stationary_distribution(const Eigen::MatrixXd& kernel) {
  return to_numvec(detail::stationary<double>(kernel));
}

PolicyEvaluation average_reward_sigma(const EventModel& model, const numvec& tau, bool smoothed) {
  if (static_cast<int>(tau.size()) != model.num_classes())
    throw std::invalid_argument("average_reward_sigma: one threshold per controlled class required");
  Eigen::MatrixXd kernel;
  Eigen::VectorXd reward;
  if (smoothed) {
    detail::smoothed_system<double>(model, tau, kernel, reward);
  } else {
    hard_system(model, tau, kernel, reward);
  }
  return evaluate_system(kernel, reward, model.reference_state());
}

PolicyEvaluation average_reward_sigma(const EventModel& model, const ThresholdVector& tau,
                                      bool smoothed) {
  return average_reward_sigma(model, tau.entries(), smoothed);
}

numvec gradient_sigma(const EventModel& model, const ThresholdVector& tau, bool include_g_term) {
  const PolicyEvaluation eval = average_reward_sigma(model, tau, /*smoothed=*/true);
  const int W = model.max_state();
  numvec grad(tau.size(), 0.0);
  for (int i : model.controlled_events()) {
    const std::size_t k = static_cast<std::size_t>(model.controlled_index(i));
    double acc = 0.0;
    for (int s = 0; s < W; ++s) {
      const double p = model.event_probs(s)[static_cast<std::size_t>(i)];
      if (p == 0.0) continue;
      const double dfdt = smooth_prob_grad(s, tau[k]);
      const std::size_t t_block = static_cast<std::size_t>(model.apply_action(s, i, ActionKind::Block));
      const std::size_t t_admit = static_cast<std::size_t>(model.apply_action(s, i, ActionKind::Admit));
      // raising the threshold shifts admit mass to block mass at rate -dfdt;
      // the value part is always present, the direct reward part is optional
      double term = dfdt * (eval.values[t_block] - eval.values[t_admit]);
      if (include_g_term) term += -dfdt * model.reward(i);
      acc += eval.stationary[static_cast<std::size_t>(s)] * p * term;
    }
    grad[k] = acc;
  }
  return grad;
}

std::vector<std::vector<int>> enumerate_ordered_policies(int max_state, int num_classes) {
  if (max_state < 1 || num_classes < 1)
    throw std::invalid_argument("enumerate_ordered_policies: need a state range and a class");
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<std::size_t>(num_classes), 0);
  auto rec = [&](auto&& self, int k, int cap) -> void {
    if (k == num_classes) {
      out.push_back(cur);
      return;
    }
    for (int t = 0; t <= cap; ++t) {
      cur[static_cast<std::size_t>(k)] = t;
      self(self, k + 1, t);
    }
  };
  rec(rec, 0, max_state);
  return out;
}

BruteForceResult brute_force_optimal_tau(const EventModel& model) {
  BruteForceResult res;
  res.gain = -std::numeric_limits<double>::infinity();
  Eigen::MatrixXd kernel;
  Eigen::VectorXd reward;
  for (const std::vector<int>& tau : enumerate_ordered_policies(model.max_state(), model.num_classes())) {
    numvec real_tau(tau.begin(), tau.end());
    hard_system(model, real_tau, kernel, reward);
    const Eigen::VectorXd pi = detail::stationary<double>(kernel);
    const double sigma = pi.dot(reward);
    ++res.policies_evaluated;
    if (sigma > res.gain) {
      res.gain = sigma;
      res.thresholds = tau;
    }
  }
  return res;
}

UnimodalityReport unimodality_scan(const EventModel& model, double tol) {
  UnimodalityReport rep;
  const int W = model.max_state();
  const int N = model.num_classes();
  Eigen::MatrixXd kernel;
  Eigen::VectorXd reward;
  auto sigma_of = [&](const numvec& tau) {
    hard_system(model, tau, kernel, reward);
    return detail::stationary<double>(kernel).dot(reward);
  };

  // fixed settings of the other coordinates are themselves ordered vectors
  std::vector<std::vector<int>> others =
      N > 1 ? enumerate_ordered_policies(W, N - 1) : std::vector<std::vector<int>>{{}};
  for (int k = 0; k < N; ++k) {
    for (const std::vector<int>& fixed : others) {
      const int hi = k > 0 ? fixed[static_cast<std::size_t>(k) - 1] : W;
      const int lo = k < N - 1 ? fixed[static_cast<std::size_t>(k)] : 0;
      numvec tau(static_cast<std::size_t>(N), 0.0);
      for (int j = 0, f = 0; j < N; ++j) {
        if (j != k) tau[static_cast<std::size_t>(j)] = fixed[static_cast<std::size_t>(f++)];
      }
      numvec profile;
      for (int t = lo; t <= hi; ++t) {
        tau[static_cast<std::size_t>(k)] = t;
        profile.push_back(sigma_of(tau));
      }
      ++rep.slices_checked;
      const std::size_t peak = static_cast<std::size_t>(
          std::max_element(profile.begin(), profile.end()) - profile.begin());
      for (std::size_t j = 0; j + 1 < profile.size(); ++j) {
        const bool bad = j < peak ? profile[j + 1] < profile[j] - tol
                                  : profile[j + 1] > profile[j] + tol;
        if (bad) {
          SliceViolation v;
          v.coordinate = k;
          v.fixed = fixed;
          v.at_value = lo + static_cast<int>(j) + 1;
          rep.violations.push_back(v);
          break;
        }
      }
    }
  }
  return rep;
}

namespace {

// golden-section maximization of a unimodal profile on [lo, hi]
template <class F>
double golden_max(F&& f, double lo, double hi, double tol) {
  static const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

SmoothedMaximizer maximize_smoothed_sigma(const EventModel& model, double coord_tol,
                                          int max_cycles) {
  const int N = model.num_classes();
  const double W = model.max_state();
  // start from the best integer policy so the coordinate search begins in
  // the right basin
  const BruteForceResult bf = brute_force_optimal_tau(model);
  numvec tau(bf.thresholds.begin(), bf.thresholds.end());

  auto sigma_at = [&](const numvec& t) { return detail::smoothed_sigma<double>(model, t); };

  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    double moved = 0.0;
    for (int k = 0; k < N; ++k) {
      const double hi = k > 0 ? tau[static_cast<std::size_t>(k) - 1] : W;
      const double lo = k < N - 1 ? tau[static_cast<std::size_t>(k) + 1] : 0.0;
      numvec probe = tau;
      auto slice = [&](double t) {
        probe[static_cast<std::size_t>(k)] = t;
        return sigma_at(probe);
      };
      const double best = hi - lo > coord_tol ? golden_max(slice, lo, hi, coord_tol)
                                              : tau[static_cast<std::size_t>(k)];
      moved = std::max(moved, std::abs(best - tau[static_cast<std::size_t>(k)]));
      tau[static_cast<std::size_t>(k)] = best;
    }
    if (moved < 1e-10) break;
  }

  SmoothedMaximizer out;
  out.tau = tau;
  out.sigma = sigma_at(tau);
  out.gradient = gradient_sigma(model, ThresholdVector(tau, W), /*include_g_term=*/true);

  // first-order certificate over the chain constraints: every feasible
  // block move (raise a prefix of a tied block, lower a suffix) must be
  // non-improving
  const double tie_tol = 1e-9;
  double gap = 0.0;
  int a = 0;
  while (a < N) {
    int b = a;
    while (b + 1 < N &&
           std::abs(tau[static_cast<std::size_t>(b) + 1] - tau[static_cast<std::size_t>(b)]) <= tie_tol)
      ++b;
    const double v = tau[static_cast<std::size_t>(a)];
    const double upper = a > 0 ? tau[static_cast<std::size_t>(a) - 1] : W;
    double prefix = 0.0;
    for (int j = a; j <= b; ++j) {
      prefix += out.gradient[static_cast<std::size_t>(j)];
      if (v < upper - tie_tol) gap = std::max(gap, prefix);
    }
    double suffix = 0.0;
    for (int j = b; j >= a; --j) {
      suffix += out.gradient[static_cast<std::size_t>(j)];
      if (v > tie_tol) gap = std::max(gap, -suffix);
    }
    a = b + 1;
  }
  out.optimality_gap = gap;
  return out;
}

}  // namespace salmut
