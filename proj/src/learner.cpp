#include "salmut/learner.hpp"

#include <algorithm>
#include <stdexcept>

namespace salmut {

SalmutLearner::SalmutLearner(const EventModel& model, SalmutConfig cfg, std::uint64_t seed)
    : model_(model),
      cfg_(std::move(cfg)),
      env_(mix_seed(seed, kEnvironmentStream)),
      virtual_(mix_seed(seed, kVirtualSampleStream)),
      values_(static_cast<std::size_t>(model.num_states()), 0.0),
      tau_(cfg_.initial_thresholds.empty()
               ? ThresholdVector::zeros(static_cast<std::size_t>(model.num_classes()),
                                        model.max_state())
               : ThresholdVector(cfg_.initial_thresholds, model.max_state())),
      visits_(static_cast<std::size_t>(model.num_states()), 0) {
  cfg_.schedule.validate();
  cfg_.rho_schedule.validate();
  if (static_cast<int>(tau_.size()) != model.num_classes())
    throw std::invalid_argument("SalmutLearner: one initial threshold per class required");
  if (cfg_.initial_state < 0 || cfg_.initial_state > model.max_state())
    throw std::invalid_argument("SalmutLearner: initial state out of range");
  state_ = cfg_.initial_state;
}

long long SalmutLearner::visit_count(int s) const {
  if (s < 0 || s > model_.max_state())
    throw std::invalid_argument("SalmutLearner: state out of range");
  return visits_[static_cast<std::size_t>(s)];
}

void SalmutLearner::faster_value_update(int s, int event, ActionKind action, int next_state) {
  auto& count = visits_[static_cast<std::size_t>(s)];
  ++count;
  const double a = cfg_.schedule.faster.at(count);
  const double target = model_.lump_reward(s, event, action) +
                        values_[static_cast<std::size_t>(next_state)] -
                        values_[static_cast<std::size_t>(model_.reference_state())];
  auto& v = values_[static_cast<std::size_t>(s)];
  v += a * (target - v);
  last_value_writes_ = 1;
  max_value_writes_ = std::max(max_value_writes_, last_value_writes_);
}

VirtualSample SalmutLearner::virtual_sample(int s, int event) {
  if (!model_.is_controlled(event))
    throw std::invalid_argument("virtual_sample: event is not controlled");
  VirtualSample vs;
  vs.alpha = virtual_.bit();
  vs.beta = virtual_.bit();
  vs.s_hat = vs.alpha ? std::min(s + 1, model_.max_state()) : s;
  vs.h_hat = vs.beta ? -model_.cost(s) : model_.reward(event) - model_.cost(s);
  return vs;
}

double SalmutLearner::slower_increment(double b, double grad_f, const VirtualSample& sample,
                                       double v_hat, double event_reward, double state_cost,
                                       bool include_g_term) {
  const double sign_a = sample.alpha ? -1.0 : 1.0;
  if (include_g_term) {
    // independent forks for the value part and the reward part; in
    // expectation the bracket is -(R + V(s+1) - V(s))/2, so the negative
    // slope of the blocking probability turns the drift into ascent on the
    // smoothed average reward
    const double sign_b = sample.beta ? -1.0 : 1.0;
    return b * grad_f * (sign_a * v_hat - sign_b * sample.h_hat);
  }
  // reward rides the virtual transition: admit collects the admission
  // reward, staying only pays the holding cost; same expected drift as the
  // split form
  const double ride = sample.alpha ? event_reward - state_cost : -state_cost;
  return b * grad_f * sign_a * (v_hat + ride);
}

void SalmutLearner::slower_threshold_update(int s, int event, const VirtualSample& sample) {
  const std::size_t k = static_cast<std::size_t>(model_.controlled_index(event));
  const double b = cfg_.schedule.slower.at(std::max<long long>(n_, 1));
  const double grad_f = smooth_prob_grad(s, tau_[k]);
  const double inc = slower_increment(b, grad_f, sample, values_[static_cast<std::size_t>(sample.s_hat)],
                                      model_.reward(event), model_.cost(s), cfg_.include_g_term);
  last_threshold_writes_ = tau_.update_component(k, tau_[k] + inc);
  max_threshold_writes_ = std::max(max_threshold_writes_, last_threshold_writes_);
}

StepOutcome SalmutLearner::salmut_step() {
  ++n_;
  cum_a_ += static_cast<long double>(cfg_.schedule.faster.at(n_));
  last_value_writes_ = 0;
  last_threshold_writes_ = 0;

  StepOutcome out;
  out.n = n_;
  out.state = state_;
  out.event = model_.sample_event(state_, env_.uniform());

  if (model_.is_controlled(out.event)) {
    const std::size_t k = static_cast<std::size_t>(model_.controlled_index(out.event));
    out.action = select_action(tau_, out.state, k, model_.max_state());
  } else {
    out.action = ActionKind::Continue;
  }
  out.next_state = model_.apply_action(out.state, out.event, out.action);
  out.reward = model_.lump_reward(out.state, out.event, out.action);

  faster_value_update(out.state, out.event, out.action, out.next_state);
  if (model_.is_controlled(out.event)) {
    const VirtualSample vs = virtual_sample(out.state, out.event);
    slower_threshold_update(out.state, out.event, vs);
  }

  rho_ += cfg_.rho_schedule.at(n_) * (out.reward - rho_);
  state_ = out.next_state;
  return out;
}

}  // namespace salmut
