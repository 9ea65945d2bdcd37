#include "salmut/baselines.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace salmut {

QLearner::QLearner(const EventModel& model, BaselineConfig cfg, std::uint64_t seed)
    : model_(model),
      cfg_(std::move(cfg)),
      env_(mix_seed(seed, kEnvironmentStream)),
      explore_(mix_seed(seed, kExplorationStream)),
      ref_state_(0),
      ref_action_(ActionKind::Block) {
  cfg_.schedule.validate();
  cfg_.rho_schedule.validate();
  if (cfg_.epsilon < 0.0 || cfg_.epsilon > 1.0)
    throw std::invalid_argument("QLearner: epsilon must lie in [0, 1]");
  if (cfg_.initial_state < 0 || cfg_.initial_state > model.max_state())
    throw std::invalid_argument("QLearner: initial state out of range");
  state_ = cfg_.initial_state;
  if (model_.controlled_events().empty())
    throw std::invalid_argument("QLearner: model has no controlled event");
  ref_event_ = model_.controlled_events().front();

  index_.assign(static_cast<std::size_t>(model.num_states()) *
                    static_cast<std::size_t>(model.num_events()) * 3,
                -1);
  int slots = 0;
  for (int s = 0; s < model.num_states(); ++s) {
    for (int i = 0; i < model.num_events(); ++i) {
      if (model.rate(s, i) <= 0.0) continue;  // can never fire here
      for (ActionKind a : model.feasible_actions(s, i)) {
        index_[(static_cast<std::size_t>(s) * model.num_events() + i) * 3 +
               static_cast<std::size_t>(a)] = slots++;
      }
    }
  }
  q_.assign(static_cast<std::size_t>(slots), 0.0);
  visits_.assign(static_cast<std::size_t>(slots), 0);
}

int QLearner::index(int s, int event, ActionKind a) const {
  return index_[(static_cast<std::size_t>(s) * model_.num_events() + event) * 3 +
                static_cast<std::size_t>(a)];
}

double QLearner::q_value(int s, int event, ActionKind a) const {
  const int slot = index(s, event, a);
  if (slot < 0) throw std::invalid_argument("QLearner: triple is not stored");
  return q_[static_cast<std::size_t>(slot)];
}

ActionKind QLearner::greedy_action(int s, int event) const {
  // first maximizer in action order, so ties break toward the lowest index
  ActionKind best = ActionKind::Continue;
  double best_q = -std::numeric_limits<double>::infinity();
  for (ActionKind a : model_.feasible_actions(s, event)) {
    const int slot = index(s, event, a);
    const double q = slot < 0 ? 0.0 : q_[static_cast<std::size_t>(slot)];
    if (q > best_q) {
      best_q = q;
      best = a;
    }
  }
  return best;
}

double QLearner::best_value(int s, int event) const {
  double best = -std::numeric_limits<double>::infinity();
  for (ActionKind a : model_.feasible_actions(s, event)) {
    const int slot = index(s, event, a);
    best = std::max(best, slot < 0 ? 0.0 : q_[static_cast<std::size_t>(slot)]);
  }
  return best;
}

StepOutcome QLearner::q_step() {
  ++n_;
  cum_a_ += static_cast<long double>(cfg_.schedule.faster.at(n_));
  last_writes_ = 0;

  if (pending_event_ < 0) pending_event_ = model_.sample_event(state_, env_.uniform());

  StepOutcome out;
  out.n = n_;
  out.state = state_;
  out.event = pending_event_;

  const std::vector<ActionKind> feasible = model_.feasible_actions(out.state, out.event);
  if (feasible.size() > 1 && explore_.uniform() < cfg_.epsilon) {
    out.action = feasible[static_cast<std::size_t>(explore_.uniform_int(static_cast<int>(feasible.size())))];
  } else {
    out.action = greedy_action(out.state, out.event);
  }
  out.next_state = model_.apply_action(out.state, out.event, out.action);
  out.reward = model_.lump_reward(out.state, out.event, out.action);
  const int next_event = model_.sample_event(out.next_state, env_.uniform());

  const int slot = index(out.state, out.event, out.action);
  auto& count = visits_[static_cast<std::size_t>(slot)];
  ++count;
  const double a = cfg_.schedule.faster.at(count);
  const double target = out.reward - best_value(ref_state_, ref_event_) +
                        best_value(out.next_state, next_event);
  auto& q = q_[static_cast<std::size_t>(slot)];
  q += a * (target - q);
  last_writes_ = 1;
  max_writes_ = std::max(max_writes_, last_writes_);

  rho_ += cfg_.rho_schedule.at(n_) * (out.reward - rho_);
  state_ = out.next_state;
  pending_event_ = next_event;
  return out;
}

std::vector<int> QLearner::greedy_thresholds() const {
  std::vector<int> out;
  for (int i : model_.controlled_events()) {
    int tau = model_.max_state();
    for (int s = 0; s < model_.max_state(); ++s) {
      if (greedy_action(s, i) == ActionKind::Block) {
        tau = s;
        break;
      }
    }
    out.push_back(tau);
  }
  return out;
}

PdsLearner::PdsLearner(const EventModel& model, BaselineConfig cfg, std::uint64_t seed)
    : model_(model),
      cfg_(std::move(cfg)),
      env_(mix_seed(seed, kEnvironmentStream)),
      values_(static_cast<std::size_t>(model.num_states()), 0.0),
      visits_(static_cast<std::size_t>(model.num_states()), 0) {
  cfg_.schedule.validate();
  cfg_.rho_schedule.validate();
  if (cfg_.initial_state < 0 || cfg_.initial_state > model.max_state())
    throw std::invalid_argument("PdsLearner: initial state out of range");
  state_ = cfg_.initial_state;
}

ActionKind PdsLearner::greedy_action(int s, int event) const {
  if (!model_.is_controlled(event)) return ActionKind::Continue;
  if (s == model_.max_state()) return ActionKind::Block;
  const double admit = model_.reward(event) +
                       values_[static_cast<std::size_t>(model_.apply_action(s, event, ActionKind::Admit))];
  const double block = values_[static_cast<std::size_t>(model_.apply_action(s, event, ActionKind::Block))];
  return admit > block ? ActionKind::Admit : ActionKind::Block;
}

StepOutcome PdsLearner::pds_step() {
  ++n_;
  cum_a_ += static_cast<long double>(cfg_.schedule.faster.at(n_));

  StepOutcome out;
  out.n = n_;
  out.state = state_;  // post-decision state of the previous step
  out.event = model_.sample_event(state_, env_.uniform());
  out.action = greedy_action(out.state, out.event);
  out.next_state = model_.apply_action(out.state, out.event, out.action);
  out.reward = model_.lump_reward(out.state, out.event, out.action);

  auto& count = visits_[static_cast<std::size_t>(out.state)];
  ++count;
  const double a = cfg_.schedule.faster.at(count);
  const double target = out.reward +
                        values_[static_cast<std::size_t>(out.next_state)] -
                        values_[static_cast<std::size_t>(model_.reference_state())];
  auto& v = values_[static_cast<std::size_t>(out.state)];
  v += a * (target - v);
  last_writes_ = 1;
  max_writes_ = std::max(max_writes_, last_writes_);

  rho_ += cfg_.rho_schedule.at(n_) * (out.reward - rho_);
  state_ = out.next_state;
  return out;
}

std::vector<int> PdsLearner::greedy_thresholds() const {
  std::vector<int> out;
  for (int i : model_.controlled_events()) {
    int tau = model_.max_state();
    for (int s = 0; s < model_.max_state(); ++s) {
      if (greedy_action(s, i) == ActionKind::Block) {
        tau = s;
        break;
      }
    }
    out.push_back(tau);
  }
  return out;
}

}  // namespace salmut
