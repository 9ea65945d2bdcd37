#pragma once

#include <cstdint>
#include <vector>

#include "salmut/event_model.hpp"
#include "salmut/learner.hpp"
#include "salmut/random.hpp"
#include "salmut/schedule.hpp"

namespace salmut {

struct BaselineConfig {
  StepSchedule schedule{};  // faster family drives the table updates
  PowerSchedule rho_schedule{1.0, 0.0, 1.0};
  double epsilon = 0.1;  // exploration rate; ignored by the PDS learner
  int initial_state = 0;
};

// Relative Q-learning on (state, event, action) triples. Only triples that
// can actually occur are stored: the event must have positive rate in the
// state and the action must be feasible there. The update subtracts the
// best value at a fixed reference pair, keeping the table bounded under
// the average-reward criterion.
class QLearner {
 public:
  QLearner(const EventModel& model, BaselineConfig cfg, std::uint64_t seed);

  StepOutcome q_step();

  double q_value(int s, int event, ActionKind a) const;
  long long storage_count() const { return static_cast<long long>(q_.size()); }
  // per class, the first state where the greedy action blocks; the ceiling
  // if the class is always admitted
  std::vector<int> greedy_thresholds() const;

  double rho_hat() const { return rho_; }
  long long iteration() const { return n_; }
  double cum_a() const { return static_cast<double>(cum_a_); }
  int last_table_writes() const { return last_writes_; }
  int max_table_writes() const { return max_writes_; }

 private:
  int index(int s, int event, ActionKind a) const;  // -1 if not stored
  ActionKind greedy_action(int s, int event) const;
  double best_value(int s, int event) const;

  const EventModel& model_;
  BaselineConfig cfg_;
  RandomStream env_;
  RandomStream explore_;
  std::vector<int> index_;   // dense (s, event, action) -> compact slot
  numvec q_;
  std::vector<long long> visits_;
  int ref_state_;
  int ref_event_;
  ActionKind ref_action_;  // stored by convention; the update maxes over actions
  long long n_ = 0;
  double rho_ = 0.0;
  long double cum_a_ = 0.0L;
  int state_ = 0;
  int pending_event_ = -1;
  int last_writes_ = 0;
  int max_writes_ = 0;
};

// Post-decision-state learning: the stored value is indexed by the state
// right after the action, so the greedy action comes from a one-step
// lookahead and no exploration is needed.
class PdsLearner {
 public:
  PdsLearner(const EventModel& model, BaselineConfig cfg, std::uint64_t seed);

  StepOutcome pds_step();

  const numvec& values() const { return values_; }
  long long storage_count() const { return static_cast<long long>(values_.size()); }
  std::vector<int> greedy_thresholds() const;

  double rho_hat() const { return rho_; }
  long long iteration() const { return n_; }
  double cum_a() const { return static_cast<double>(cum_a_); }
  int last_table_writes() const { return last_writes_; }
  int max_table_writes() const { return max_writes_; }

 private:
  ActionKind greedy_action(int s, int event) const;

  const EventModel& model_;
  BaselineConfig cfg_;
  RandomStream env_;
  numvec values_;
  std::vector<long long> visits_;
  long long n_ = 0;
  double rho_ = 0.0;
  long double cum_a_ = 0.0L;
  int state_ = 0;
  int last_writes_ = 0;
  int max_writes_ = 0;
};

}  // namespace salmut
