#pragma once

#include <cstdint>
#include <vector>

#include "salmut/event_model.hpp"
#include "salmut/random.hpp"
#include "salmut/schedule.hpp"
#include "salmut/threshold.hpp"

namespace salmut {

struct SalmutConfig {
  StepSchedule schedule{};
  // running-mean coefficients for the average-reward estimate; {1, 0, 1}
  // weights every transition 1/n
  PowerSchedule rho_schedule{1.0, 0.0, 1.0};
  // true: the threshold update draws an independent reward-difference
  // sample (beta fork). false: the reward rides along with the virtual
  // transition draw instead; same expected drift, one fewer moving part.
  bool include_g_term = true;
  numvec initial_thresholds{};  // empty means all zeros
  int initial_state = 0;
};

struct VirtualSample {
  bool alpha = false;  // virtual transition: admit if set, stay otherwise
  bool beta = false;   // reward fork: bare cost if set, reward minus cost otherwise
  int s_hat = 0;
  double h_hat = 0.0;
};

struct StepOutcome {
  long long n = 0;
  int state = 0;
  int event = 0;
  ActionKind action = ActionKind::Continue;
  int next_state = 0;
  double reward = 0.0;
};

// Two-timescale online learner over an event-driven model. Values move on
// the faster per-state-visit schedule toward the relative fixed point of
// the current threshold policy; thresholds move on the slower 1/n schedule
// along a one-sample estimate of the smoothed average-reward gradient,
// projected back onto the ordered box after every touch. The threshold
// update reads the freshly updated value table, matching the sequential
// control loop.
class SalmutLearner {
 public:
  SalmutLearner(const EventModel& model, SalmutConfig cfg, std::uint64_t seed);

  // one environment transition plus both timescale updates
  StepOutcome salmut_step();

  // pieces of the step, exposed so tests can drive them directly
  void faster_value_update(int s, int event, ActionKind action, int next_state);
  VirtualSample virtual_sample(int s, int event);
  void slower_threshold_update(int s, int event, const VirtualSample& sample);

  // increment added to one threshold component before projection, as a pure
  // function of the drawn sample. v_hat is the value table read at s_hat.
  static double slower_increment(double b, double grad_f, const VirtualSample& sample,
                                 double v_hat, double event_reward, double state_cost,
                                 bool include_g_term);

  const numvec& values() const { return values_; }
  const ThresholdVector& thresholds() const { return tau_; }
  double rho_hat() const { return rho_; }
  long long iteration() const { return n_; }
  double cum_a() const { return static_cast<double>(cum_a_); }
  int state() const { return state_; }
  long long visit_count(int s) const;

  int last_value_writes() const { return last_value_writes_; }
  int last_threshold_writes() const { return last_threshold_writes_; }
  int max_value_writes() const { return max_value_writes_; }
  int max_threshold_writes() const { return max_threshold_writes_; }

  // stored reals: one value per state plus one threshold per class
  static long long storage_count(const EventModel& model) {
    return model.num_states() + model.num_classes();
  }

 private:
  const EventModel& model_;
  SalmutConfig cfg_;
  RandomStream env_;
  RandomStream virtual_;
  numvec values_;
  ThresholdVector tau_;
  std::vector<long long> visits_;
  long long n_ = 0;
  double rho_ = 0.0;
  long double cum_a_ = 0.0L;
  int state_ = 0;
  int last_value_writes_ = 0;
  int last_threshold_writes_ = 0;
  int max_value_writes_ = 0;
  int max_threshold_writes_ = 0;
};

}  // namespace salmut
