#pragma once

#include <functional>
#include <string>
#include <vector>

namespace salmut {

using numvec = std::vector<double>;

// Action applied when an event fires. Uncontrolled events always Continue;
// controlled events pick Block or Admit, with Admit infeasible at the state
// ceiling.
enum class ActionKind { Continue = 0, Block = 1, Admit = 2 };

const char* action_name(ActionKind a);

// Finite-state event-driven MDP on {0, ..., W}. The chain is observed at
// event epochs: in state s event i fires with probability
// rate(s,i)/total_rate(s), the chosen action moves the state
// deterministically, and the transition earns a lump reward
// reward(i)*[admitted] - cost(s). These probabilities sum to one, so there
// is no residual self-loop term anywhere downstream.
class EventModel {
 public:
  // rate(s,i) >= 0 with a positive total in every state; transition(s,i,a)
  // maps into {0..W} for every feasible action; rewards are per-event lump
  // amounts (weakly decreasing across controlled events, so lower event
  // index means more valuable); cost(s) >= 0 is charged on every
  // transition out of s.
  EventModel(int max_state, int num_events,
             const std::function<double(int, int)>& rate,
             const std::function<int(int, int, ActionKind)>& transition,
             numvec rewards, const std::function<double(int)>& cost,
             std::vector<int> controlled_events, int reference_state);

  int max_state() const { return max_state_; }
  int num_states() const { return max_state_ + 1; }
  int num_events() const { return num_events_; }
  int reference_state() const { return reference_state_; }

  double rate(int s, int i) const;
  double total_rate(int s) const;
  // p_i(s) for all i, indexed by event
  const numvec& event_probs(int s) const;
  numvec event_distribution(int s) const { return event_probs(s); }

  double reward(int event) const;
  double cost(int s) const;

  bool is_controlled(int event) const;
  // events with a Block/Admit choice, in ascending event order
  const std::vector<int>& controlled_events() const { return controlled_; }
  int num_classes() const { return static_cast<int>(controlled_.size()); }
  // position of `event` within controlled_events(); throws if uncontrolled
  int controlled_index(int event) const;

  std::vector<ActionKind> feasible_actions(int s, int event) const;
  // next state; throws on an infeasible action (Admit at the ceiling,
  // Continue for a controlled event, anything but Continue otherwise)
  int apply_action(int s, int event, ActionKind a) const;
  double lump_reward(int s, int event, ActionKind a) const;

  // walk the event distribution of s with a single uniform draw
  int sample_event(int s, double u) const;

 private:
  void check_state(int s) const;
  void check_event(int i) const;

  int max_state_;
  int num_events_;
  int reference_state_;
  std::vector<numvec> rates_;        // [state][event]
  numvec total_rates_;               // [state]
  std::vector<numvec> probs_;        // [state][event]
  std::vector<std::vector<int>> targets_;  // [state][event*3 + action]
  numvec rewards_;                   // [event]
  numvec costs_;                     // [state]
  std::vector<char> controlled_mask_;
  std::vector<int> controlled_;
  std::vector<int> controlled_index_;  // event -> class position, -1 if none
};

// Admission-control queue with identical exponential servers and a shared
// finite buffer. State is the number in system, capped at
// W = servers + buffer. Event 0 is a service completion; events 1..N are
// the arrival classes, all controlled.
struct QueueParams {
  int servers = 5;
  int buffer = 5;
  double service_rate = 4.0;
  numvec arrival_rates = {1.0, 1.0};
};

// holding cost c * s^p
struct PolynomialCost {
  double c = 0.1;
  double p = 2.0;
  double operator()(int s) const;
};

struct QueueConfig {
  QueueParams params;
  numvec rewards = {20.0, 10.0};
  PolynomialCost cost;
};

EventModel make_queue_model(const QueueConfig& cfg);

QueueConfig parse_queue_config(const std::string& json_text);
QueueConfig load_queue_config(const std::string& path);
std::string queue_config_to_json(const QueueConfig& cfg);

}  // namespace salmut
