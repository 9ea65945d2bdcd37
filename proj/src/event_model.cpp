#include "salmut/event_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace salmut {

const char* action_name(ActionKind a) {
  switch (a) {
    case ActionKind::Continue: return "continue";
    case ActionKind::Block: return "block";
    case ActionKind::Admit: return "admit";
  }
  return "?";
}

EventModel::EventModel(int max_state, int num_events,
                       const std::function<double(int, int)>& rate,
                       const std::function<int(int, int, ActionKind)>& transition,
                       numvec rewards, const std::function<double(int)>& cost,
                       std::vector<int> controlled_events, int reference_state)
    : max_state_(max_state),
      num_events_(num_events),
      reference_state_(reference_state),
      rewards_(std::move(rewards)),
      controlled_(std::move(controlled_events)) {
  if (max_state_ < 1) throw std::invalid_argument("EventModel: max_state must be >= 1");
  if (num_events_ < 1) throw std::invalid_argument("EventModel: need at least one event");
  if (reference_state_ < 0 || reference_state_ > max_state_)
    throw std::invalid_argument("EventModel: reference state out of range");
  if (static_cast<int>(rewards_.size()) != num_events_)
    throw std::invalid_argument("EventModel: one reward per event required");

  controlled_mask_.assign(num_events_, 0);
  controlled_index_.assign(num_events_, -1);
  std::vector<int> sorted = controlled_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("EventModel: duplicate controlled event");
  for (std::size_t k = 0; k < controlled_.size(); ++k) {
    int i = controlled_[k];
    if (i < 0 || i >= num_events_)
      throw std::invalid_argument("EventModel: controlled event out of range");
    if (k > 0 && controlled_[k] <= controlled_[k - 1])
      throw std::invalid_argument("EventModel: controlled events must be ascending");
    controlled_mask_[i] = 1;
    controlled_index_[i] = static_cast<int>(k);
  }
  // weakly decreasing rewards across controlled events: ties are allowed so
  // degenerate instances (all rewards zero) stay constructible
  for (std::size_t k = 1; k < controlled_.size(); ++k) {
    if (rewards_[controlled_[k]] > rewards_[controlled_[k - 1]])
      throw std::invalid_argument("EventModel: controlled rewards must not increase with event index");
  }
  for (int i = 0; i < num_events_; ++i) {
    if (rewards_[i] < 0.0) throw std::invalid_argument("EventModel: negative reward");
  }

  const int n = num_states();
  rates_.assign(n, numvec(num_events_, 0.0));
  probs_.assign(n, numvec(num_events_, 0.0));
  total_rates_.assign(n, 0.0);
  costs_.assign(n, 0.0);
  targets_.assign(n, std::vector<int>(num_events_ * 3, -1));

  for (int s = 0; s < n; ++s) {
    double total = 0.0;
    for (int i = 0; i < num_events_; ++i) {
      const double r = rate(s, i);
      if (!(r >= 0.0)) throw std::invalid_argument("EventModel: negative or NaN rate");
      rates_[s][i] = r;
      total += r;
    }
    if (!(total > 0.0)) throw std::invalid_argument("EventModel: total rate must be positive in every state");
    total_rates_[s] = total;
    for (int i = 0; i < num_events_; ++i) probs_[s][i] = rates_[s][i] / total;

    const double h = cost(s);
    if (!(h >= 0.0)) throw std::invalid_argument("EventModel: negative or NaN cost");
    costs_[s] = h;

    for (int i = 0; i < num_events_; ++i) {
      for (ActionKind a : feasible_actions(s, i)) {
        const int t = transition(s, i, a);
        if (t < 0 || t > max_state_)
          throw std::invalid_argument("EventModel: transition target out of range");
        targets_[s][i * 3 + static_cast<int>(a)] = t;
      }
    }
  }
}

void EventModel::check_state(int s) const {
  if (s < 0 || s > max_state_) throw std::invalid_argument("EventModel: state out of range");
}

void EventModel::check_event(int i) const {
  if (i < 0 || i >= num_events_) throw std::invalid_argument("EventModel: event out of range");
}

double EventModel::rate(int s, int i) const {
  check_state(s);
  check_event(i);
  return rates_[s][i];
}

double EventModel::total_rate(int s) const {
  check_state(s);
  return total_rates_[s];
}

const numvec& EventModel::event_probs(int s) const {
  check_state(s);
  return probs_[s];
}

double EventModel::reward(int event) const {
  check_event(event);
  return rewards_[event];
}

double EventModel::cost(int s) const {
  check_state(s);
  return costs_[s];
}

bool EventModel::is_controlled(int event) const {
  check_event(event);
  return controlled_mask_[event] != 0;
}

int EventModel::controlled_index(int event) const {
  check_event(event);
  if (controlled_index_[event] < 0)
    throw std::invalid_argument("EventModel: event is not controlled");
  return controlled_index_[event];
}

std::vector<ActionKind> EventModel::feasible_actions(int s, int event) const {
  check_state(s);
  check_event(event);
  if (!controlled_mask_[event]) return {ActionKind::Continue};
  if (s == max_state_) return {ActionKind::Block};
  return {ActionKind::Block, ActionKind::Admit};
}

int EventModel::apply_action(int s, int event, ActionKind a) const {
  check_state(s);
  check_event(event);
  if (controlled_mask_[event]) {
    if (a == ActionKind::Continue)
      throw std::invalid_argument("apply_action: controlled event needs Block or Admit");
    if (a == ActionKind::Admit && s == max_state_)
      throw std::invalid_argument("apply_action: cannot admit at the state ceiling");
  } else if (a != ActionKind::Continue) {
    throw std::invalid_argument("apply_action: uncontrolled event only continues");
  }
  return targets_[s][event * 3 + static_cast<int>(a)];
}

double EventModel::lump_reward(int s, int event, ActionKind a) const {
  check_state(s);
  check_event(event);
  return (a == ActionKind::Admit ? rewards_[event] : 0.0) - costs_[s];
}

int EventModel::sample_event(int s, double u) const {
  check_state(s);
  // single uniform, cumulative walk; the last positive-probability event
  // absorbs any rounding slack at u ~ 1
  double acc = 0.0;
  int last = -1;
  for (int i = 0; i < num_events_; ++i) {
    if (probs_[s][i] <= 0.0) continue;
    acc += probs_[s][i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

double PolynomialCost::operator()(int s) const {
  return c * std::pow(static_cast<double>(s), p);
}

EventModel make_queue_model(const QueueConfig& cfg) {
  const QueueParams& q = cfg.params;
  if (q.servers < 1) throw std::invalid_argument("queue: servers must be >= 1");
  if (q.buffer < 0) throw std::invalid_argument("queue: buffer must be >= 0");
  if (!(q.service_rate > 0.0)) throw std::invalid_argument("queue: service rate must be positive");
  if (q.arrival_rates.empty()) throw std::invalid_argument("queue: need at least one arrival class");
  for (double lam : q.arrival_rates) {
    if (!(lam > 0.0)) throw std::invalid_argument("queue: arrival rates must be positive");
  }
  if (cfg.rewards.size() != q.arrival_rates.size())
    throw std::invalid_argument("queue: one reward per arrival class required");
  if (cfg.cost.c < 0.0 || cfg.cost.p < 0.0)
    throw std::invalid_argument("queue: cost coefficients must be nonnegative");

  const int max_state = q.servers + q.buffer;
  const int num_events = static_cast<int>(q.arrival_rates.size()) + 1;

  auto rate = [&q](int s, int i) {
    if (i == 0) return static_cast<double>(std::min(s, q.servers)) * q.service_rate;
    return q.arrival_rates[static_cast<std::size_t>(i) - 1];
  };
  auto transition = [max_state](int s, int i, ActionKind a) {
    if (i == 0) return std::max(s - 1, 0);
    return a == ActionKind::Admit ? std::min(s + 1, max_state) : s;
  };
  numvec rewards(static_cast<std::size_t>(num_events), 0.0);
  for (std::size_t k = 0; k < cfg.rewards.size(); ++k) rewards[k + 1] = cfg.rewards[k];

  std::vector<int> controlled;
  for (int i = 1; i < num_events; ++i) controlled.push_back(i);

  return EventModel(max_state, num_events, rate, transition, std::move(rewards),
                    cfg.cost, std::move(controlled), /*reference_state=*/0);
}

namespace {

QueueConfig queue_config_from_json(const nlohmann::json& j) {
  QueueConfig cfg;
  cfg.params.servers = j.at("m").get<int>();
  cfg.params.buffer = j.at("B").get<int>();
  cfg.params.service_rate = j.at("mu").get<double>();
  cfg.params.arrival_rates = j.at("lambda").get<numvec>();
  cfg.rewards = j.at("R").get<numvec>();
  if (j.contains("cost")) {
    cfg.cost.c = j.at("cost").at("c").get<double>();
    cfg.cost.p = j.at("cost").at("p").get<double>();
  }
  return cfg;
}

}  // namespace

QueueConfig parse_queue_config(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  return queue_config_from_json(j);
}

QueueConfig load_queue_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_queue_config(ss.str());
}

std::string queue_config_to_json(const QueueConfig& cfg) {
  nlohmann::json j;
  j["m"] = cfg.params.servers;
  j["B"] = cfg.params.buffer;
  j["mu"] = cfg.params.service_rate;
  j["lambda"] = cfg.params.arrival_rates;
  j["R"] = cfg.rewards;
  j["cost"] = {{"c", cfg.cost.c}, {"p", cfg.cost.p}};
  return j.dump(2);
}

}  // namespace salmut
