#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "salmut/event_model.hpp"
#include "salmut/random.hpp"
#include "salmut/schedule.hpp"
#include "salmut/threshold.hpp"

using namespace salmut;

namespace {

QueueConfig reference_queue(double mu = 4.0) {
  QueueConfig cfg;
  cfg.params = {5, 5, mu, {1.0, 1.0}};
  cfg.rewards = {20.0, 10.0};
  cfg.cost = {0.1, 2.0};
  return cfg;
}

}  // namespace

TEST_CASE("queue model shape") {
  const EventModel m = make_queue_model(reference_queue());
  CHECK(m.max_state() == 10);
  CHECK(m.num_states() == 11);
  CHECK(m.num_events() == 3);
  CHECK(m.num_classes() == 2);
  CHECK(m.reference_state() == 0);
  CHECK(m.controlled_events() == std::vector<int>{1, 2});
  CHECK(!m.is_controlled(0));
  CHECK(m.is_controlled(1));
  CHECK(m.controlled_index(2) == 1);
  CHECK_THROWS_AS(m.controlled_index(0), std::invalid_argument);
}

TEST_CASE("total rates") {
  const EventModel m = make_queue_model(reference_queue());
  CHECK(m.total_rate(3) == doctest::Approx(14.0));   // 3 busy servers * 4 + 1 + 1
  CHECK(m.total_rate(0) == doctest::Approx(2.0));    // arrivals only
  CHECK(m.total_rate(7) == doctest::Approx(22.0));   // service capped at 5 servers
  CHECK_THROWS_AS(m.total_rate(-1), std::invalid_argument);
  CHECK_THROWS_AS(m.total_rate(11), std::invalid_argument);
}

TEST_CASE("event distributions") {
  const EventModel m = make_queue_model(reference_queue());
  const numvec p3 = m.event_distribution(3);
  CHECK(p3[0] == doctest::Approx(12.0 / 14.0));
  CHECK(p3[1] == doctest::Approx(1.0 / 14.0));
  CHECK(p3[2] == doctest::Approx(1.0 / 14.0));
  const numvec p0 = m.event_distribution(0);
  CHECK(p0[0] == doctest::Approx(0.0));  // no departures from an empty system
  CHECK(p0[1] == doctest::Approx(0.5));
  CHECK(p0[2] == doctest::Approx(0.5));
  for (int s = 0; s <= 10; ++s) {
    double total = 0.0;
    for (double p : m.event_distribution(s)) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("transitions and feasibility") {
  const EventModel m = make_queue_model(reference_queue());
  CHECK(m.apply_action(3, 0, ActionKind::Continue) == 2);
  CHECK(m.apply_action(0, 0, ActionKind::Continue) == 0);  // empty system stays empty
  CHECK(m.apply_action(3, 1, ActionKind::Admit) == 4);
  CHECK(m.apply_action(3, 2, ActionKind::Block) == 3);
  CHECK_THROWS_AS(m.apply_action(10, 1, ActionKind::Admit), std::invalid_argument);
  CHECK_THROWS_AS(m.apply_action(3, 1, ActionKind::Continue), std::invalid_argument);
  CHECK_THROWS_AS(m.apply_action(3, 0, ActionKind::Block), std::invalid_argument);

  CHECK(m.feasible_actions(3, 0) == std::vector<ActionKind>{ActionKind::Continue});
  CHECK(m.feasible_actions(3, 1) ==
        std::vector<ActionKind>{ActionKind::Block, ActionKind::Admit});
  CHECK(m.feasible_actions(10, 1) == std::vector<ActionKind>{ActionKind::Block});
}

TEST_CASE("lump rewards") {
  const EventModel m = make_queue_model(reference_queue());
  CHECK(m.lump_reward(3, 1, ActionKind::Admit) == doctest::Approx(19.1));
  CHECK(m.lump_reward(0, 1, ActionKind::Block) == doctest::Approx(0.0));
  CHECK(m.lump_reward(5, 2, ActionKind::Block) == doctest::Approx(-2.5));
  CHECK(m.lump_reward(5, 2, ActionKind::Admit) == doctest::Approx(7.5));
  CHECK(m.cost(3) == doctest::Approx(0.9));
  CHECK(m.cost(0) == doctest::Approx(0.0));
  CHECK(m.reward(1) == doctest::Approx(20.0));
  CHECK(m.reward(0) == doctest::Approx(0.0));
}

TEST_CASE("event sampling walks the distribution with one uniform") {
  const EventModel m = make_queue_model(reference_queue());
  CHECK(m.sample_event(3, 0.0) == 0);
  CHECK(m.sample_event(3, 0.5) == 0);
  CHECK(m.sample_event(3, 0.86) == 1);   // just past 12/14
  CHECK(m.sample_event(3, 0.93) == 2);   // past 13/14
  CHECK(m.sample_event(3, 0.999999) == 2);
  // the zero-rate departure at s=0 is skipped entirely
  CHECK(m.sample_event(0, 0.25) == 1);
  CHECK(m.sample_event(0, 0.75) == 2);
  CHECK(m.sample_event(0, 1.0 - 1e-16) == 2);
}

TEST_CASE("model validation") {
  QueueConfig bad = reference_queue();
  bad.rewards = {10.0, 20.0};  // class rewards must not increase with the index
  CHECK_THROWS_AS(make_queue_model(bad), std::invalid_argument);

  QueueConfig ties = reference_queue();
  ties.rewards = {0.0, 0.0};  // ties are fine; degenerate but constructible
  CHECK_NOTHROW(make_queue_model(ties));

  QueueConfig neg_cost = reference_queue();
  neg_cost.cost.c = -0.1;
  CHECK_THROWS_AS(make_queue_model(neg_cost), std::invalid_argument);

  QueueConfig no_rate = reference_queue();
  no_rate.params.arrival_rates = {1.0, 0.0};
  CHECK_THROWS_AS(make_queue_model(no_rate), std::invalid_argument);

  QueueConfig size_mismatch = reference_queue();
  size_mismatch.rewards = {20.0};
  CHECK_THROWS_AS(make_queue_model(size_mismatch), std::invalid_argument);
}

TEST_CASE("config json round trip") {
  const QueueConfig cfg = parse_queue_config(
      R"({"m":5,"B":5,"mu":4.0,"lambda":[1.0,1.0],"R":[20.0,10.0],"cost":{"c":0.1,"p":2}})");
  CHECK(cfg.params.servers == 5);
  CHECK(cfg.params.buffer == 5);
  CHECK(cfg.params.service_rate == doctest::Approx(4.0));
  CHECK(cfg.params.arrival_rates == numvec{1.0, 1.0});
  CHECK(cfg.rewards == numvec{20.0, 10.0});
  CHECK(cfg.cost.c == doctest::Approx(0.1));
  CHECK(cfg.cost.p == doctest::Approx(2.0));

  const QueueConfig again = parse_queue_config(queue_config_to_json(cfg));
  CHECK(again.params.service_rate == cfg.params.service_rate);
  CHECK(again.rewards == cfg.rewards);
  CHECK(again.cost.p == cfg.cost.p);
  CHECK_THROWS(parse_queue_config(R"({"m":5})"));
}

TEST_CASE("smooth blocking probability") {
  CHECK(smooth_prob(5, 4.5) == doctest::Approx(0.5));
  CHECK(smooth_prob(5, 5.0) == doctest::Approx(0.3775406688).epsilon(1e-9));
  CHECK(smooth_prob(10, 0.0) == doctest::Approx(0.9999251538).epsilon(1e-9));
  CHECK(smooth_prob_grad(5, 4.5) == doctest::Approx(-0.25));
  CHECK(smooth_prob_grad(5, 5.0) == doctest::Approx(-0.235004).epsilon(1e-5));
  // deep saturation stays finite and flat
  CHECK(smooth_prob(0, 1000.0) == doctest::Approx(0.0));
  CHECK(smooth_prob(1000, 0.0) == doctest::Approx(1.0));
  CHECK(smooth_prob_grad(0, 1000.0) == doctest::Approx(0.0));
  CHECK(std::isfinite(smooth_prob_grad(1000, 0.0)));
  // the slope is the derivative of the probability in the threshold
  const double t = 3.3, h = 1e-6;
  const double fd = (smooth_prob(5, t + h) - smooth_prob(5, t - h)) / (2 * h);
  CHECK(smooth_prob_grad(5, t) == doctest::Approx(fd).epsilon(1e-8));
}

TEST_CASE("threshold vector invariants") {
  CHECK_THROWS_AS(ThresholdVector({3.0, 5.0}, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(ThresholdVector({11.0, 2.0}, 10.0), std::invalid_argument);
  CHECK_THROWS_AS(ThresholdVector({5.0, -1.0}, 10.0), std::invalid_argument);

  ThresholdVector tau({4.2, 3.0}, 10.0);
  CHECK(tau.project(1, 5.0) == doctest::Approx(4.2));
  CHECK(tau.project(1, -1.0) == doctest::Approx(0.0));
  CHECK(tau.project(0, 99.0) == doctest::Approx(10.0));

  // clamped against the just-updated predecessor
  CHECK(tau.update_component(1, 9.0) == 1);
  CHECK(tau[1] == doctest::Approx(4.2));

  ThresholdVector pair({5.0, 5.0}, 10.0);
  CHECK(pair.update_component(0, 3.0) == 2);  // drags the second entry down
  CHECK(pair[0] == doctest::Approx(3.0));
  CHECK(pair[1] == doctest::Approx(3.0));

  ThresholdVector still({5.0, 2.0}, 10.0);
  CHECK(still.update_component(0, 5.0) == 0);  // zero-increment update writes nothing
}

TEST_CASE("hard action rule") {
  const ThresholdVector tau({4.2, 3.0}, 10.0);
  CHECK(select_action(tau, 4, 0, 10) == ActionKind::Admit);
  CHECK(select_action(tau, 4, 1, 10) == ActionKind::Block);
  CHECK(select_action(tau, 3, 1, 10) == ActionKind::Block);  // admit only strictly below
  CHECK(select_action(tau, 2, 1, 10) == ActionKind::Admit);
  CHECK_THROWS_AS(select_action(tau, 11, 0, 10), std::invalid_argument);
  CHECK_THROWS_AS(select_action(tau, 4, 2, 10), std::invalid_argument);

  const ThresholdVector open({10.0, 10.0}, 10.0);
  CHECK(select_action(open, 10, 0, 10) == ActionKind::Block);  // never admit at the ceiling

  // the decision depends only on the sign of tau - s
  for (double t : {0.0, 0.5, 3.0, 9.7, 10.0}) {
    const ThresholdVector one({t}, 10.0);
    for (int s = 0; s < 10; ++s) {
      const bool admit = select_action(one, s, 0, 10) == ActionKind::Admit;
      CHECK(admit == (t - s > 0));
    }
  }
}

TEST_CASE("step size schedules") {
  const StepSchedule sched{};
  CHECK(step_size_a(sched, 1) == doctest::Approx(0.659754).epsilon(1e-6));
  CHECK(step_size_a(sched, 100) == doctest::Approx(0.517282).epsilon(1e-6));
  CHECK(step_size_a(sched, 250) == doctest::Approx(0.435275).epsilon(1e-6));
  CHECK(step_size_b(sched, 10) == doctest::Approx(1.0));
  CHECK(step_size_b(sched, 10000) == doctest::Approx(0.001));

  // the slower scale dies relative to the faster one (ratio ~ n^-0.4)
  double prev = std::numeric_limits<double>::infinity();
  for (long long n = 10; n <= 10'000'000'000LL; n *= 10) {
    const double ratio = step_size_b(sched, n) / step_size_a(sched, n);
    CHECK(ratio < prev);
    prev = ratio;
  }
  CHECK(prev < 1e-4);

  const PowerSchedule running_mean{1.0, 0.0, 1.0};
  CHECK(running_mean.at(1) == doctest::Approx(1.0));
  CHECK(running_mean.at(2) == doctest::Approx(0.5));
  CHECK(running_mean.at(10) == doctest::Approx(0.1));

  CHECK_THROWS_AS((PowerSchedule{100.0, 2.0, 0.5}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((PowerSchedule{100.0, 2.0, 1.1}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((PowerSchedule{100.0, 0.0, 0.6}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((HarmonicSchedule{-1.0}).validate(), std::invalid_argument);
  CHECK_NOTHROW((HarmonicSchedule{0.0}).validate());  // frozen thresholds are legal
}

TEST_CASE("random streams") {
  RandomStream a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int k = 0; k < 32; ++k) {
    const double ua = a.uniform(), ub = b.uniform(), uc = c.uniform();
    all_equal = all_equal && ua == ub;
    any_diff = any_diff || ua != uc;
    CHECK(ua >= 0.0);
    CHECK(ua < 1.0);
  }
  CHECK(all_equal);
  CHECK(any_diff);

  const std::set<std::uint64_t> derived = {mix_seed(7, kEnvironmentStream),
                                           mix_seed(7, kVirtualSampleStream),
                                           mix_seed(7, kExplorationStream),
                                           mix_seed(8, kEnvironmentStream)};
  CHECK(derived.size() == 4);

  RandomStream d(1);
  int ones = 0;
  for (int k = 0; k < 1000; ++k) ones += d.bit() ? 1 : 0;
  CHECK(ones > 400);
  CHECK(ones < 600);

  RandomStream e(2);
  for (int k = 0; k < 200; ++k) {
    const int v = e.uniform_int(3);
    CHECK(v >= 0);
    CHECK(v < 3);
  }
  CHECK_THROWS_AS(e.uniform_int(0), std::invalid_argument);
}
