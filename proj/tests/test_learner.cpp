#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "salmut/baselines.hpp"
#include "salmut/event_model.hpp"
#include "salmut/exact.hpp"
#include "salmut/learner.hpp"
#include "salmut/random.hpp"
#include "salmut/schedule.hpp"
#include "salmut/threshold.hpp"

using namespace salmut;

namespace {

EventModel reference_queue(double mu = 4.0) {
  QueueConfig cfg;
  cfg.params.service_rate = mu;
  return make_queue_model(cfg);
}

// unit faster schedule: a(count) = 1/(count+1)
SalmutConfig unit_config() {
  SalmutConfig cfg;
  cfg.schedule.faster = PowerSchedule{1.0, 1.0, 1.0};
  return cfg;
}

}  // namespace

TEST_CASE("storage counts") {
  const EventModel model = reference_queue();
  CHECK(SalmutLearner::storage_count(model) == 13);
  CHECK(QLearner(model, BaselineConfig{}, 1).storage_count() == 52);
  CHECK(PdsLearner(model, BaselineConfig{}, 1).storage_count() == 11);
}

TEST_CASE("faster update moves one value toward its target") {
  const EventModel model = reference_queue();
  SalmutLearner learner(model, unit_config(), 1);

  // admit a class-1 arrival at s=3: lump reward 20 - 0.9, step size 1/2
  learner.faster_value_update(3, 1, ActionKind::Admit, 4);
  CHECK(learner.values()[3] == doctest::Approx(9.55).epsilon(1e-12));
  for (int s = 0; s <= 10; ++s)
    if (s != 3) CHECK(learner.values()[s] == 0.0);
  CHECK(learner.visit_count(3) == 1);
  CHECK(learner.visit_count(0) == 0);
  CHECK(learner.last_value_writes() == 1);

  // second visit to the same state uses the next step size 1/3
  learner.faster_value_update(3, 1, ActionKind::Admit, 4);
  CHECK(learner.values()[3] == doctest::Approx(9.55 + (19.1 - 9.55) / 3.0).epsilon(1e-12));
  CHECK(learner.visit_count(3) == 2);

  // blocking at the empty state earns nothing and moves nothing
  learner.faster_value_update(0, 2, ActionKind::Block, 0);
  CHECK(learner.values()[0] == 0.0);
}

TEST_CASE("virtual draws describe the admit and stay forks") {
  const EventModel model = reference_queue();
  SalmutLearner learner(model, SalmutConfig{}, 3);

  CHECK_THROWS_AS(learner.virtual_sample(4, 0), std::invalid_argument);

  int alphas = 0, betas = 0;
  bool saw_plain_reward = false;
  for (int k = 0; k < 2000; ++k) {
    const VirtualSample vs = learner.virtual_sample(5, 2);
    CHECK(vs.s_hat == (vs.alpha ? 6 : 5));
    CHECK(vs.h_hat == (vs.beta ? -2.5 : 7.5));
    alphas += vs.alpha;
    betas += vs.beta;
    saw_plain_reward = saw_plain_reward || !vs.beta;
  }
  CHECK(alphas > 800);
  CHECK(alphas < 1200);
  CHECK(betas > 800);
  CHECK(betas < 1200);
  CHECK(saw_plain_reward);

  // a different state and class: reward 20 minus holding cost 0.9
  for (int k = 0; k < 64; ++k) {
    const VirtualSample vs = learner.virtual_sample(3, 1);
    if (!vs.beta) {
      CHECK(vs.h_hat == doctest::Approx(19.1).epsilon(1e-12));
      break;
    }
  }

  // the virtual admit clamps at the ceiling
  for (int k = 0; k < 64; ++k) {
    const VirtualSample vs = learner.virtual_sample(10, 1);
    CHECK(vs.s_hat == 10);
    if (vs.alpha) break;
  }
}

TEST_CASE("threshold increment arithmetic") {
  VirtualSample admit_fork;
  admit_fork.alpha = true;
  admit_fork.beta = false;
  admit_fork.s_hat = 4;
  admit_fork.h_hat = 19.1;
  CHECK(SalmutLearner::slower_increment(0.1, -0.25, admit_fork, 9.55, 20.0, 0.9, true) ==
        doctest::Approx(0.71625).epsilon(1e-12));
  // with beta unset the independent fork and the riding reward coincide
  CHECK(SalmutLearner::slower_increment(0.1, -0.25, admit_fork, 9.55, 20.0, 0.9, false) ==
        doctest::Approx(0.71625).epsilon(1e-12));

  // on the stay branch with the reward fork unset the two variants split:
  // the independent fork subtracts the full reward sample, the riding
  // variant only pays the holding cost
  VirtualSample stay_fork;
  stay_fork.alpha = false;
  stay_fork.beta = false;
  stay_fork.s_hat = 3;
  stay_fork.h_hat = 19.1;
  CHECK(SalmutLearner::slower_increment(1.0, -0.2, stay_fork, 5.0, 20.0, 0.9, true) ==
        doctest::Approx(-0.2 * (5.0 - 19.1)).epsilon(1e-12));
  CHECK(SalmutLearner::slower_increment(1.0, -0.2, stay_fork, 5.0, 20.0, 0.9, false) ==
        doctest::Approx(-0.2 * (5.0 - 0.9)).epsilon(1e-12));
}

TEST_CASE("every fork combination averages to the ascent drift") {
  const EventModel model = reference_queue();
  numvec v(11);
  for (int s = 0; s <= 10; ++s) v[s] = -0.7 * s * s + 3.0 * s;
  const double t = 4.3;

  for (int event : {1, 2}) {
    const double reward = model.reward(event);
    for (int s = 0; s < 10; ++s) {
      const double cost = model.cost(s);
      const double grad_f = smooth_prob_grad(double(s), t);
      double mean_split = 0.0, mean_coupled = 0.0;
      for (bool alpha : {false, true}) {
        VirtualSample vs;
        vs.alpha = alpha;
        vs.s_hat = alpha ? s + 1 : s;
        double coupled_ref = 0.0;
        for (bool beta : {false, true}) {
          vs.beta = beta;
          vs.h_hat = beta ? -cost : reward - cost;
          mean_split +=
              SalmutLearner::slower_increment(1.0, grad_f, vs, v[vs.s_hat], reward, cost, true) / 4.0;
          const double coupled =
              SalmutLearner::slower_increment(1.0, grad_f, vs, v[vs.s_hat], reward, cost, false);
          // the riding variant never looks at the beta fork
          if (!beta)
            coupled_ref = coupled;
          else
            CHECK(coupled == coupled_ref);
          mean_coupled += coupled / 4.0;
        }
      }
      const double f = smooth_prob(double(s), t);
      const double drift = f * (1.0 - f) * (reward + v[s + 1] - v[s]) / 2.0;
      CHECK(mean_split == doctest::Approx(drift).epsilon(1e-12));
      CHECK(mean_coupled == doctest::Approx(drift).epsilon(1e-12));
    }
  }
}

TEST_CASE("sampled drift reassembles the exact gradient") {
  const EventModel model = reference_queue();
  const ThresholdVector tau({7.0, 3.0}, 10.0);
  const PolicyEvaluation eval = average_reward_sigma(model, tau, /*smoothed=*/true);
  const numvec grad = gradient_sigma(model, tau, true);

  // Both fork variants produce the same expected per-visit drift, so summed
  // against the stationary law they both rebuild the full gradient. The
  // analytic include_g_term=false ablation is a different object and is
  // checked against the gradient module separately.
  for (bool coupled : {false, true}) {
    for (int k = 0; k < 2; ++k) {
      const int event = model.controlled_events()[static_cast<std::size_t>(k)];
      const double reward = model.reward(event);
      double acc = 0.0;
      for (int s = 0; s < 10; ++s) {
        const double p = model.event_probs(s)[static_cast<std::size_t>(event)];
        const double cost = model.cost(s);
        const double grad_f = smooth_prob_grad(double(s), tau[k]);
        double mean = 0.0;
        for (bool alpha : {false, true}) {
          for (bool beta : {false, true}) {
            VirtualSample vs;
            vs.alpha = alpha;
            vs.beta = beta;
            vs.s_hat = alpha ? s + 1 : s;
            vs.h_hat = beta ? -cost : reward - cost;
            mean += SalmutLearner::slower_increment(1.0, grad_f, vs, eval.values[vs.s_hat],
                                                    reward, cost, !coupled) /
                    4.0;
          }
        }
        acc += eval.stationary[s] * p * 2.0 * mean;
      }
      CHECK(acc == doctest::Approx(grad[static_cast<std::size_t>(k)]).epsilon(1e-9));
    }
  }
}

TEST_CASE("online step bookkeeping") {
  const EventModel model = reference_queue();
  SalmutLearner learner(model, SalmutConfig{}, 1);
  long double cum = 0.0L;
  const PowerSchedule faster{};
  for (long long k = 1; k <= 2000; ++k) {
    const StepOutcome out = learner.salmut_step();
    CHECK(out.n == k);
    CHECK(learner.iteration() == k);
    CHECK(learner.thresholds()[0] >= learner.thresholds()[1]);
    CHECK(learner.thresholds()[0] <= 10.0);
    CHECK(learner.thresholds()[1] >= 0.0);
    CHECK(learner.last_value_writes() == 1);
    CHECK(learner.last_threshold_writes() <= 2);
    CHECK(std::isfinite(learner.rho_hat()));
    cum += static_cast<long double>(faster.at(k));
    long long visits = 0;
    for (int s = 0; s <= 10; ++s) visits += learner.visit_count(s);
    CHECK(visits == k);
  }
  CHECK(learner.cum_a() == doctest::Approx(double(cum)).epsilon(1e-12));
  CHECK(learner.max_value_writes() == 1);
  CHECK(learner.max_threshold_writes() <= 2);
}

TEST_CASE("frozen slower gain leaves thresholds in place") {
  const EventModel model = reference_queue();

  SalmutConfig frozen;
  frozen.schedule.slower = HarmonicSchedule{0.0};
  SalmutLearner from_zero(model, frozen, 1);
  for (int k = 0; k < 5000; ++k) from_zero.salmut_step();
  CHECK(from_zero.thresholds()[0] == 0.0);
  CHECK(from_zero.thresholds()[1] == 0.0);
  CHECK(from_zero.max_threshold_writes() == 0);

  frozen.initial_thresholds = {7.0, 3.0};
  SalmutLearner pinned(model, frozen, 2);
  for (int k = 0; k < 5000; ++k) pinned.salmut_step();
  CHECK(pinned.thresholds()[0] == 7.0);
  CHECK(pinned.thresholds()[1] == 3.0);
}

TEST_CASE("threshold moves slow down relative to value moves") {
  const EventModel model = reference_queue();
  SalmutLearner learner(model, SalmutConfig{}, 1);
  numvec prev_v = learner.values();
  numvec prev_t = learner.thresholds().entries();
  double dv_early = 0.0, dt_early = 0.0, dv_late = 0.0, dt_late = 0.0;
  for (int k = 1; k <= 30000; ++k) {
    learner.salmut_step();
    double dv = 0.0, dt = 0.0;
    for (int s = 0; s <= 10; ++s) dv += std::abs(learner.values()[s] - prev_v[s]);
    for (int j = 0; j < 2; ++j) dt += std::abs(learner.thresholds()[j] - prev_t[j]);
    prev_v = learner.values();
    prev_t = learner.thresholds().entries();
    if (k > 1000 && k <= 2000) {
      dv_early += dv;
      dt_early += dt;
    }
    if (k > 29000) {
      dv_late += dv;
      dt_late += dt;
    }
  }
  CHECK(dv_early > 0.0);
  CHECK(dv_late > 0.0);
  CHECK(dt_late / dv_late < dt_early / dv_early);
}

TEST_CASE("same seed same run") {
  const EventModel model = reference_queue();
  SalmutLearner a(model, SalmutConfig{}, 5);
  SalmutLearner b(model, SalmutConfig{}, 5);
  SalmutLearner c(model, SalmutConfig{}, 6);
  for (int k = 0; k < 1000; ++k) {
    a.salmut_step();
    b.salmut_step();
    c.salmut_step();
  }
  CHECK(a.values() == b.values());
  CHECK(a.thresholds().entries() == b.thresholds().entries());
  CHECK(a.rho_hat() == b.rho_hat());
  CHECK(a.state() == b.state());
  CHECK(a.values() != c.values());
}

TEST_CASE("learner config validation") {
  const EventModel model = reference_queue();
  SalmutConfig short_tau;
  short_tau.initial_thresholds = {5.0};
  CHECK_THROWS_AS(SalmutLearner(model, short_tau, 1), std::invalid_argument);

  SalmutConfig crossed;
  crossed.initial_thresholds = {3.0, 7.0};
  CHECK_THROWS_AS(SalmutLearner(model, crossed, 1), std::invalid_argument);

  SalmutConfig outside;
  outside.initial_state = 11;
  CHECK_THROWS_AS(SalmutLearner(model, outside, 1), std::invalid_argument);
}

TEST_CASE("relative q-learning from an empty table blocks forever") {
  const EventModel model = reference_queue();
  BaselineConfig bc;
  bc.epsilon = 0.0;
  QLearner q(model, bc, 7);
  for (int k = 0; k < 100; ++k) {
    const StepOutcome out = q.q_step();
    CHECK(out.state == 0);
    // the empty state only sees arrivals, and zero ties break toward Block
    CHECK(out.action == ActionKind::Block);
    CHECK(out.next_state == 0);
    CHECK(out.reward == 0.0);
  }
  CHECK(q.q_value(0, 1, ActionKind::Block) == 0.0);
  CHECK(q.q_value(0, 1, ActionKind::Admit) == 0.0);
  CHECK(q.q_value(0, 2, ActionKind::Block) == 0.0);
  CHECK(q.q_value(0, 2, ActionKind::Admit) == 0.0);
  CHECK(q.rho_hat() == 0.0);
}

TEST_CASE("q-learning first update replays the event stream") {
  const EventModel model = reference_queue();
  BaselineConfig bc;
  bc.epsilon = 0.0;
  bc.initial_state = 3;
  bc.schedule.faster = PowerSchedule{1.0, 1.0, 1.0};
  QLearner q(model, bc, 11);
  q.q_step();

  RandomStream env(mix_seed(11, kEnvironmentStream));
  const int event = model.sample_event(3, env.uniform());
  const ActionKind action =
      model.is_controlled(event) ? ActionKind::Block : ActionKind::Continue;
  const double reward = model.lump_reward(3, event, action);
  // the whole table is zero, so the first target is just the lump reward,
  // written with step size 1/2
  CHECK(q.q_value(3, event, action) == doctest::Approx(0.5 * reward).epsilon(1e-12));
}

TEST_CASE("q-learning stores exactly the reachable triples") {
  const EventModel model = reference_queue();
  QLearner q(model, BaselineConfig{}, 1);
  CHECK(q.storage_count() == 52);
  // no departures from the empty state
  CHECK_THROWS_AS(q.q_value(0, 0, ActionKind::Continue), std::invalid_argument);
  // no admission at the ceiling
  CHECK_THROWS_AS(q.q_value(10, 1, ActionKind::Admit), std::invalid_argument);
  CHECK(q.q_value(10, 1, ActionKind::Block) == 0.0);
  CHECK(q.q_value(1, 0, ActionKind::Continue) == 0.0);
}

TEST_CASE("q-learning long run lands near the optimum") {
  const EventModel model = reference_queue();
  QLearner q(model, BaselineConfig{}, 1);
  for (int k = 0; k < 100000; ++k) q.q_step();
  CHECK(q.max_table_writes() == 1);
  const std::vector<int> greedy = q.greedy_thresholds();
  const numvec tau(greedy.begin(), greedy.end());
  const double sigma = average_reward_sigma(model, tau, false).sigma;
  CHECK(std::abs(sigma - 7.3252207046) / 7.3252207046 < 0.02);
}

TEST_CASE("post-decision learner admits on optimism and converges") {
  const EventModel model = reference_queue();

  PdsLearner first(model, BaselineConfig{}, 2);
  const StepOutcome out = first.pds_step();
  // from the empty state the first event is an arrival, and with a zero
  // table the lookahead sees free reward
  CHECK(model.is_controlled(out.event));
  CHECK(out.action == ActionKind::Admit);

  PdsLearner p(model, BaselineConfig{}, 3);
  for (int k = 0; k < 100000; ++k) p.pds_step();
  CHECK(p.max_table_writes() == 1);
  CHECK(p.greedy_thresholds() == std::vector<int>{10, 4});
  const double sigma = average_reward_sigma(model, numvec{10.0, 4.0}, false).sigma;
  CHECK(sigma == doctest::Approx(7.3252207046).epsilon(1e-8));

  PdsLearner d1(model, BaselineConfig{}, 4);
  PdsLearner d2(model, BaselineConfig{}, 4);
  for (int k = 0; k < 500; ++k) {
    d1.pds_step();
    d2.pds_step();
  }
  CHECK(d1.values() == d2.values());
}

TEST_CASE("baseline config validation") {
  const EventModel model = reference_queue();
  BaselineConfig negative;
  negative.epsilon = -0.1;
  CHECK_THROWS_AS(QLearner(model, negative, 1), std::invalid_argument);
  BaselineConfig excessive;
  excessive.epsilon = 1.1;
  CHECK_THROWS_AS(QLearner(model, excessive, 1), std::invalid_argument);
  BaselineConfig outside;
  outside.initial_state = 12;
  CHECK_THROWS_AS(QLearner(model, outside, 1), std::invalid_argument);
  CHECK_THROWS_AS(PdsLearner(model, outside, 1), std::invalid_argument);
}
