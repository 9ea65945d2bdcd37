#include "salmut/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "salmut/baselines.hpp"
#include "salmut/exact.hpp"
#include "salmut/learner.hpp"

namespace salmut {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::vector<std::string> kAllAlgorithms = {"salmut", "qlearning", "pds"};

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

nlohmann::json model_to_json(const QueueConfig& m) {
  return nlohmann::json{{"m", m.params.servers},
                        {"B", m.params.buffer},
                        {"mu", m.params.service_rate},
                        {"lambda", m.params.arrival_rates},
                        {"R", m.rewards},
                        {"cost", {{"c", m.cost.c}, {"p", m.cost.p}}}};
}

QueueConfig model_from_json(const nlohmann::json& j) {
  return parse_queue_config(j.dump());
}

}  // namespace

void ExperimentConfig::validate() const {
  if (algorithm != "salmut" && algorithm != "qlearning" && algorithm != "pds" &&
      algorithm != "all")
    throw std::invalid_argument("ExperimentConfig: unknown algorithm '" + algorithm + "'");
  if (seeds.empty()) throw std::invalid_argument("ExperimentConfig: seeds must be non-empty");
  if (max_iterations < 1) throw std::invalid_argument("ExperimentConfig: max_iterations must be >= 1");
  if (stride < 1) throw std::invalid_argument("ExperimentConfig: stride must be >= 1");
  if (!(window > 0.0)) throw std::invalid_argument("ExperimentConfig: window must be positive");
  if (!(zeta > 0.0 && zeta < 1.0)) throw std::invalid_argument("ExperimentConfig: zeta must lie in (0, 1)");
  if (burn_in < 0) throw std::invalid_argument("ExperimentConfig: negative burn-in");
  if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("ExperimentConfig: epsilon must lie in [0, 1]");
  schedule.validate();
  rho_schedule.validate();
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  ExperimentConfig cfg;
  if (!j.contains("model")) {
    cfg.model = model_from_json(j);
    return cfg;
  }
  cfg.model = model_from_json(j.at("model"));
  if (j.contains("algorithm")) cfg.algorithm = j.at("algorithm").get<std::string>();
  if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("max_iterations")) cfg.max_iterations = j.at("max_iterations").get<long long>();
  if (j.contains("stride")) cfg.stride = j.at("stride").get<int>();
  if (j.contains("window")) cfg.window = j.at("window").get<double>();
  if (j.contains("zeta")) cfg.zeta = j.at("zeta").get<double>();
  if (j.contains("burn_in")) cfg.burn_in = j.at("burn_in").get<int>();
  if (j.contains("window_in_records")) cfg.window_in_records = j.at("window_in_records").get<bool>();
  if (j.contains("include_g_term")) cfg.include_g_term = j.at("include_g_term").get<bool>();
  if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();
  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    if (s.contains("a")) {
      cfg.schedule.faster.denom_stride = s.at("a").value("D", cfg.schedule.faster.denom_stride);
      cfg.schedule.faster.offset = s.at("a").value("c", cfg.schedule.faster.offset);
      cfg.schedule.faster.exponent = s.at("a").value("e", cfg.schedule.faster.exponent);
    }
    if (s.contains("b")) cfg.schedule.slower.gain = s.at("b").value("k", cfg.schedule.slower.gain);
  }
  if (j.contains("rho_schedule")) {
    const auto& r = j.at("rho_schedule");
    cfg.rho_schedule.denom_stride = r.value("D", cfg.rho_schedule.denom_stride);
    cfg.rho_schedule.offset = r.value("c", cfg.rho_schedule.offset);
    cfg.rho_schedule.exponent = r.value("e", cfg.rho_schedule.exponent);
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["model"] = model_to_json(cfg.model);
  j["algorithm"] = cfg.algorithm;
  j["seeds"] = cfg.seeds;
  j["max_iterations"] = cfg.max_iterations;
  j["stride"] = cfg.stride;
  j["window"] = cfg.window;
  j["zeta"] = cfg.zeta;
  j["burn_in"] = cfg.burn_in;
  j["window_in_records"] = cfg.window_in_records;
  j["include_g_term"] = cfg.include_g_term;
  j["epsilon"] = cfg.epsilon;
  j["schedule"] = {{"a",
                    {{"D", cfg.schedule.faster.denom_stride},
                     {"c", cfg.schedule.faster.offset},
                     {"e", cfg.schedule.faster.exponent}}},
                   {"b", {{"k", cfg.schedule.slower.gain}}}};
  j["rho_schedule"] = {{"D", cfg.rho_schedule.denom_stride},
                       {"c", cfg.rho_schedule.offset},
                       {"e", cfg.rho_schedule.exponent}};
  return j.dump(2);
}

namespace {

struct RunCounters {
  long long storage = 0;
  int max_value_writes = 0;
  int max_threshold_writes = 0;
};

SeedRun run_one(const EventModel& model, const ExperimentConfig& cfg, const std::string& algo,
                std::uint64_t seed, RunCounters& counters) {
  SeedRun run;
  run.seed = seed;

  auto record = [&](long long n, double cum_a, double rho, numvec thresholds, int state) {
    TraceRecord r;
    r.n = n;
    r.cum_a = cum_a;
    r.rho_hat = rho;
    r.thresholds = std::move(thresholds);
    r.state = state;
    run.trace.push_back(std::move(r));
  };

  if (algo == "salmut") {
    SalmutConfig lc;
    lc.schedule = cfg.schedule;
    lc.rho_schedule = cfg.rho_schedule;
    lc.include_g_term = cfg.include_g_term;
    SalmutLearner learner(model, lc, seed);
    for (long long n = 1; n <= cfg.max_iterations; ++n) {
      const StepOutcome out = learner.salmut_step();
      if (n % cfg.stride == 0)
        record(n, learner.cum_a(), learner.rho_hat(), learner.thresholds().entries(),
               out.next_state);
    }
    run.final_thresholds = learner.thresholds().entries();
    for (double t : run.final_thresholds) run.reported_thresholds.push_back(round_half_up(t));
    run.final_rho = learner.rho_hat();
    counters.storage = SalmutLearner::storage_count(model);
    counters.max_value_writes = std::max(counters.max_value_writes, learner.max_value_writes());
    counters.max_threshold_writes =
        std::max(counters.max_threshold_writes, learner.max_threshold_writes());
  } else if (algo == "qlearning" || algo == "pds") {
    BaselineConfig bc;
    bc.schedule = cfg.schedule;
    bc.rho_schedule = cfg.rho_schedule;
    bc.epsilon = cfg.epsilon;
    auto drive = [&](auto& learner, auto step) {
      for (long long n = 1; n <= cfg.max_iterations; ++n) {
        const StepOutcome out = (learner.*step)();
        if (n % cfg.stride == 0) {
          const std::vector<int> greedy = learner.greedy_thresholds();
          record(n, learner.cum_a(), learner.rho_hat(), numvec(greedy.begin(), greedy.end()),
                 out.next_state);
        }
      }
      run.reported_thresholds = learner.greedy_thresholds();
      run.final_thresholds.assign(run.reported_thresholds.begin(), run.reported_thresholds.end());
      run.final_rho = learner.rho_hat();
      counters.storage = learner.storage_count();
      counters.max_value_writes = std::max(counters.max_value_writes, learner.max_table_writes());
    };
    if (algo == "qlearning") {
      QLearner learner(model, bc, seed);
      drive(learner, &QLearner::q_step);
    } else {
      PdsLearner learner(model, bc, seed);
      drive(learner, &PdsLearner::pds_step);
    }
  } else {
    throw std::invalid_argument("run_experiment: unknown algorithm '" + algo + "'");
  }

  run.convergence_n = practical_convergence_index(run.trace, cfg.window, cfg.zeta, cfg.burn_in,
                                                  cfg.window_in_records);
  const numvec reported(run.reported_thresholds.begin(), run.reported_thresholds.end());
  run.final_sigma = average_reward_sigma(model, reported, /*smoothed=*/false).sigma;
  return run;
}

nlohmann::json run_to_json(const SeedRun& run) {
  nlohmann::json j;
  j["seed"] = run.seed;
  j["failed"] = run.failed;
  if (run.failed) {
    j["error"] = run.error;
    return j;
  }
  if (run.convergence_n)
    j["convergence_n"] = *run.convergence_n;
  else
    j["convergence_n"] = nullptr;
  j["final_thresholds"] = run.final_thresholds;
  j["reported_thresholds"] = run.reported_thresholds;
  j["final_rho"] = run.final_rho;
  j["final_sigma"] = run.final_sigma;
  return j;
}

}  // namespace

double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median: empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  if (n % 2 == 1) return xs[n / 2];
  return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

const AlgorithmSummary* ExperimentSummary::find(const std::string& name) const {
  for (const AlgorithmSummary& a : algorithms) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

ExperimentSummary run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const EventModel model = make_queue_model(cfg.model);

  ExperimentSummary summary;
  summary.config = cfg;
  const RviaResult exact = rvia_solve(model);
  summary.tau_star = exact.thresholds;
  summary.sigma_star = exact.gain;

  const std::vector<std::string> algos =
      cfg.algorithm == "all" ? kAllAlgorithms : std::vector<std::string>{cfg.algorithm};

  for (const std::string& algo : algos) {
    AlgorithmSummary as;
    as.name = algo;
    std::vector<RunCounters> counters(cfg.seeds.size());
    std::vector<std::future<SeedRun>> futures;
    futures.reserve(cfg.seeds.size());
    for (std::size_t k = 0; k < cfg.seeds.size(); ++k) {
      futures.push_back(std::async(std::launch::async, [&, k]() {
        return run_one(model, cfg, algo, cfg.seeds[k], counters[k]);
      }));
    }
    for (std::size_t k = 0; k < cfg.seeds.size(); ++k) {
      try {
        as.runs.push_back(futures[k].get());
      } catch (const std::exception& e) {
        SeedRun failed;
        failed.seed = cfg.seeds[k];
        failed.failed = true;
        failed.error = e.what();
        as.runs.push_back(std::move(failed));
      }
      as.storage = std::max(as.storage, counters[k].storage);
      as.max_value_writes = std::max(as.max_value_writes, counters[k].max_value_writes);
      as.max_threshold_writes = std::max(as.max_threshold_writes, counters[k].max_threshold_writes);
    }

    std::vector<double> conv, sigma, rho;
    for (const SeedRun& r : as.runs) {
      if (r.failed) continue;
      conv.push_back(r.convergence_n ? static_cast<double>(*r.convergence_n) : kInf);
      sigma.push_back(r.final_sigma);
      rho.push_back(r.final_rho);
    }
    as.median_convergence_n = conv.empty() ? kInf : median(conv);
    as.median_final_sigma = sigma.empty() ? kInf : median(sigma);
    as.median_final_rho = rho.empty() ? kInf : median(rho);
    summary.algorithms.push_back(std::move(as));
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    for (const AlgorithmSummary& as : summary.algorithms) {
      const std::string prefix = as.name == "salmut" ? "tau" : "greedy_tau";
      for (const SeedRun& r : as.runs) {
        if (r.failed) continue;
        const std::string path =
            out_dir + "/" + as.name + "_seed" + std::to_string(r.seed) + ".csv";
        write_trace_csv(path, r.trace, prefix, static_cast<std::size_t>(model.num_classes()));
      }
    }
    nlohmann::json j;
    j["config"] = nlohmann::json::parse(experiment_config_to_json(cfg));
    j["tau_star"] = summary.tau_star;
    j["sigma_star"] = summary.sigma_star;
    for (const AlgorithmSummary& as : summary.algorithms) {
      nlohmann::json ja;
      ja["storage"] = as.storage;
      ja["max_value_writes"] = as.max_value_writes;
      ja["max_threshold_writes"] = as.max_threshold_writes;
      ja["median_convergence_n"] =
          std::isfinite(as.median_convergence_n) ? nlohmann::json(as.median_convergence_n)
                                                 : nlohmann::json(nullptr);
      ja["median_final_sigma"] = as.median_final_sigma;
      ja["median_final_rho"] = as.median_final_rho;
      for (const SeedRun& r : as.runs) ja["per_seed"].push_back(run_to_json(r));
      j["algorithms"][as.name] = std::move(ja);
    }
    std::ofstream out(out_dir + "/summary.json");
    if (!out) throw std::runtime_error("cannot write summary.json under " + out_dir);
    out << j.dump(2) << '\n';
  }
  return summary;
}

CompareChecks compare_checks(const ExperimentSummary& summary) {
  CompareChecks checks;
  auto fail = [&](const std::string& msg) {
    checks.ok = false;
    checks.failures.push_back(msg);
  };

  const EventModel model = make_queue_model(summary.config.model);
  const long long expected_salmut = model.num_states() + model.num_classes();

  const AlgorithmSummary* sal = summary.find("salmut");
  const AlgorithmSummary* q = summary.find("qlearning");
  const AlgorithmSummary* pds = summary.find("pds");
  if (!sal || !q || !pds) {
    fail("comparison needs all three algorithms");
    return checks;
  }
  for (const AlgorithmSummary* a : {sal, q, pds}) {
    for (const SeedRun& r : a->runs) {
      if (r.failed) fail(a->name + " seed " + std::to_string(r.seed) + " failed: " + r.error);
    }
  }

  if (sal->storage != expected_salmut)
    fail("salmut storage " + std::to_string(sal->storage) + " != expected " +
         std::to_string(expected_salmut));
  if (q->storage <= sal->storage)
    fail("qlearning storage " + std::to_string(q->storage) + " does not exceed salmut's " +
         std::to_string(sal->storage));
  if (sal->max_value_writes > 1)
    fail("salmut wrote more than one value entry in an iteration");
  if (sal->max_threshold_writes > model.num_classes())
    fail("salmut wrote more threshold components than classes");
  if (q->max_value_writes > 1) fail("qlearning wrote more than one table entry in an iteration");
  if (pds->max_value_writes > 1) fail("pds wrote more than one table entry in an iteration");

  if (!(sal->median_convergence_n <= pds->median_convergence_n &&
        pds->median_convergence_n <= q->median_convergence_n))
    fail("median convergence ordering violated: salmut " +
         std::to_string(sal->median_convergence_n) + ", pds " +
         std::to_string(pds->median_convergence_n) + ", qlearning " +
         std::to_string(q->median_convergence_n));

  for (const AlgorithmSummary* a : {sal, q, pds}) {
    const double rel = std::abs(a->median_final_sigma - summary.sigma_star) /
                       std::abs(summary.sigma_star);
    if (!(rel < 0.02))
      fail(a->name + " median final sigma " + std::to_string(a->median_final_sigma) +
           " deviates " + std::to_string(100.0 * rel) + "% from the optimum " +
           std::to_string(summary.sigma_star));
  }
  return checks;
}

ExperimentSummary compare(ExperimentConfig cfg, const std::string& out_dir) {
  cfg.algorithm = "all";
  return run_experiment(cfg, out_dir);
}

std::string comparison_table(const ExperimentSummary& summary) {
  std::ostringstream os;
  os << "tau* = (";
  for (std::size_t k = 0; k < summary.tau_star.size(); ++k)
    os << (k ? "," : "") << summary.tau_star[k];
  os << "), sigma* = " << std::setprecision(6) << std::fixed << summary.sigma_star << "\n\n";
  os << std::left << std::setw(11) << "algorithm" << std::right << std::setw(9) << "storage"
     << std::setw(13) << "writes/iter" << std::setw(15) << "median conv n" << std::setw(14)
     << "median sigma" << std::setw(13) << "sigma/sigma*" << '\n';
  for (const AlgorithmSummary& a : summary.algorithms) {
    std::size_t failed = 0;
    for (const SeedRun& r : a.runs) failed += r.failed ? 1 : 0;
    std::ostringstream writes;
    writes << a.max_value_writes;
    if (a.max_threshold_writes > 0) writes << "+" << a.max_threshold_writes << "t";
    os << std::left << std::setw(11) << a.name << std::right << std::setw(9) << a.storage
       << std::setw(13) << writes.str();
    if (std::isfinite(a.median_convergence_n))
      os << std::setw(15) << static_cast<long long>(a.median_convergence_n);
    else
      os << std::setw(15) << "none";
    os << std::setw(14) << std::setprecision(6) << std::fixed << a.median_final_sigma
       << std::setw(13) << std::setprecision(6) << std::fixed
       << a.median_final_sigma / summary.sigma_star;
    if (failed > 0) os << "  (" << failed << " seed(s) absent)";
    os << '\n';
  }
  return os.str();
}

}  // namespace salmut
