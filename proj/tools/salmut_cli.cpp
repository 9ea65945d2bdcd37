// Command-line front end: exact solver, brute-force scan, gradient check,
// single-algorithm learning runs, and the full three-algorithm comparison.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "salmut/exact.hpp"
#include "salmut/harness.hpp"
#include "salmut/random.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<double> mu;
};

salmut::ExperimentConfig load_config(const CommonOpts& opts) {
  salmut::ExperimentConfig cfg;
  if (!opts.config_path.empty()) cfg = salmut::load_experiment_config(opts.config_path);
  if (opts.mu) cfg.model.params.service_rate = *opts.mu;
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path,
                  "JSON config (model-only or full experiment schema); defaults apply if omitted")
      ->check(CLI::ExistingFile);
  cmd->add_option("--mu", opts.mu, "override the service rate");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) seeds.push_back(std::stoull(tok));
  }
  if (seeds.empty()) throw CLI::ValidationError("--seeds", "no seeds parsed from '" + text + "'");
  return seeds;
}

int cmd_solve(const CommonOpts& opts, const std::string& out_path) {
  const salmut::ExperimentConfig cfg = load_config(opts);
  const salmut::EventModel model = salmut::make_queue_model(cfg.model);
  const salmut::RviaResult res = salmut::rvia_solve(model);

  nlohmann::json j;
  j["thresholds"] = res.thresholds;
  j["gain"] = res.gain;
  j["iterations"] = res.iterations;
  j["final_span"] = res.final_span;
  j["values"] = res.values;

  std::cout << "thresholds = (";
  for (std::size_t k = 0; k < res.thresholds.size(); ++k)
    std::cout << (k ? "," : "") << res.thresholds[k];
  std::cout << "), gain = " << res.gain << ", sweeps = " << res.iterations
            << ", final span = " << res.final_span << '\n';
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open output file: " + out_path);
    out << j.dump(2) << '\n';
  }
  return 0;
}

int cmd_scan(const CommonOpts& opts, const std::string& out_path) {
  const salmut::ExperimentConfig cfg = load_config(opts);
  const salmut::EventModel model = salmut::make_queue_model(cfg.model);

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot open output file: " + out_path);
    os = &file;
  }
  const int n = model.num_classes();
  for (int k = 1; k <= n; ++k) *os << "tau_" << k << (k < n ? "," : "");
  *os << ",sigma\n";
  os->precision(17);
  for (const std::vector<int>& tau :
       salmut::enumerate_ordered_policies(model.max_state(), n)) {
    salmut::numvec real_tau(tau.begin(), tau.end());
    const double sigma =
        salmut::average_reward_sigma(model, salmut::ThresholdVector(real_tau, model.max_state()),
                                     /*smoothed=*/false)
            .sigma;
    for (int t : tau) *os << t << ',';
    *os << sigma << '\n';
  }

  const salmut::BruteForceResult best = salmut::brute_force_optimal_tau(model);
  std::cerr << "best over " << best.policies_evaluated << " ordered vectors: (";
  for (std::size_t k = 0; k < best.thresholds.size(); ++k)
    std::cerr << (k ? "," : "") << best.thresholds[k];
  std::cerr << ") with sigma = " << best.gain << '\n';
  return 0;
}

int cmd_grad_check(const CommonOpts& opts, std::uint64_t seed, int count, double delta,
                   double tol) {
  const salmut::ExperimentConfig cfg = load_config(opts);
  const salmut::EventModel model = salmut::make_queue_model(cfg.model);
  const int N = model.num_classes();
  const double W = model.max_state();

  salmut::RandomStream rng(salmut::mix_seed(seed, 17));
  double worst = 0.0;
  for (int trial = 0; trial < count; ++trial) {
    // interior ordered point, away from the box edges
    salmut::numvec tau(static_cast<std::size_t>(N), 0.0);
    double hi = W - 0.5;
    for (int k = 0; k < N; ++k) {
      const double lo = 0.5 + 0.25 * (N - 1 - k);
      tau[static_cast<std::size_t>(k)] = lo + rng.uniform() * (hi - lo);
      hi = tau[static_cast<std::size_t>(k)];
    }
    const salmut::numvec grad =
        salmut::gradient_sigma(model, salmut::ThresholdVector(tau, W), true);
    for (int k = 0; k < N; ++k) {
      std::vector<long double> t(tau.begin(), tau.end());
      t[static_cast<std::size_t>(k)] += delta;
      const long double up = salmut::detail::smoothed_sigma<long double>(model, t);
      t[static_cast<std::size_t>(k)] -= 2 * delta;
      const long double down = salmut::detail::smoothed_sigma<long double>(model, t);
      const double fd = static_cast<double>((up - down) / (2 * delta));
      const double rel = std::abs(grad[static_cast<std::size_t>(k)] - fd) /
                         std::max(std::abs(fd), std::abs(grad[static_cast<std::size_t>(k)]));
      worst = std::max(worst, rel);
    }
  }
  std::cout << "max relative error over " << count << " random interior points: " << worst
            << " (tolerance " << tol << ")\n";

  const salmut::SmoothedMaximizer mx = salmut::maximize_smoothed_sigma(model);
  std::cout << "smoothed maximizer: (";
  for (std::size_t k = 0; k < mx.tau.size(); ++k) std::cout << (k ? "," : "") << mx.tau[k];
  std::cout << "), sigma = " << mx.sigma << ", first-order gap = " << mx.optimality_gap << '\n';
  return worst < tol ? 0 : 1;
}

int cmd_learn(const CommonOpts& opts, salmut::ExperimentConfig cfg, const std::string& out_dir) {
  const salmut::ExperimentSummary summary = salmut::run_experiment(cfg, out_dir);
  std::cout << salmut::comparison_table(summary);
  if (!out_dir.empty()) std::cout << "traces and summary.json written under " << out_dir << '\n';
  (void)opts;
  return 0;
}

int cmd_compare(salmut::ExperimentConfig cfg, const std::string& out_dir, bool check) {
  const salmut::ExperimentSummary summary = salmut::compare(cfg, out_dir);
  std::cout << salmut::comparison_table(summary);
  if (!out_dir.empty()) std::cout << "traces and summary.json written under " << out_dir << '\n';
  if (!check) return 0;
  const salmut::CompareChecks checks = salmut::compare_checks(summary);
  if (checks.ok) {
    std::cout << "all comparison checks passed\n";
    return 0;
  }
  for (const std::string& f : checks.failures) std::cout << "check failed: " << f << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"threshold learning on event-driven admission-control models"};
  app.require_subcommand(1);

  CommonOpts solve_opts, scan_opts, grad_opts, learn_opts, compare_opts;
  std::string solve_out, scan_out, learn_out = "out", compare_out = "out";

  CLI::App* solve = app.add_subcommand("solve", "exact thresholds and gain by value iteration");
  add_common(solve, solve_opts);
  solve->add_option("--out", solve_out, "write the full result as JSON");

  CLI::App* scan = app.add_subcommand("scan", "average reward of every ordered integer policy");
  add_common(scan, scan_opts);
  scan->add_option("--out", scan_out, "CSV output path (stdout if omitted)");

  std::uint64_t grad_seed = 7;
  int grad_count = 20;
  double grad_delta = 1e-4, grad_tol = 1e-6;
  CLI::App* grad = app.add_subcommand("grad-check",
                                      "analytic gradient vs central finite differences");
  add_common(grad, grad_opts);
  grad->add_option("--seed", grad_seed, "seed for the random evaluation points");
  grad->add_option("--count", grad_count, "number of random points");
  grad->add_option("--delta", grad_delta, "finite-difference step");
  grad->add_option("--tol", grad_tol, "max relative error allowed");

  std::string learn_algorithm, learn_seeds;
  std::optional<std::uint64_t> learn_seed;
  std::optional<long long> learn_max_iter;
  std::optional<int> learn_stride;
  std::optional<bool> learn_g;
  CLI::App* learn = app.add_subcommand("learn", "run one learning algorithm over seeds");
  add_common(learn, learn_opts);
  learn->add_option("--algorithm", learn_algorithm, "salmut | qlearning | pds | all");
  learn->add_option("--seed", learn_seed, "single seed (overrides config seeds)");
  learn->add_option("--seeds", learn_seeds, "comma-separated seed list");
  learn->add_option("--max-iter", learn_max_iter, "iterations per run");
  learn->add_option("--stride", learn_stride, "trace record spacing");
  learn->add_flag("--include-g-term,!--no-include-g-term", learn_g,
                  "keep or drop the direct reward term in the threshold update");
  learn->add_option("--out", learn_out, "output directory")->capture_default_str();

  std::string compare_seeds;
  std::optional<long long> compare_max_iter;
  std::optional<int> compare_stride;
  bool compare_check = false;
  CLI::App* cmp = app.add_subcommand("compare", "all three algorithms side by side");
  add_common(cmp, compare_opts);
  cmp->add_option("--seeds", compare_seeds, "comma-separated seed list");
  cmp->add_option("--max-iter", compare_max_iter, "iterations per run");
  cmp->add_option("--stride", compare_stride, "trace record spacing");
  cmp->add_option("--out", compare_out, "output directory")->capture_default_str();
  cmp->add_flag("--check", compare_check, "verify the comparison table and set the exit code");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(solve_opts, solve_out);
    if (scan->parsed()) return cmd_scan(scan_opts, scan_out);
    if (grad->parsed())
      return cmd_grad_check(grad_opts, grad_seed, grad_count, grad_delta, grad_tol);
    if (learn->parsed()) {
      salmut::ExperimentConfig cfg = load_config(learn_opts);
      if (!learn_algorithm.empty()) cfg.algorithm = learn_algorithm;
      if (learn_seed) cfg.seeds = {*learn_seed};
      if (!learn_seeds.empty()) cfg.seeds = parse_seed_list(learn_seeds);
      if (learn_max_iter) cfg.max_iterations = *learn_max_iter;
      if (learn_stride) cfg.stride = *learn_stride;
      if (learn_g) cfg.include_g_term = *learn_g;
      return cmd_learn(learn_opts, cfg, learn_out);
    }
    if (cmp->parsed()) {
      salmut::ExperimentConfig cfg = load_config(compare_opts);
      if (!compare_seeds.empty()) cfg.seeds = parse_seed_list(compare_seeds);
      if (compare_max_iter) cfg.max_iterations = *compare_max_iter;
      if (compare_stride) cfg.stride = *compare_stride;
      return cmd_compare(cfg, compare_out, compare_check);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
