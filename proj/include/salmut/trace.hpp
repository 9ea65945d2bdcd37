#pragma once

#include <optional>
#include <string>
#include <vector>

#include "salmut/event_model.hpp"

namespace salmut {

struct TraceRecord {
  long long n = 0;
  double cum_a = 0.0;
  double rho_hat = 0.0;
  // learned thresholds for the threshold learner, greedy read-off
  // thresholds for the baselines
  numvec thresholds;
  int state = 0;
};

// CSV with header n,cum_a,rho_hat,<prefix>_1..<prefix>_N,state where the
// prefix is "tau" for learned thresholds and "greedy_tau" for derived ones.
void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& records,
                     const std::string& threshold_prefix, std::size_t num_classes);

std::vector<TraceRecord> read_trace_csv(const std::string& path);

// First iteration n at which the running average-reward estimate has
// settled: over the trailing records spanning at least `window` in
// cumulative-step-size units (or `window` records when window_in_records
// is set), min/max of rho_hat exceeds zeta. The first `burn_in` records
// are ignored entirely. Returns nothing if the trace never settles or is
// too short.
std::optional<long long> practical_convergence_index(const std::vector<TraceRecord>& trace,
                                                     double window, double zeta,
                                                     int burn_in = 10,
                                                     bool window_in_records = false);

}  // namespace salmut
