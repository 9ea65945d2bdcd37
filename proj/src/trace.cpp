#include "salmut/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace salmut {

void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& records,
                     const std::string& threshold_prefix, std::size_t num_classes) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trace file for writing: " + path);
  out << "n,cum_a,rho_hat";
  for (std::size_t k = 1; k <= num_classes; ++k) out << ',' << threshold_prefix << '_' << k;
  out << ",state\n";
  out << std::setprecision(17);
  for (const TraceRecord& r : records) {
    if (r.thresholds.size() != num_classes)
      throw std::invalid_argument("write_trace_csv: record with wrong threshold count");
    out << r.n << ',' << r.cum_a << ',' << r.rho_hat;
    for (double t : r.thresholds) out << ',' << t;
    out << ',' << r.state << '\n';
  }
  if (!out) throw std::runtime_error("failed while writing trace file: " + path);
}

std::vector<TraceRecord> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty trace file: " + path);
  std::size_t columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 4) throw std::runtime_error("malformed trace header: " + path);
  const std::size_t num_classes = columns - 4;

  std::vector<TraceRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    TraceRecord r;
    auto next = [&]() {
      if (!std::getline(ss, cell, ',')) throw std::runtime_error("short trace row: " + path);
      return cell;
    };
    r.n = std::stoll(next());
    r.cum_a = std::stod(next());
    r.rho_hat = std::stod(next());
    for (std::size_t k = 0; k < num_classes; ++k) r.thresholds.push_back(std::stod(next()));
    r.state = std::stoi(next());
    out.push_back(std::move(r));
  }
  return out;
}

std::optional<long long> practical_convergence_index(const std::vector<TraceRecord>& trace,
                                                     double window, double zeta, int burn_in,
                                                     bool window_in_records) {
  if (!(window > 0.0)) throw std::invalid_argument("practical_convergence_index: window must be positive");
  if (!(zeta > 0.0 && zeta < 1.0))
    throw std::invalid_argument("practical_convergence_index: zeta must lie in (0, 1)");
  if (burn_in < 0) throw std::invalid_argument("practical_convergence_index: negative burn-in");

  const std::size_t first = static_cast<std::size_t>(burn_in);
  if (trace.size() <= first) return std::nullopt;

  for (std::size_t j = first; j < trace.size(); ++j) {
    // smallest trailing stretch [i..j] that covers the window
    std::size_t i = j + 1;
    if (window_in_records) {
      const std::size_t need = static_cast<std::size_t>(std::ceil(window));
      if (j + 1 - first < need) continue;
      i = j + 1 - need;
    } else {
      for (std::size_t cand = j;; --cand) {
        if (trace[j].cum_a - trace[cand].cum_a >= window) {
          i = cand;
          break;
        }
        if (cand == first) break;
      }
      if (i > j) continue;  // not enough cumulative step mass yet
    }
    double lo = trace[i].rho_hat;
    double hi = lo;
    for (std::size_t t = i + 1; t <= j; ++t) {
      lo = std::min(lo, trace[t].rho_hat);
      hi = std::max(hi, trace[t].rho_hat);
    }
    if (hi > 0.0 && lo / hi > zeta) return trace[j].n;
  }
  return std::nullopt;
}

}  // namespace salmut
