#include "perturbode/trace.hpp"

#include "perturbode/objective.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace perturbode {

std::string to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::tolerance_met:
      return "tolerance_met";
    case TerminationReason::max_iters:
      return "max_iters";
    case TerminationReason::diverged:
      return "diverged";
  }
  return "unknown";
}

std::string trace_csv(const IterateTrace& trace) {
  std::string out = "k,f_gap,grad_norm,lyapunov,bound\n";
  char buf[160];
  for (const auto& row : trace.rows) {
    std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g,%.17g\n", row.k, row.f_gap,
                  row.grad_norm, row.lyapunov, row.bound);
    out += buf;
  }
  return out;
}

void write_trace_csv(const IterateTrace& trace, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw UsageError("cannot open " + path + " for writing");
  }
  file << trace_csv(trace);
}

RateFit fit_rate(const IterateTrace& trace, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw UsageError("fit_rate: tail_fraction must be in (0, 1]");
  }
  const std::size_t n = trace.rows.size();
  const std::size_t start = static_cast<std::size_t>(std::floor(n * (1.0 - tail_fraction)));
  std::vector<double> ks;
  std::vector<double> logs;
  for (std::size_t i = start; i < n; ++i) {
    if (trace.rows[i].f_gap > 0.0) {
      ks.push_back(static_cast<double>(trace.rows[i].k));
      logs.push_back(std::log(trace.rows[i].f_gap));
    }
  }
  if (ks.size() < 20) {
    throw NumericalError("fit_rate: fewer than 20 usable tail rows",
                         static_cast<double>(ks.size()));
  }
  double mean_k = 0.0, mean_l = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    mean_k += ks[i];
    mean_l += logs[i];
  }
  mean_k /= ks.size();
  mean_l /= ks.size();
  double skk = 0.0, skl = 0.0, sll = 0.0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const double dk = ks[i] - mean_k;
    const double dl = logs[i] - mean_l;
    skk += dk * dk;
    skl += dk * dl;
    sll += dl * dl;
  }
  RateFit fit;
  const double slope = skl / skk;
  fit.rate = std::exp(slope);
  fit.r_squared = sll > 0.0 ? (skl * skl) / (skk * sll) : 1.0;
  return fit;
}

long oscillation_count(const IterateTrace& trace) {
  if (trace.rows.size() < 2) {
    throw UsageError("oscillation_count: need at least 2 rows");
  }
  const double threshold = 1e-14 * (1.0 + trace.rows.front().f_gap);
  long count = 0;
  double previous = 0.0;
  for (std::size_t i = 1; i < trace.rows.size(); ++i) {
    const double diff = trace.rows[i].f_gap - trace.rows[i - 1].f_gap;
    if (std::abs(diff) <= threshold) {
      continue;
    }
    if (previous != 0.0 && diff * previous < 0.0) {
      ++count;
    }
    previous = diff;
  }
  return count;
}

}  // namespace perturbode
