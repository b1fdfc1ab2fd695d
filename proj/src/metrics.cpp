// SPDX-License-Identifier: Apache-2.0
#include "ttlearn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ttlearn/io.hpp"

namespace ttlearn {

double compute_auc(std::span<const double> returns, double r_max) {
  if (!(r_max > 0.0) || !std::isfinite(r_max)) {
    throw MetricsError(MetricsError::Kind::InvalidRmax, "r_max must be positive");
  }
  if (returns.empty()) throw MetricsError(MetricsError::Kind::EmptySession, "no episodes");
  double sum = 0.0;
  for (double r : returns) sum += r;
  return sum / (static_cast<double>(returns.size()) * r_max);
}

SessionMetrics make_metrics(std::vector<double> returns, double r_max) {
  SessionMetrics m;
  m.auc = compute_auc(returns, r_max);
  m.r_max = r_max;
  m.k = static_cast<int>(returns.size());
  double best = returns.front();
  for (double r : returns) {
    best = std::max(best, r);
    m.best_so_far.push_back(best);
  }
  m.returns = std::move(returns);
  return m;
}

std::string render_curve(const SessionMetrics& m) {
  std::string out = "episode,return,best_so_far,cumulative_auc\n";
  double sum = 0.0;
  char row[160];
  for (std::size_t i = 0; i < m.returns.size(); ++i) {
    sum += m.returns[i];
    const double cumulative = sum / (static_cast<double>(i + 1) * m.r_max);
    std::snprintf(row, sizeof row, "%zu,%.6f,%.6f,%.6f\n", i + 1, m.returns[i], m.best_so_far[i],
                  cumulative);
    out += row;
  }
  return out;
}

void export_curve(const SessionMetrics& m, const std::filesystem::path& path) {
  write_file_atomic(path, render_curve(m));
}

}  // namespace ttlearn
