// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ttlearn {

class MetricsError : public std::invalid_argument {
 public:
  enum class Kind { InvalidRmax, EmptySession };
  MetricsError(Kind kind, const std::string& what) : std::invalid_argument(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// sum(returns) / (K * r_max). Negative returns are allowed.
double compute_auc(std::span<const double> returns, double r_max);

struct SessionMetrics {
  std::vector<double> returns;
  double r_max = 1.0;
  int k = 0;
  double auc = 0.0;
  std::vector<double> best_so_far;
};

SessionMetrics make_metrics(std::vector<double> returns, double r_max);

/// "episode,return,best_so_far,cumulative_auc", fixed six-decimal formatting.
std::string render_curve(const SessionMetrics& m);
/// Atomic write of render_curve(m). Throws std::runtime_error on I/O failure.
void export_curve(const SessionMetrics& m, const std::filesystem::path& path);

}  // namespace ttlearn
