// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttlearn/config.hpp"

namespace ttlearn {

class BanditError : public std::runtime_error {
 public:
  enum class Kind { UnknownConfig, EmptyPool, NoEpisodes, DuplicateConfig };
  BanditError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct CandidateStats {
  ConfigId config_id;
  std::optional<ConfigId> parent_id;
  int visits = 0;
  double sum_return = 0.0;
  double mean_return = 0.0;  // meaningful only when visits >= 1

  bool operator==(const CandidateStats&) const = default;
};

/// UCB selection state over every configuration registered in a session.
///
/// score(c) = mean(c) + beta * sqrt(ln N / (1 + n(c)))
///
/// N is the session-wide number of completed episodes. An unvisited
/// candidate borrows its parent's empirical mean (0 when the parent is
/// unvisited or absent), so a fresh child of a good parent wins exactly on
/// its exploration bonus and the parent is reselected once the child
/// underperforms.
class BanditState {
 public:
  explicit BanditState(double beta = 1.0);

  void register_config(const ConfigId& id, std::optional<ConfigId> parent_id = std::nullopt);
  bool contains(const ConfigId& id) const;

  void record_result(const ConfigId& id, double episode_return);

  /// Requires total_episodes() >= 1.
  double ucb_score(const ConfigId& id) const;
  /// Empirical mean, or the inherited prior for an unvisited config.
  double prior_or_mean(const ConfigId& id) const;

  /// Highest score; ties go to fewer visits, then earlier registration.
  ConfigId select_next(std::span<const ConfigId> pool) const;

  const CandidateStats& stats(const ConfigId& id) const;
  /// Registration order.
  const std::vector<ConfigId>& order() const noexcept { return order_; }
  int total_episodes() const noexcept { return total_episodes_; }
  double beta() const noexcept { return beta_; }

  nlohmann::ordered_json to_json() const;
  /// Throws std::runtime_error if N != sum of visits or a mean disagrees.
  static BanditState from_json(const nlohmann::json& j);

  bool operator==(const BanditState&) const = default;

 private:
  std::size_t position(const ConfigId& id) const;

  double beta_;
  int total_episodes_ = 0;
  std::vector<ConfigId> order_;
  std::unordered_map<ConfigId, std::size_t> index_;
  std::vector<CandidateStats> stats_;
};

}  // namespace ttlearn
