// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttlearn/config.hpp"

namespace ttlearn {

/// One interaction: the observation the agent saw, the action it issued and
/// the score change that action produced.
struct Step {
  int index = 1;
  std::string observation;
  std::string action;
  double reward = 0.0;
  double cumulative_score = 0.0;

  bool operator==(const Step&) const = default;
};

struct Transcript {
  int episode_index = 1;
  ConfigId config_id;
  std::vector<Step> steps;
  bool terminated_early = false;
  double max_score = 1.0;

  /// Appends a step, assigning index and cumulative score.
  Step& append(std::string observation, std::string action, double reward);

  bool operator==(const Transcript&) const = default;
};

double total_return(const Transcript& t);

/// Renders the last `window` steps in the "[STEP k] / [OBS] / [ACTION] /
/// [REWARD]" frame. Zero-reward steps carry no [REWARD] line. Windows
/// below 1 are treated as 1.
std::string render_history(const Transcript& t, int window);
/// Full-history rendering.
std::string render_history(const Transcript& t);

/// "+10", "-5", "2.5": integral values without decimals, sign always shown.
std::string format_reward(double reward);

nlohmann::ordered_json to_json(const Step& step);
Step step_from_json(const nlohmann::json& j);

/// One record per line, newline-terminated.
std::string serialize_steps(const std::vector<Step>& steps);
/// Throws std::runtime_error on a malformed line.
std::vector<Step> parse_steps(std::string_view jsonl);

}  // namespace ttlearn
