// SPDX-License-Identifier: Apache-2.0
#include "ttlearn/transcript.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "ttlearn/io.hpp"

namespace ttlearn {

Step& Transcript::append(std::string observation, std::string action, double reward) {
  Step s;
  s.index = steps.empty() ? 1 : steps.back().index + 1;
  s.observation = std::move(observation);
  s.action = std::move(action);
  s.reward = reward;
  s.cumulative_score = (steps.empty() ? 0.0 : steps.back().cumulative_score) + reward;
  steps.push_back(std::move(s));
  return steps.back();
}

double total_return(const Transcript& t) {
  double sum = 0.0;
  for (const auto& s : t.steps) sum += s.reward;
  return sum;
}

std::string format_reward(double reward) {
  char buf[64];
  if (std::floor(reward) == reward && std::fabs(reward) < 1e15) {
    std::snprintf(buf, sizeof buf, "%+lld", static_cast<long long>(reward));
  } else {
    std::snprintf(buf, sizeof buf, "%+.10g", reward);
  }
  return buf;
}

std::string render_history(const Transcript& t, int window) {
  if (window < 1) window = 1;
  const std::size_t n = t.steps.size();
  const std::size_t first = n > static_cast<std::size_t>(window) ? n - window : 0;
  std::string out;
  for (std::size_t i = first; i < n; ++i) {
    const auto& s = t.steps[i];
    if (!out.empty()) out += "\n\n";
    out += "[STEP " + std::to_string(s.index) + "]\n";
    out += "[OBS] " + s.observation + "\n";
    out += "[ACTION] " + s.action;
    if (s.reward != 0.0) out += "\n[REWARD] " + format_reward(s.reward);
  }
  return out;
}

std::string render_history(const Transcript& t) {
  return render_history(t, static_cast<int>(std::max<std::size_t>(1, t.steps.size())));
}

nlohmann::ordered_json to_json(const Step& step) {
  return {{"index", step.index},
          {"observation", step.observation},
          {"action", step.action},
          {"reward", step.reward},
          {"cumulative_score", step.cumulative_score}};
}

Step step_from_json(const nlohmann::json& j) {
  Step s;
  s.index = j.at("index").get<int>();
  s.observation = j.at("observation").get<std::string>();
  s.action = j.at("action").get<std::string>();
  s.reward = j.at("reward").get<double>();
  s.cumulative_score = j.at("cumulative_score").get<double>();
  return s;
}

std::string serialize_steps(const std::vector<Step>& steps) {
  std::string out;
  for (const auto& s : steps) {
    out += dump_json(to_json(s));
    out += '\n';
  }
  return out;
}

std::vector<Step> parse_steps(std::string_view jsonl) {
  std::vector<Step> steps;
  std::size_t line_no = 0;
  while (!jsonl.empty()) {
    auto nl = jsonl.find('\n');
    auto line = jsonl.substr(0, nl);
    jsonl = nl == std::string_view::npos ? std::string_view{} : jsonl.substr(nl + 1);
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw std::runtime_error("malformed transcript record at line " + std::to_string(line_no));
    }
    try {
      steps.push_back(step_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("bad transcript record at line " + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return steps;
}

}  // namespace ttlearn
