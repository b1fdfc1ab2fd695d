// SPDX-License-Identifier: Apache-2.0
#include "ttlearn/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

namespace ttlearn {

bool Hyperparams::valid() const noexcept {
  return temperature >= kMinTemperature && temperature <= kMaxTemperature &&
         max_action_tokens > 0 && history_window >= 1;
}

std::string_view to_string(MemoryRuleStage stage) {
  switch (stage) {
    case MemoryRuleStage::Hint: return "hint";
    case MemoryRuleStage::Strategy: return "strategy";
    case MemoryRuleStage::Rule: return "rule";
  }
  return "hint";
}

MemoryRuleStage stage_from_string(std::string_view name) {
  if (name == "hint") return MemoryRuleStage::Hint;
  if (name == "strategy") return MemoryRuleStage::Strategy;
  if (name == "rule") return MemoryRuleStage::Rule;
  throw std::invalid_argument("unknown memory rule stage: " + std::string(name));
}

std::optional<MemoryRuleStage> infer_stage(std::string_view sentence) {
  auto pos = sentence.find_first_not_of(" \t*\"'");
  if (pos == std::string_view::npos) return std::nullopt;
  sentence.remove_prefix(pos);
  auto starts_with_ci = [&](std::string_view prefix) {
    if (sentence.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      if (std::tolower(static_cast<unsigned char>(sentence[i])) != prefix[i]) return false;
    }
    return true;
  };
  if (starts_with_ci("rule:")) return MemoryRuleStage::Rule;
  if (starts_with_ci("strategy:")) return MemoryRuleStage::Strategy;
  if (starts_with_ci("hint:")) return MemoryRuleStage::Hint;
  return std::nullopt;
}

ConfigId make_config_id(int episode, int ordinal) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "cfg-%03d-%02d", episode, ordinal);
  return buf;
}

AgenticConfig make_initial_config(std::string policy_prompt) {
  if (policy_prompt.empty()) throw InvalidMutation("policy prompt must be non-empty");
  AgenticConfig config;
  config.config_id = make_config_id(0, 0);
  config.policy_prompt = std::move(policy_prompt);
  return config;
}

AgenticConfig derive_child(const AgenticConfig& parent, const MutationBundle& mutation,
                           int episode, int ordinal) {
  AgenticConfig child = parent;
  child.config_id = make_config_id(episode, ordinal);
  child.parent_id = parent.config_id;
  child.episode_created = episode;

  if (mutation.new_prompt) {
    if (mutation.new_prompt->empty()) throw InvalidMutation("policy prompt must be non-empty");
    child.policy_prompt = *mutation.new_prompt;
  }
  if (mutation.hyper_changes) {
    const auto& h = *mutation.hyper_changes;
    if (h.temperature) child.hyperparams.temperature = *h.temperature;
    if (h.max_action_tokens) child.hyperparams.max_action_tokens = *h.max_action_tokens;
    if (h.history_window) child.hyperparams.history_window = *h.history_window;
    if (!child.hyperparams.valid()) throw InvalidMutation("hyperparameters out of range");
  }
  if (mutation.new_extractor_rules) {
    for (const auto& rule : *mutation.new_extractor_rules) {
      if (rule.pattern.empty() || rule.milestone.empty()) {
        throw InvalidMutation("milestone rules need a non-empty pattern and milestone");
      }
    }
    child.tool_use.extractor.rules = *mutation.new_extractor_rules;
  }
  if (mutation.new_memory_rule) {
    if (mutation.new_memory_rule->sentence.empty()) {
      throw InvalidMutation("memory rule sentence must be non-empty");
    }
    child.tool_use.memory_rule = mutation.new_memory_rule->sentence;
    child.tool_use.memory_rule_stage = mutation.new_memory_rule->stage;
  }
  return child;
}

std::string apply_milestones(const MilestoneExtractor& extractor, std::string_view full_history) {
  std::string out;
  if (!full_history.empty()) {
    for (const auto& rule : extractor.rules) {
      if (rule.pattern.empty() || full_history.find(rule.pattern) == std::string_view::npos) {
        continue;
      }
      if (!out.empty()) out += '\n';
      out += rule.milestone;
    }
  }
  if (out.empty()) out = kNoMilestones;
  return out;
}

nlohmann::ordered_json rules_to_json(const std::vector<MilestoneRule>& rules) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rules) arr.push_back({{"pattern", r.pattern}, {"milestone", r.milestone}});
  return arr;
}

nlohmann::ordered_json to_json(const HyperChanges& changes) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  if (changes.temperature) j["temperature"] = *changes.temperature;
  if (changes.max_action_tokens) j["max_action_tokens"] = *changes.max_action_tokens;
  if (changes.history_window) j["history_window"] = *changes.history_window;
  return j;
}

nlohmann::ordered_json to_json(const AgenticConfig& config) {
  nlohmann::ordered_json j;
  j["config_id"] = config.config_id;
  j["parent_id"] = config.parent_id ? nlohmann::ordered_json(*config.parent_id) : nlohmann::ordered_json(nullptr);
  j["episode_created"] = config.episode_created;
  j["policy_prompt"] = config.policy_prompt;
  j["hyperparams"] = {{"temperature", config.hyperparams.temperature},
                      {"max_action_tokens", config.hyperparams.max_action_tokens},
                      {"history_window", config.hyperparams.history_window}};
  j["tool_use"] = {{"memory_rule", config.tool_use.memory_rule},
                   {"memory_rule_stage", to_string(config.tool_use.memory_rule_stage)},
                   {"extractor", rules_to_json(config.tool_use.extractor.rules)}};
  return j;
}

AgenticConfig config_from_json(const nlohmann::json& j) {
  AgenticConfig c;
  c.config_id = j.at("config_id").get<std::string>();
  if (!j.at("parent_id").is_null()) c.parent_id = j.at("parent_id").get<std::string>();
  c.episode_created = j.at("episode_created").get<int>();
  c.policy_prompt = j.at("policy_prompt").get<std::string>();
  const auto& h = j.at("hyperparams");
  c.hyperparams.temperature = h.at("temperature").get<double>();
  c.hyperparams.max_action_tokens = h.at("max_action_tokens").get<int>();
  c.hyperparams.history_window = h.at("history_window").get<int>();
  const auto& u = j.at("tool_use");
  c.tool_use.memory_rule = u.at("memory_rule").get<std::string>();
  c.tool_use.memory_rule_stage = stage_from_string(u.at("memory_rule_stage").get<std::string>());
  for (const auto& r : u.at("extractor")) {
    c.tool_use.extractor.rules.push_back(
        {r.at("pattern").get<std::string>(), r.at("milestone").get<std::string>()});
  }
  return c;
}

}  // namespace ttlearn
