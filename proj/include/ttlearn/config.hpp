// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace ttlearn {

using ConfigId = std::string;

/// Inference-side knobs of an agent configuration.
struct Hyperparams {
  double temperature = 0.7;
  int max_action_tokens = 32;
  int history_window = 8;  // recent steps shown to the Actor

  static constexpr double kMinTemperature = 0.0;
  static constexpr double kMaxTemperature = 2.0;
  static constexpr int kMaxActionTokens = 4096;
  static constexpr int kMaxHistoryWindow = 110;

  bool valid() const noexcept;
  bool operator==(const Hyperparams&) const = default;
};

/// Partial hyperparameter update; absent fields are left untouched.
struct HyperChanges {
  std::optional<double> temperature;
  std::optional<int> max_action_tokens;
  std::optional<int> history_window;

  bool empty() const noexcept {
    return !temperature && !max_action_tokens && !history_window;
  }
  bool operator==(const HyperChanges&) const = default;
};

/// Discipline level of the memory-interaction sentence. Ordered.
enum class MemoryRuleStage { Hint = 0, Strategy = 1, Rule = 2 };

std::string_view to_string(MemoryRuleStage stage);
MemoryRuleStage stage_from_string(std::string_view name);
/// Recognizes a "Hint:" / "Strategy:" / "Rule:" prefix.
std::optional<MemoryRuleStage> infer_stage(std::string_view sentence);

struct MilestoneRule {
  std::string pattern;
  std::string milestone;
  bool operator==(const MilestoneRule&) const = default;
};

/// Declarative state abstraction: substring pattern -> milestone line.
struct MilestoneExtractor {
  std::vector<MilestoneRule> rules;
  bool operator==(const MilestoneExtractor&) const = default;
};

inline constexpr std::string_view kNoMilestones = "no milestones yet";
inline constexpr std::string_view kDefaultMemoryRule =
    "Hint: When a room looks familiar, look up what earned points there before.";

struct ToolUseRoutines {
  std::string memory_rule{kDefaultMemoryRule};
  MemoryRuleStage memory_rule_stage = MemoryRuleStage::Hint;
  MilestoneExtractor extractor;
  bool operator==(const ToolUseRoutines&) const = default;
};

/// The per-episode agent configuration. Memory is session-scoped and not
/// stored here.
struct AgenticConfig {
  ConfigId config_id;
  std::optional<ConfigId> parent_id;
  int episode_created = 0;
  std::string policy_prompt;
  Hyperparams hyperparams;
  ToolUseRoutines tool_use;

  bool operator==(const AgenticConfig&) const = default;
};

struct MemoryRuleChange {
  MemoryRuleStage stage = MemoryRuleStage::Hint;
  std::string sentence;
  bool operator==(const MemoryRuleChange&) const = default;
};

/// The four mutation operators expressed as data. All fields empty means
/// the identity mutation.
struct MutationBundle {
  std::optional<std::string> new_prompt;
  std::optional<HyperChanges> hyper_changes;
  std::optional<std::vector<MilestoneRule>> new_extractor_rules;
  std::optional<MemoryRuleChange> new_memory_rule;

  bool is_identity() const noexcept {
    return !new_prompt && !hyper_changes && !new_extractor_rules && !new_memory_rule;
  }
};

class InvalidMutation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// "cfg-{episode:03}-{ordinal:02}".
ConfigId make_config_id(int episode, int ordinal);

AgenticConfig make_initial_config(std::string policy_prompt);

/// Returns a new config with fresh id and lineage; the parent is untouched.
/// Throws InvalidMutation when a mutated field violates its invariant.
AgenticConfig derive_child(const AgenticConfig& parent, const MutationBundle& mutation,
                           int episode, int ordinal);

/// Newline-joined milestones of every rule whose pattern occurs in
/// `full_history`, in rule order; "no milestones yet" when none match.
std::string apply_milestones(const MilestoneExtractor& extractor, std::string_view full_history);

nlohmann::ordered_json to_json(const AgenticConfig& config);
AgenticConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const HyperChanges& changes);
nlohmann::ordered_json rules_to_json(const std::vector<MilestoneRule>& rules);

}  // namespace ttlearn
