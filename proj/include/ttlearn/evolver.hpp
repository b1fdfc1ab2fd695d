// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttlearn/config.hpp"
#include "ttlearn/llm.hpp"
#include "ttlearn/memory.hpp"
#include "ttlearn/transcript.hpp"

namespace ttlearn {

inline constexpr int kDefaultChildren = 3;
inline constexpr double kEvolverTemperature = 1.0;
inline constexpr int kEvolverMaxTokens = 4096;

struct MemoryUpdate {
  std::string state_text;
  std::string action;
  double score_delta = 0.0;
  bool operator==(const MemoryUpdate&) const = default;
};

/// The four parts of an Evolver reply. Absent parts mean "no change".
struct EvolverResponse {
  std::optional<std::string> part1_prompt;
  std::optional<std::vector<MemoryUpdate>> part2_memory_updates;
  std::optional<nlohmann::json> part3_hypers;  // always an object when present
  std::optional<std::vector<MilestoneRule>> part4_extractor;
  std::optional<std::string> part4_memory_sentence;
  std::optional<std::string> code_block;  // raw <code> body, never executed here
  std::string raw;
  bool degraded = false;
  std::vector<std::string> warnings;
};

/// The master-prompt template. Placeholders: {cur_prompt},
/// {cur_history_str}, {negative_section}.
std::string_view master_prompt_template();

/// Empty when there are no failures.
std::string render_negative_section(const std::vector<FailurePattern>& failures);

ChatRequest render_master_prompt(std::string_view cur_prompt, const Transcript& t,
                                 const std::vector<FailurePattern>& failures);

/// Never throws. Unrecoverable parts are left absent and noted in
/// `warnings`; a reply with nothing usable is flagged degraded.
EvolverResponse parse_response(std::string_view raw);

/// Canonical text form accepted by parse_response.
std::string render_response(const EvolverResponse& resp);

nlohmann::ordered_json to_json(const EvolverResponse& resp);

/// Converts a part-3 object into validated changes, clamping out-of-range
/// values and recording a warning for each adjustment.
HyperChanges hyper_changes_from_json(const nlohmann::json& obj, std::vector<std::string>& warnings);

/// Child k (1-based) applies pattern (k-1) % 3: full bundle, prompt only,
/// hyperparameters plus tool use.
std::vector<AgenticConfig> spawn_children(const AgenticConfig& parent,
                                          const EvolverResponse& resp, int m, int episode,
                                          std::vector<std::string>* warnings = nullptr);

/// Splits Evolver memory suggestions into entries confirmed by a positively
/// rewarded transcript step and rejections (one message each).
std::vector<SuccessEntry> validate_memory_updates(const std::vector<MemoryUpdate>& updates,
                                                  const Transcript& t,
                                                  std::vector<std::string>& rejections);

struct EvolveResult {
  std::vector<AgenticConfig> children;
  MemoryStore memory;
  EvolverResponse response;
  std::vector<std::string> warnings;
};

/// One Evolver call: mine the transcript into memory, ask the backend for a
/// new configuration and spawn `m` children. Backend failure yields no
/// children but keeps the mined memory.
EvolveResult evolve(const AgenticConfig& parent, const Transcript& t, const MemoryStore& memory,
                    LlmBackend& backend, int m);

}  // namespace ttlearn
