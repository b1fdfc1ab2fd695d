// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ttlearn/config.hpp"
#include "ttlearn/environment.hpp"
#include "ttlearn/llm.hpp"
#include "ttlearn/memory.hpp"
#include "ttlearn/transcript.hpp"

namespace ttlearn {

inline constexpr int kDefaultStepCap = 110;
inline constexpr std::string_view kFallbackAction = "look";
inline constexpr std::string_view kActionInstruction =
    "respond with exactly one game command on a single line.";

/// Everything the Actor is allowed to see for one episode. Frozen for the
/// whole episode.
struct ActorContext {
  AgenticConfig config;
  MemoryStore memory;
  int step_cap = kDefaultStepCap;
  int episode_index = 1;
};

ChatRequest assemble_prompt(const ActorContext& ctx, const Transcript& so_far,
                            std::string_view current_obs);

/// First non-empty line, unquoted, without an "action:" label, lowercased,
/// whitespace-collapsed and capped at 100 characters; "look" if empty.
std::string extract_action(std::string_view raw);

/// Thrown when the backend or environment fails mid-episode. Carries the
/// steps completed so far (terminated_early is set).
class EpisodeAborted : public std::runtime_error {
 public:
  EpisodeAborted(Transcript partial, const std::string& cause)
      : std::runtime_error(cause), partial_(std::move(partial)) {}
  const Transcript& partial() const noexcept { return partial_; }

 private:
  Transcript partial_;
};

using StepSink = std::function<void(const Step&)>;

/// Resets `env` and plays until done or the step cap. `on_step` sees every
/// step as soon as it completes.
Transcript play_episode(const ActorContext& ctx, Environment& env, LlmBackend& backend,
                        const StepSink& on_step = {});

}  // namespace ttlearn
