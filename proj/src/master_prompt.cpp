// SPDX-License-Identifier: Apache-2.0
#include "ttlearn/evolver.hpp"

namespace ttlearn {

namespace {

constexpr std::string_view kTemplate = R"(You tune the configuration of a text-adventure agent between games. Read the transcript of its last game and write a revised configuration for the next attempt at the same game, aiming for a higher score.

A configuration has four pieces:
1. Policy prompt: the agent's standing strategy, in plain text.
2. Memory updates: records for the database of state/action pairs that earned points.
3. Hyperparameters: currently the sampling temperature of the agent.
4. Tool use: milestone rules that summarize progress, and one sentence on how the agent consults its memory.

Policy prompt used in the last game (treat it as a draft, not as ground truth):
"{cur_prompt}"

Transcript of the last game:
--- GAME HISTORY START ---
{cur_history_str}
--- GAME HISTORY END ---
{negative_section}

PART 1: Policy prompt.
Write the complete new prompt with these sections:
- Walkthrough: the ordered commands that scored points or were needed to get further, using the exact command wording that the game accepted.
- Actions to Avoid: commands that wasted turns, looped, or kept producing errors.
- Exploration Plan (only if the game was not won): rooms and objects not yet fully tried, and a methodical routine to follow after the walkthrough runs out.

PART 2: Memory updates.
A JSON array with one object per transcript step whose score went up:
- "state_text": the complete observation shown just before the command,
- "action": the command that was sent,
- "score_delta": the number of points it earned (positive).
Answer [] when nothing scored.
Example:
[
  {"state_text": "<< closet >>\nyou are in a cramped supply closet. ...", "action": "take key", "score_delta": 10}
]

PART 3: Hyperparameters.
A JSON object. Raise "temperature" if the agent repeated itself or stalled; lower it if the agent wandered away from a plan that was working; answer {} to keep the current settings.
Example: {"temperature": 0.4}

PART 4: Tool use.
4a. Milestone rules: a JSON array wrapped in <rules></rules>. Each entry is {"pattern": ..., "milestone": ...}; whenever `pattern` appears in the game output, the agent sees `milestone` as reached.
- Patterns must be short lowercase strings copied from the game's output, never from the agent's commands.
- Milestones are short sentences such as "Milestone: Opened the vault."
4b. Memory sentence: one line telling the agent how to use its success memory. Tighten it as evidence accumulates, moving from a "Hint: ..." (optional suggestion) to a "Strategy: ..." (consult memory in familiar rooms) and finally to a "Rule: ..." (always check memory before acting and follow it).

Reply in exactly this layout and add nothing else:

[new policy prompt]
[JSON array of memory updates]
[JSON object of hyperparameter changes]
<rules>
[{"pattern": "[text from the game output]", "milestone": "[short milestone]"}]
</rules>
[one-line memory sentence]
)";

void substitute(std::string_view tmpl, std::string_view key, std::string_view value,
                std::size_t& cursor, std::string& out) {
  const auto pos = tmpl.find(key, cursor);
  out.append(tmpl.substr(cursor, pos - cursor));
  out.append(value);
  cursor = pos + key.size();
}

}  // namespace

std::string_view master_prompt_template() { return kTemplate; }

std::string render_negative_section(const std::vector<FailurePattern>& failures) {
  if (failures.empty()) return {};
  std::string out = "\nUnproductive actions detected so far (the agent should avoid these):\n";
  for (const auto& f : failures) {
    std::string state = f.state_text;
    if (state.size() > 160) state = state.substr(0, 160) + " ...";
    out += "- In \"" + state + "\", the action \"" + f.action + "\" ";
    out += f.kind == FailureKind::NoOpAction
               ? "did not change the state or the score.\n"
               : "was repeated " + std::to_string(kRepeatLoopThreshold) + " or more times.\n";
  }
  return out;
}

ChatRequest render_master_prompt(std::string_view cur_prompt, const Transcript& t,
                                 const std::vector<FailurePattern>& failures) {
  std::string text;
  std::size_t cursor = 0;
  substitute(kTemplate, "{cur_prompt}", cur_prompt, cursor, text);
  substitute(kTemplate, "{cur_history_str}", render_history(t), cursor, text);
  substitute(kTemplate, "{negative_section}", render_negative_section(failures), cursor, text);
  text.append(kTemplate.substr(cursor));

  ChatRequest req;
  req.user = std::move(text);
  req.temperature = kEvolverTemperature;
  req.max_tokens = kEvolverMaxTokens;
  req.tag = Tag::Evolver;
  return req;
}

}  // namespace ttlearn
