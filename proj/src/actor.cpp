// SPDX-License-Identifier: Apache-2.0
#include "ttlearn/actor.hpp"

#include <algorithm>
#include <cctype>

namespace ttlearn {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string_view strip_quotes(std::string_view s) {
  constexpr std::string_view kQuotes = "`\"'";
  while (!s.empty() && kQuotes.find(s.front()) != std::string_view::npos) s.remove_prefix(1);
  while (!s.empty() && kQuotes.find(s.back()) != std::string_view::npos) s.remove_suffix(1);
  return trim(s);
}

}  // namespace

ChatRequest assemble_prompt(const ActorContext& ctx, const Transcript& so_far,
                            std::string_view current_obs) {
  const auto& cfg = ctx.config;
  ChatRequest req;
  req.system = cfg.policy_prompt + "\n\n" + cfg.tool_use.memory_rule;

  std::string full_history = render_history(so_far);
  if (!full_history.empty()) full_history += "\n\n";
  full_history += "[OBS] ";
  full_history += current_obs;

  std::string user = "Milestones:\n" + apply_milestones(cfg.tool_use.extractor, full_history);
  if (auto hint = lookup_hint(ctx.memory, current_obs)) user += "\n\n" + *hint;
  user += "\n\nRecent history:\n";
  user += so_far.steps.empty() ? std::string("(no steps yet)")
                               : render_history(so_far, cfg.hyperparams.history_window);
  user += "\n\nCurrent observation:\n";
  user += current_obs;
  user += "\n\n";
  user += kActionInstruction;

  req.user = std::move(user);
  req.temperature = cfg.hyperparams.temperature;
  req.max_tokens = cfg.hyperparams.max_action_tokens;
  req.tag = Tag::Actor;
  return req;
}

std::string extract_action(std::string_view raw) {
  std::string_view line;
  while (!raw.empty()) {
    const auto nl = raw.find('\n');
    line = trim(raw.substr(0, nl));
    raw = nl == std::string_view::npos ? std::string_view{} : raw.substr(nl + 1);
    if (!strip_quotes(line).empty()) break;
    line = {};
  }
  line = strip_quotes(line);
  constexpr std::string_view kLabel = "action:";
  if (line.size() >= kLabel.size() &&
      std::equal(kLabel.begin(), kLabel.end(), line.begin(),
                 [](char a, char b) { return a == std::tolower(static_cast<unsigned char>(b)); })) {
    line = strip_quotes(line.substr(kLabel.size()));
  }

  std::string out;
  bool pending_space = false;
  for (unsigned char c : line) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(c));
  }
  if (out.size() > 100) out.resize(100);
  while (!out.empty() && out.back() == ' ') out.pop_back();
  if (out.empty()) out = kFallbackAction;
  return out;
}

Transcript play_episode(const ActorContext& ctx, Environment& env, LlmBackend& backend,
                        const StepSink& on_step) {
  Transcript t;
  t.episode_index = ctx.episode_index;
  t.config_id = ctx.config.config_id;
  try {
    EnvObservation obs = env.reset();
    t.max_score = obs.max_score;
    while (!obs.done && static_cast<int>(t.steps.size()) < ctx.step_cap) {
      const ChatRequest req = assemble_prompt(ctx, t, obs.text);
      const std::string action = extract_action(backend.complete(req));
      EnvObservation next = env.step(action);
      const Step& s = t.append(obs.text, action, next.reward);
      if (on_step) on_step(s);
      obs = std::move(next);
    }
  } catch (const std::exception& e) {
    t.terminated_early = true;
    throw EpisodeAborted(std::move(t), e.what());
  }
  return t;
}

}  // namespace ttlearn
