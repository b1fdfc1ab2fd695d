// SPDX-License-Identifier: Apache-2.0
#include "ttlearn/evolver.hpp"

#include <algorithm>
#include <cmath>

#include "ttlearn/actor.hpp"

namespace ttlearn {

namespace {

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;  // one past the last byte
  bool contains(std::size_t pos) const { return pos >= begin && pos < end; }
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

/// Tag-delimited block, e.g. <rules>...</rules>: span covers both tags.
std::optional<Span> find_block(std::string_view text, std::string_view name, std::string_view& body) {
  const std::string open = "<" + std::string(name) + ">";
  const std::string close = "</" + std::string(name) + ">";
  const auto b = text.find(open);
  if (b == std::string_view::npos) return std::nullopt;
  const auto e = text.find(close, b + open.size());
  if (e == std::string_view::npos) return std::nullopt;
  body = text.substr(b + open.size(), e - b - open.size());
  return Span{b, e + close.size()};
}

/// Index one past the bracket closing the one at `open_pos`, honoring JSON
/// string literals; npos when unbalanced.
std::size_t match_bracket(std::string_view text, std::size_t open_pos) {
  const char open = text[open_pos];
  const char close = open == '[' ? ']' : '}';
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open_pos; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[' || c == '{') {
      ++depth;
    } else if (c == ']' || c == '}') {
      --depth;
      if (depth == 0) return c == close ? i + 1 : std::string_view::npos;
    }
  }
  return std::string_view::npos;
}

bool masked(std::size_t pos, const std::vector<Span>& masks) {
  return std::any_of(masks.begin(), masks.end(), [&](const Span& s) { return s.contains(pos); });
}

/// First balanced JSON value opening with `open` at or after `from` that
/// satisfies `accept`.
template <typename Accept>
std::optional<std::pair<Span, nlohmann::json>> scan_json(std::string_view text, std::size_t from,
                                                         char open, const std::vector<Span>& masks,
                                                         Accept accept) {
  for (std::size_t pos = text.find(open, from); pos != std::string_view::npos;
       pos = text.find(open, pos + 1)) {
    if (masked(pos, masks)) continue;
    const auto end = match_bracket(text, pos);
    if (end == std::string_view::npos) continue;
    auto j = nlohmann::json::parse(text.substr(pos, end - pos), nullptr, false);
    if (j.is_discarded() || !accept(j)) continue;
    return std::make_pair(Span{pos, end}, std::move(j));
  }
  return std::nullopt;
}

/// Removes a trailing markdown fence opener ("```" / "```json") that
/// introduced the JSON block following the prompt.
std::string_view strip_trailing_fence(std::string_view s) {
  s = trim(s);
  const auto nl = s.rfind('\n');
  const auto last = trim(nl == std::string_view::npos ? s : s.substr(nl + 1));
  if (last.substr(0, 3) == "```") s = trim(nl == std::string_view::npos ? std::string_view{} : s.substr(0, nl));
  return s;
}

std::string without_spans(std::string_view text, std::vector<Span> spans) {
  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) { return a.begin < b.begin; });
  std::string out;
  std::size_t cursor = 0;
  for (const auto& s : spans) {
    if (s.begin < cursor) continue;
    out.append(text.substr(cursor, s.begin - cursor));
    cursor = s.end;
  }
  out.append(text.substr(cursor));
  return out;
}

std::string one_line_sentence(std::string_view tail) {
  std::string_view best;
  while (!tail.empty()) {
    const auto nl = tail.find('\n');
    auto line = trim(tail.substr(0, nl));
    tail = nl == std::string_view::npos ? std::string_view{} : tail.substr(nl + 1);
    if (line.empty() || line.substr(0, 3) == "```") continue;
    best = line;
  }
  while (!best.empty() && (best.front() == '"' || best.front() == '`')) best.remove_prefix(1);
  while (!best.empty() && (best.back() == '"' || best.back() == '`')) best.remove_suffix(1);
  return std::string(trim(best));
}

bool is_object_array(const nlohmann::json& j) {
  return j.is_array() &&
         std::all_of(j.begin(), j.end(), [](const nlohmann::json& e) { return e.is_object(); });
}

}  // namespace

EvolverResponse parse_response(std::string_view raw) {
  EvolverResponse r;
  r.raw = std::string(raw);
  std::vector<Span> masks;

  std::string_view rules_body;
  const auto rules_span = find_block(raw, "rules", rules_body);
  std::string_view code_body;
  const auto code_span = find_block(raw, "code", code_body);
  if (rules_span) masks.push_back(*rules_span);
  if (code_span) {
    masks.push_back(*code_span);
    r.code_block = std::string(code_body);
    r.warnings.push_back("extractor code block ignored: no code executor attached");
  }

  if (rules_span) {
    auto j = nlohmann::json::parse(trim(rules_body), nullptr, false);
    if (j.is_discarded() || !j.is_array()) {
      r.warnings.push_back("part 4a: <rules> block is not a JSON array");
    } else {
      std::vector<MilestoneRule> rules;
      for (const auto& e : j) {
        if (!e.is_object() || !e.contains("pattern") || !e.contains("milestone") ||
            !e["pattern"].is_string() || !e["milestone"].is_string() ||
            e["pattern"].get<std::string>().empty() || e["milestone"].get<std::string>().empty()) {
          r.warnings.push_back("part 4a: dropped malformed rule " + e.dump());
          continue;
        }
        rules.push_back({e["pattern"].get<std::string>(), e["milestone"].get<std::string>()});
      }
      r.part4_extractor = std::move(rules);
    }
  } else {
    r.warnings.push_back("part 4a: no <rules> block");
  }

  const auto part2 = scan_json(raw, 0, '[', masks, is_object_array);
  if (!part2) {
    r.warnings.push_back("part 2: no JSON list of memory updates found");
    const auto all = without_spans(raw, masks);
    if (const auto text = trim(all); !text.empty()) r.part1_prompt = std::string(text);
  } else {
    std::vector<Span> before;
    for (const auto& m : masks) {
      if (m.end <= part2->first.begin) before.push_back(m);
    }
    const auto head = without_spans(raw.substr(0, part2->first.begin), before);
    const auto prompt = strip_trailing_fence(head);
    if (prompt.empty()) {
      r.warnings.push_back("part 1: empty prompt");
    } else {
      r.part1_prompt = std::string(prompt);
    }

    std::vector<MemoryUpdate> updates;
    for (const auto& e : part2->second) {
      if (!e.contains("state_text") || !e["state_text"].is_string() || !e.contains("action") ||
          !e["action"].is_string() || !e.contains("score_delta") || !e["score_delta"].is_number()) {
        r.warnings.push_back("part 2: dropped malformed memory record " + e.dump());
        continue;
      }
      MemoryUpdate u{e["state_text"].get<std::string>(), e["action"].get<std::string>(),
                     e["score_delta"].get<double>()};
      if (!(u.score_delta > 0.0)) {
        r.warnings.push_back("part 2: dropped non-positive score_delta for '" + u.action + "'");
        continue;
      }
      updates.push_back(std::move(u));
    }
    r.part2_memory_updates = std::move(updates);

    std::size_t tail = part2->first.end;
    const auto part3 = scan_json(raw, part2->first.end, '{', masks,
                                 [](const nlohmann::json& j) { return j.is_object(); });
    if (part3) {
      r.part3_hypers = part3->second;
      tail = std::max(tail, part3->first.end);
    } else {
      r.warnings.push_back("part 3: no JSON object of hyperparameters found");
    }
    for (const auto& m : masks) tail = std::max(tail, m.end);

    auto sentence = one_line_sentence(raw.substr(std::min(tail, raw.size())));
    if (sentence.empty()) {
      r.warnings.push_back("part 4b: no memory interaction sentence");
    } else {
      r.part4_memory_sentence = std::move(sentence);
    }
  }

  r.degraded = !r.part1_prompt && !r.part2_memory_updates && !r.part3_hypers &&
               !r.part4_extractor && !r.part4_memory_sentence;
  if (r.degraded) r.warnings.push_back("response unusable; treated as identity");
  return r;
}

std::string render_response(const EvolverResponse& resp) {
  std::string out;
  if (resp.part1_prompt) out += *resp.part1_prompt + "\n\n";
  if (resp.part2_memory_updates) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& u : *resp.part2_memory_updates) {
      arr.push_back(
          {{"state_text", u.state_text}, {"action", u.action}, {"score_delta", u.score_delta}});
    }
    out += arr.dump(2) + "\n\n";
  }
  if (resp.part3_hypers) out += resp.part3_hypers->dump() + "\n\n";
  if (resp.part4_extractor) out += "<rules>\n" + rules_to_json(*resp.part4_extractor).dump(2) + "\n</rules>\n\n";
  if (resp.part4_memory_sentence) out += *resp.part4_memory_sentence + "\n";
  return out;
}

nlohmann::ordered_json to_json(const EvolverResponse& resp) {
  using oj = nlohmann::ordered_json;
  oj j;
  j["degraded"] = resp.degraded;
  j["part1_prompt"] = resp.part1_prompt ? oj(*resp.part1_prompt) : oj(nullptr);
  if (resp.part2_memory_updates) {
    auto arr = oj::array();
    for (const auto& u : *resp.part2_memory_updates) {
      arr.push_back({{"state_text", u.state_text}, {"action", u.action}, {"score_delta", u.score_delta}});
    }
    j["part2_memory_updates"] = std::move(arr);
  } else {
    j["part2_memory_updates"] = nullptr;
  }
  j["part3_hypers"] = resp.part3_hypers ? oj::parse(resp.part3_hypers->dump()) : oj(nullptr);
  j["part4_extractor"] = resp.part4_extractor ? rules_to_json(*resp.part4_extractor) : oj(nullptr);
  j["part4_memory_sentence"] =
      resp.part4_memory_sentence ? oj(*resp.part4_memory_sentence) : oj(nullptr);
  j["code_block"] = resp.code_block ? oj(*resp.code_block) : oj(nullptr);
  j["warnings"] = resp.warnings;
  return j;
}

HyperChanges hyper_changes_from_json(const nlohmann::json& obj, std::vector<std::string>& warnings) {
  HyperChanges h;
  if (!obj.is_object()) return h;
  auto clamp_int = [&](const std::string& key, const nlohmann::json& v, int lo, int hi) -> std::optional<int> {
    if (!v.is_number()) {
      warnings.push_back("hyperparameter " + key + " ignored: not a number");
      return std::nullopt;
    }
    const double d = std::round(v.get<double>());
    const double c = std::clamp(d, static_cast<double>(lo), static_cast<double>(hi));
    if (c != v.get<double>()) warnings.push_back("hyperparameter " + key + " adjusted to " + std::to_string(static_cast<int>(c)));
    return static_cast<int>(c);
  };
  for (const auto& [key, value] : obj.items()) {
    if (key == "temperature") {
      if (!value.is_number()) {
        warnings.push_back("hyperparameter temperature ignored: not a number");
        continue;
      }
      const double t = value.get<double>();
      const double c = std::clamp(t, Hyperparams::kMinTemperature, Hyperparams::kMaxTemperature);
      if (c != t) warnings.push_back("temperature " + value.dump() + " clamped to " + nlohmann::json(c).dump());
      h.temperature = c;
    } else if (key == "max_action_tokens" || key == "max_tokens") {
      h.max_action_tokens = clamp_int(key, value, 1, Hyperparams::kMaxActionTokens);
    } else if (key == "history_window") {
      h.history_window = clamp_int(key, value, 1, Hyperparams::kMaxHistoryWindow);
    } else {
      warnings.push_back("unknown hyperparameter ignored: " + key);
    }
  }
  return h;
}

std::vector<AgenticConfig> spawn_children(const AgenticConfig& parent, const EvolverResponse& resp,
                                          int m, int episode, std::vector<std::string>* warnings) {
  std::vector<std::string> local;
  auto& warn = warnings ? *warnings : local;

  MutationBundle full;
  full.new_prompt = resp.part1_prompt;
  if (resp.part3_hypers) {
    auto h = hyper_changes_from_json(*resp.part3_hypers, warn);
    if (!h.empty()) full.hyper_changes = h;
  }
  full.new_extractor_rules = resp.part4_extractor;
  if (resp.part4_memory_sentence) {
    full.new_memory_rule = MemoryRuleChange{
        infer_stage(*resp.part4_memory_sentence).value_or(parent.tool_use.memory_rule_stage),
        *resp.part4_memory_sentence};
  }

  MutationBundle prompt_only;
  prompt_only.new_prompt = full.new_prompt;
  MutationBundle tools_only = full;
  tools_only.new_prompt.reset();

  std::vector<AgenticConfig> children;
  for (int k = 1; k <= m; ++k) {
    const MutationBundle& bundle =
        (k - 1) % 3 == 0 ? full : (k - 1) % 3 == 1 ? prompt_only : tools_only;
    try {
      children.push_back(derive_child(parent, bundle, episode, k));
    } catch (const InvalidMutation& e) {
      warn.push_back("child " + std::to_string(k) + " fell back to identity: " + e.what());
      children.push_back(derive_child(parent, MutationBundle{}, episode, k));
    }
  }
  return children;
}

namespace {

/// Suggested state matches an observation when every "..."-separated
/// fragment occurs in it, in order.
bool state_matches(const std::string& suggested, const std::string& observed) {
  std::size_t cursor = 0;
  std::size_t pos = 0;
  bool any = false;
  while (pos <= suggested.size()) {
    auto next = suggested.find("...", pos);
    auto frag = trim(std::string_view(suggested).substr(pos, next == std::string::npos ? std::string::npos : next - pos));
    if (!frag.empty()) {
      const auto at = observed.find(frag, cursor);
      if (at == std::string::npos) return false;
      cursor = at + frag.size();
      any = true;
    }
    if (next == std::string::npos) break;
    pos = next + 3;
  }
  return any;
}

}  // namespace

std::vector<SuccessEntry> validate_memory_updates(const std::vector<MemoryUpdate>& updates,
                                                  const Transcript& t,
                                                  std::vector<std::string>& rejections) {
  std::vector<SuccessEntry> accepted;
  for (const auto& u : updates) {
    const std::string action = extract_action(u.action);
    const std::string state = normalize_state(u.state_text);
    const auto step = std::find_if(t.steps.begin(), t.steps.end(), [&](const Step& s) {
      return s.reward > 0.0 && s.action == action && std::fabs(s.reward - u.score_delta) < 1e-9 &&
             state_matches(state, normalize_state(s.observation));
    });
    if (step == t.steps.end()) {
      rejections.push_back("memory update rejected (no matching scored step): action '" + u.action +
                           "', delta " + nlohmann::json(u.score_delta).dump());
      continue;
    }
    SuccessEntry e;
    e.state_text = normalize_state(step->observation);
    e.state_hash = hash_state(e.state_text);
    e.action = step->action;
    e.score_delta = step->reward;
    e.episode_seen = t.episode_index;
    accepted.push_back(std::move(e));
  }
  return accepted;
}

EvolveResult evolve(const AgenticConfig& parent, const Transcript& t, const MemoryStore& memory,
                    LlmBackend& backend, int m) {
  EvolveResult out;
  const auto mined = mine_successes(t);
  out.memory = merge(memory, mined, detect_failures(t));

  const ChatRequest req = render_master_prompt(parent.policy_prompt, t, out.memory.failures);
  std::string raw;
  try {
    raw = backend.complete(req);
  } catch (const std::exception& e) {
    out.response.degraded = true;
    out.response.warnings.push_back(std::string("evolver backend failed: ") + e.what());
    return out;
  }
  out.response = parse_response(raw);

  if (out.response.part2_memory_updates) {
    auto confirmed = validate_memory_updates(*out.response.part2_memory_updates, t, out.warnings);
    std::vector<SuccessEntry> extra;
    for (auto& e : confirmed) {
      const bool already_mined = std::any_of(mined.begin(), mined.end(), [&](const SuccessEntry& x) {
        return x.state_hash == e.state_hash && x.action == e.action;
      });
      const bool duplicate = std::any_of(extra.begin(), extra.end(), [&](const SuccessEntry& x) {
        return x.state_hash == e.state_hash && x.action == e.action;
      });
      if (!already_mined && !duplicate) extra.push_back(std::move(e));
    }
    out.memory = merge(std::move(out.memory), extra, {});
  }
  out.children = spawn_children(parent, out.response, m, t.episode_index, &out.warnings);
  return out;
}

}  // namespace ttlearn
