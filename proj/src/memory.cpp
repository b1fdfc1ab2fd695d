// SPDX-License-Identifier: Apache-2.0
#include "ttlearn/memory.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <stdexcept>
#include <tuple>

namespace ttlearn {

std::string normalize_state(std::string_view observation) {
  std::string out;
  out.reserve(observation.size());
  bool pending_space = false;
  for (unsigned char c : observation) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

std::string_view to_string(FailureKind kind) {
  return kind == FailureKind::NoOpAction ? "noop_action" : "repeat_loop";
}

static FailureKind failure_kind_from_string(std::string_view s) {
  if (s == "noop_action") return FailureKind::NoOpAction;
  if (s == "repeat_loop") return FailureKind::RepeatLoop;
  throw std::runtime_error("unknown failure kind: " + std::string(s));
}

std::size_t MemoryStore::success_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [hash, entries] : successes) n += entries.size();
  return n;
}

std::vector<SuccessEntry> mine_successes(const Transcript& t) {
  std::vector<SuccessEntry> out;
  for (const auto& s : t.steps) {
    if (s.reward <= 0.0) continue;
    SuccessEntry e;
    e.state_text = normalize_state(s.observation);
    e.state_hash = hash_state(e.state_text);
    e.action = s.action;
    e.score_delta = s.reward;
    e.episode_seen = t.episode_index;
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<FailurePattern> detect_failures(const Transcript& t) {
  std::vector<FailurePattern> out;
  std::vector<std::string> normalized;
  normalized.reserve(t.steps.size());
  for (const auto& s : t.steps) normalized.push_back(normalize_state(s.observation));

  for (std::size_t i = 0; i + 1 < t.steps.size(); ++i) {
    const auto& s = t.steps[i];
    if (t.steps[i + 1].index != s.index + 1) continue;
    if (s.reward == 0.0 && normalized[i] == normalized[i + 1]) {
      out.push_back({hash_state(normalized[i]), normalized[i], s.action, FailureKind::NoOpAction,
                     t.episode_index});
    }
  }

  // first-occurrence order keeps the output deterministic
  std::vector<std::pair<std::size_t, int>> pairs;  // (step position, count)
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    auto it = std::find_if(pairs.begin(), pairs.end(), [&](const auto& p) {
      return normalized[p.first] == normalized[i] && t.steps[p.first].action == t.steps[i].action;
    });
    if (it == pairs.end()) {
      pairs.emplace_back(i, 1);
    } else {
      ++it->second;
    }
  }
  for (const auto& [pos, count] : pairs) {
    if (count < kRepeatLoopThreshold) continue;
    out.push_back({hash_state(normalized[pos]), normalized[pos], t.steps[pos].action,
                   FailureKind::RepeatLoop, t.episode_index});
  }
  return out;
}

std::optional<std::string> lookup_hint(const MemoryStore& m, std::string_view observation) {
  auto it = m.successes.find(hash_state(normalize_state(observation)));
  if (it == m.successes.end() || it->second.empty()) return std::nullopt;
  const auto best = std::max_element(
      it->second.begin(), it->second.end(), [](const SuccessEntry& a, const SuccessEntry& b) {
        // "a < b" means b is preferred
        if (a.score_delta != b.score_delta) return a.score_delta < b.score_delta;
        if (a.hits != b.hits) return a.hits < b.hits;
        return a.action > b.action;
      });
  return "Hint: In this exact situation before, the action `" + best->action + "` worked well.";
}

MemoryStore merge(MemoryStore m, const std::vector<SuccessEntry>& new_successes,
                  const std::vector<FailurePattern>& new_failures) {
  for (const auto& e : new_successes) {
    auto& bucket = m.successes[e.state_hash];
    auto it = std::find_if(bucket.begin(), bucket.end(),
                           [&](const SuccessEntry& x) { return x.action == e.action; });
    if (it == bucket.end()) {
      bucket.push_back(e);
      continue;
    }
    it->hits += e.hits;
    it->score_delta = std::max(it->score_delta, e.score_delta);
    it->episode_seen = std::min(it->episode_seen, e.episode_seen);
  }
  for (const auto& f : new_failures) {
    auto dup = std::find_if(m.failures.begin(), m.failures.end(), [&](const FailurePattern& x) {
      return std::tie(x.state_hash, x.action, x.kind) == std::tie(f.state_hash, f.action, f.kind);
    });
    if (dup == m.failures.end()) m.failures.push_back(f);
  }
  return m;
}

std::string hash_to_hex(StateHash h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

StateHash hash_from_hex(std::string_view hex) {
  if (hex.size() != 16) throw std::runtime_error("bad state hash: " + std::string(hex));
  StateHash h = 0;
  auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), h, 16);
  if (ec != std::errc{} || ptr != hex.data() + hex.size()) {
    throw std::runtime_error("bad state hash: " + std::string(hex));
  }
  return h;
}

nlohmann::ordered_json to_json(const MemoryStore& m) {
  nlohmann::ordered_json j;
  auto succ = nlohmann::ordered_json::array();
  for (const auto& [hash, entries] : m.successes) {
    for (const auto& e : entries) {
      succ.push_back({{"state_hash", hash_to_hex(e.state_hash)},
                      {"state_text", e.state_text},
                      {"action", e.action},
                      {"score_delta", e.score_delta},
                      {"episode_seen", e.episode_seen},
                      {"hits", e.hits}});
    }
  }
  auto fail = nlohmann::ordered_json::array();
  for (const auto& f : m.failures) {
    fail.push_back({{"state_hash", hash_to_hex(f.state_hash)},
                    {"state_text", f.state_text},
                    {"action", f.action},
                    {"kind", to_string(f.kind)},
                    {"episode_seen", f.episode_seen}});
  }
  j["successes"] = std::move(succ);
  j["failures"] = std::move(fail);
  return j;
}

MemoryStore memory_from_json(const nlohmann::json& j) {
  MemoryStore m;
  try {
    for (const auto& r : j.at("successes")) {
      SuccessEntry e;
      e.state_hash = hash_from_hex(r.at("state_hash").get<std::string>());
      e.state_text = r.at("state_text").get<std::string>();
      e.action = r.at("action").get<std::string>();
      e.score_delta = r.at("score_delta").get<double>();
      e.episode_seen = r.at("episode_seen").get<int>();
      e.hits = r.at("hits").get<int>();
      if (e.state_hash != hash_state(e.state_text) || e.score_delta <= 0.0 || e.hits < 1) {
        throw std::runtime_error("inconsistent success record for action '" + e.action + "'");
      }
      m.successes[e.state_hash].push_back(std::move(e));
    }
    for (const auto& r : j.at("failures")) {
      FailurePattern f;
      f.state_hash = hash_from_hex(r.at("state_hash").get<std::string>());
      f.state_text = r.at("state_text").get<std::string>();
      f.action = r.at("action").get<std::string>();
      f.kind = failure_kind_from_string(r.at("kind").get<std::string>());
      f.episode_seen = r.at("episode_seen").get<int>();
      m.failures.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed memory file: ") + e.what());
  }
  return m;
}

}  // namespace ttlearn
