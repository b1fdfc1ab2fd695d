// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttlearn/transcript.hpp"

namespace ttlearn {

using StateHash = std::uint64_t;

/// Lowercase, collapse whitespace runs to one space, trim.
std::string normalize_state(std::string_view observation);

/// FNV-1a 64-bit over the bytes of an already-normalized state.
constexpr StateHash hash_state(std::string_view normalized) noexcept {
  StateHash h = 0xcbf29ce484222325ULL;
  for (unsigned char c : normalized) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct SuccessEntry {
  StateHash state_hash = 0;
  std::string state_text;
  std::string action;
  double score_delta = 0.0;
  int episode_seen = 0;
  int hits = 1;

  bool operator==(const SuccessEntry&) const = default;
};

enum class FailureKind { NoOpAction, RepeatLoop };
std::string_view to_string(FailureKind kind);

struct FailurePattern {
  StateHash state_hash = 0;
  std::string state_text;
  std::string action;
  FailureKind kind = FailureKind::NoOpAction;
  int episode_seen = 0;

  bool operator==(const FailurePattern&) const = default;
};

/// Session-scoped success/failure memory. Successes are keyed by state hash;
/// within one state each action appears at most once.
struct MemoryStore {
  std::map<StateHash, std::vector<SuccessEntry>> successes;
  std::vector<FailurePattern> failures;

  std::size_t success_count() const noexcept;
  bool operator==(const MemoryStore&) const = default;
};

inline constexpr int kRepeatLoopThreshold = 3;

/// One entry per positively rewarded step, keyed by that step's observation.
std::vector<SuccessEntry> mine_successes(const Transcript& t);

/// NoOpAction for zero-reward steps whose successor observation is
/// identical after normalization; RepeatLoop for (state, action) pairs seen
/// at least three times. Only index-consecutive steps are compared.
std::vector<FailurePattern> detect_failures(const Transcript& t);

/// Exact-state hint naming the best known action, if any.
std::optional<std::string> lookup_hint(const MemoryStore& m, std::string_view observation);

/// Union; duplicate (state, action) successes merge by incrementing hits and
/// keeping the larger delta; failures with the same (state, action, kind) are
/// suppressed.
MemoryStore merge(MemoryStore m, const std::vector<SuccessEntry>& new_successes,
                  const std::vector<FailurePattern>& new_failures);

std::string hash_to_hex(StateHash h);
StateHash hash_from_hex(std::string_view hex);

nlohmann::ordered_json to_json(const MemoryStore& m);
/// Throws std::runtime_error on schema violations (including a hash that
/// does not match its state text).
MemoryStore memory_from_json(const nlohmann::json& j);

}  // namespace ttlearn
