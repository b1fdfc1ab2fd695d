// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ttlearn/actor.hpp"
#include "ttlearn/bandit.hpp"
#include "ttlearn/config.hpp"
#include "ttlearn/environment.hpp"
#include "ttlearn/evolver.hpp"
#include "ttlearn/llm.hpp"
#include "ttlearn/memory.hpp"
#include "ttlearn/metrics.hpp"

namespace ttlearn {

inline constexpr int kDefaultEpisodes = 50;
inline constexpr std::string_view kDefaultInitialPrompt =
    "Explore systematically and examine objects to make progress.";

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CorruptSession : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EnvMode { Toy, Bridge };

/// Either a replay script or a live chat-completions endpoint.
struct BackendSpec {
  std::optional<std::filesystem::path> replay_path;
  BackendConfig http;

  /// "replay:<path>" or an http(s) URL.
  static BackendSpec parse(const std::string& spec, const std::string& model = {});
  std::string describe() const;
};

struct SessionConfig {
  int episodes = kDefaultEpisodes;
  int step_cap = kDefaultStepCap;
  int children_m = kDefaultChildren;
  double beta = 1.0;
  std::uint64_t seed = 0;
  EnvMode env_mode = EnvMode::Toy;
  std::string bridge_cmd;
  BackendSpec actor_backend;
  BackendSpec evolver_backend;
  std::filesystem::path out_dir;
  std::string initial_prompt{kDefaultInitialPrompt};

  /// Throws ConfigError.
  void validate() const;
};

struct EpisodeRecord {
  int episode = 0;
  ConfigId config_id;
  double total_return = 0.0;
  int steps = 0;
  bool terminated_early = false;
  double max_score = 0.0;
  std::vector<ConfigId> children;
  ConfigId next_config_id;
  std::string error;
};

struct SessionRecord {
  SessionConfig config;
  std::string created_at;
  std::vector<EpisodeRecord> episodes;
  std::vector<AgenticConfig> archive;  // registration order
  MemoryStore memory;
  BanditState bandit;
  ConfigId current_config_id;
  double r_max = 0.0;
  std::optional<SessionMetrics> metrics;

  int completed() const noexcept { return static_cast<int>(episodes.size()); }
  bool complete() const noexcept { return completed() >= config.episodes; }
  std::vector<double> returns() const;
};

struct RunOptions {
  /// Stop once this many episodes are complete (simulates an interruption).
  std::optional<int> stop_after;
  std::function<void(const std::string&)> log;
  /// Override construction of the environment or backends (tests).
  std::function<std::unique_ptr<Environment>(const SessionConfig&)> make_env;
  std::function<std::unique_ptr<LlmBackend>(const SessionConfig&, Tag)> make_backend;
  /// Override the manifest timestamp.
  std::optional<std::string> timestamp;
};

/// Algorithm: for each episode play the selected config, update its
/// statistics, evolve children from the transcript and pick the next config
/// from {parent} U children by UCB. Every episode is committed to disk
/// before the next one starts.
///
/// Layout under out_dir: manifest.json, memory.json, stats.json,
/// configs.json, metrics.csv, episodes/ep_NNN/{config.json,
/// transcript.jsonl, evolver_response.txt, evolver_response.parsed}.
SessionRecord run_session(const SessionConfig& sc, const RunOptions& opts = {});

/// Continues an interrupted session. Throws CorruptSession.
SessionRecord resume(const std::filesystem::path& out_dir, const RunOptions& opts = {});

/// Reads and cross-checks a session directory. Throws CorruptSession.
SessionRecord load_session(const std::filesystem::path& out_dir);

std::filesystem::path episode_dir(const std::filesystem::path& out_dir, int episode);

}  // namespace ttlearn
