// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <sys/types.h>

#include <nlohmann/json.hpp>

namespace ttlearn {

struct EnvObservation {
  std::string text;  // lowercase
  double score = 0.0;
  double reward = 0.0;
  bool done = false;
  int moves = 0;
  double max_score = 1.0;

  bool operator==(const EnvObservation&) const = default;
};

class EnvError : public std::runtime_error {
 public:
  enum class Kind { EpisodeFinished, BridgeUnavailable, ProtocolViolation, Remote };
  EnvError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual EnvObservation reset() = 0;
  virtual EnvObservation step(std::string_view action) = 0;
  virtual std::string describe() const = 0;
};

/// Built-in deterministic five-room game worth 60 points.
///
///   lobby:      west -> closet, north -> office, south -> vault room
///   closet:     east -> lobby;  "take key" +10
///   office:     south -> lobby
///   vault room: north -> lobby; "unlock vault with key" +10 (needs key),
///               "take treasure" +40 after unlocking, ends the game
///
/// Anything else leaves the state unchanged and answers
/// "you can't do that. " followed by the room description.
class MiniVault final : public Environment {
 public:
  static constexpr double kMaxScore = 60.0;

  MiniVault();
  EnvObservation reset() override;
  EnvObservation step(std::string_view action) override;
  std::string describe() const override { return "toy:minivault"; }

  /// Description of the current room given the current world state.
  std::string room_description() const;

 private:
  enum class Room { Lobby, Closet, Office, Street, VaultRoom };

  EnvObservation observe(std::string text, double reward) const;

  Room room_ = Room::Lobby;
  bool has_key_ = false;
  bool vault_open_ = false;
  bool treasure_taken_ = false;
  bool done_ = false;
  double score_ = 0.0;
  int moves_ = 0;
};

/// The optimal six-command route through MiniVault.
const std::vector<std::string>& minivault_walkthrough();

/// Client side of the line-delimited bridge protocol. Spawns `argv` as a
/// child process, validates every response (reward == score delta,
/// constant max_score) and kills the child on a protocol violation.
class BridgeEnvironment final : public Environment {
 public:
  explicit BridgeEnvironment(std::vector<std::string> argv,
                             std::chrono::milliseconds response_timeout = std::chrono::seconds(30));
  ~BridgeEnvironment() override;
  BridgeEnvironment(const BridgeEnvironment&) = delete;
  BridgeEnvironment& operator=(const BridgeEnvironment&) = delete;

  EnvObservation reset() override;
  EnvObservation step(std::string_view action) override;
  std::string describe() const override;

  bool alive() const noexcept { return pid_ > 0; }
  /// Number of request/response exchanges completed.
  std::size_t exchanges() const noexcept { return exchanges_; }

 private:
  void start();
  void kill_child();
  nlohmann::json round_trip(const nlohmann::ordered_json& request);
  [[noreturn]] void violation(const std::string& what);
  EnvObservation decode(const nlohmann::json& j, bool is_step);

  std::vector<std::string> argv_;
  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::size_t exchanges_ = 0;
  bool episode_active_ = false;
  bool done_ = false;
  double last_score_ = 0.0;
  double max_score_ = 0.0;
};

/// Whitespace split honoring single/double quotes and backslash escapes.
std::vector<std::string> split_command_line(std::string_view cmd);

/// Server side of the bridge protocol over `env`. Returns on "quit" or EOF.
/// Every input line gets exactly one response line.
void serve_protocol(Environment& env, std::istream& in, std::ostream& out);

}  // namespace ttlearn
