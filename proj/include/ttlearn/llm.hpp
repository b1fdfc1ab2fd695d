// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ttlearn {

enum class Tag { Actor = 0, Evolver = 1 };
std::string_view to_string(Tag tag);
Tag tag_from_string(std::string_view name);

struct ChatRequest {
  std::string system;
  std::string user;
  double temperature = 0.7;
  int max_tokens = 32;
  Tag tag = Tag::Actor;

  bool operator==(const ChatRequest&) const = default;
};

class LlmError : public std::runtime_error {
 public:
  enum class Kind { Timeout, Transport, HttpStatus, ExhaustedRetries, MalformedResponse, ScriptExhausted };
  LlmError(Kind kind, const std::string& what, int status = 0)
      : std::runtime_error(what), kind_(kind), status_(status) {}
  Kind kind() const noexcept { return kind_; }
  int status() const noexcept { return status_; }

 private:
  Kind kind_;
  int status_;
};

struct BackendConfig {
  std::string endpoint_url;
  std::string model_name;
  std::string api_key_env_var = "OPENAI_API_KEY";
  int timeout_ms = 60000;
  int max_retries = 3;

  bool valid() const noexcept { return timeout_ms > 0 && max_retries >= 0 && !endpoint_url.empty(); }
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual std::string complete(const ChatRequest& req) = 0;

  /// Completions served so far for `tag` (successful or not).
  virtual std::size_t calls(Tag tag) const = 0;
  /// Skips `n` scripted completions; a no-op for live backends.
  virtual void fast_forward(Tag /*tag*/, std::size_t /*n*/) {}
  virtual std::string describe() const = 0;
};

/// Chat-completions request body: model, messages, temperature, max_tokens.
nlohmann::ordered_json chat_request_body(const BackendConfig& cfg, const ChatRequest& req);
/// Extracts choices[0].message.content, dropping one trailing newline.
/// Throws LlmError(MalformedResponse).
std::string parse_chat_response(std::string_view body);

/// Retry delay before attempt `retry` (1-based): 500 ms * 2^(retry-1).
std::chrono::milliseconds backoff_delay(int retry);

class HttpBackend final : public LlmBackend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  /// Throws std::invalid_argument when `cfg` is invalid.
  explicit HttpBackend(BackendConfig cfg, Sleeper sleeper = {});

  std::string complete(const ChatRequest& req) override;
  std::size_t calls(Tag tag) const override { return calls_[static_cast<int>(tag)]; }
  std::string describe() const override;

 private:
  BackendConfig cfg_;
  Sleeper sleeper_;
  std::string scheme_host_;
  std::string path_;
  std::array<std::size_t, 2> calls_{};
};

/// Serves scripted responses in order, one queue per tag, and records every
/// request verbatim.
class ReplayBackend final : public LlmBackend {
 public:
  struct Record {
    Tag tag;
    std::string response;
  };

  explicit ReplayBackend(std::vector<Record> script, std::string source = "inline");

  std::string complete(const ChatRequest& req) override;
  std::size_t calls(Tag tag) const override { return cursor_[static_cast<int>(tag)]; }
  void fast_forward(Tag tag, std::size_t n) override;
  std::string describe() const override { return "replay:" + source_; }

  std::size_t remaining(Tag tag) const;
  const std::vector<ChatRequest>& requests() const noexcept { return requests_; }

 private:
  std::string source_;
  std::array<std::vector<std::string>, 2> scripts_;
  std::array<std::size_t, 2> cursor_{};
  std::vector<ChatRequest> requests_;
};

/// Line-delimited {"tag": "actor"|"evolver", "response": text}. Throws
/// std::runtime_error naming the offending line.
ReplayBackend load_replay(const std::filesystem::path& path);
std::vector<ReplayBackend::Record> parse_replay(std::string_view jsonl);

}  // namespace ttlearn
