// SPDX-License-Identifier: Apache-2.0
#include "ttlearn/llm.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "ttlearn/io.hpp"

namespace ttlearn {

std::string_view to_string(Tag tag) { return tag == Tag::Actor ? "actor" : "evolver"; }

Tag tag_from_string(std::string_view name) {
  if (name == "actor") return Tag::Actor;
  if (name == "evolver") return Tag::Evolver;
  throw std::invalid_argument("unknown tag: " + std::string(name));
}

nlohmann::ordered_json chat_request_body(const BackendConfig& cfg, const ChatRequest& req) {
  nlohmann::ordered_json body;
  body["model"] = cfg.model_name;
  auto messages = nlohmann::ordered_json::array();
  if (!req.system.empty()) messages.push_back({{"role", "system"}, {"content", req.system}});
  messages.push_back({{"role", "user"}, {"content", req.user}});
  body["messages"] = std::move(messages);
  body["temperature"] = req.temperature;
  body["max_tokens"] = req.max_tokens;
  return body;
}

std::string parse_chat_response(std::string_view body) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw LlmError(LlmError::Kind::MalformedResponse, "response is not JSON");
  try {
    auto text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (!text.empty() && text.back() == '\n') text.pop_back();
    return text;
  } catch (const nlohmann::json::exception& e) {
    throw LlmError(LlmError::Kind::MalformedResponse,
                   std::string("unexpected response shape: ") + e.what());
  }
}

std::chrono::milliseconds backoff_delay(int retry) {
  return std::chrono::milliseconds(500LL << (retry - 1));
}

HttpBackend::HttpBackend(BackendConfig cfg, Sleeper sleeper)
    : cfg_(std::move(cfg)), sleeper_(std::move(sleeper)) {
  if (!cfg_.valid()) throw std::invalid_argument("invalid backend configuration");
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  const auto& url = cfg_.endpoint_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("endpoint url needs a scheme: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_ = url;
    path_ = "/v1/chat/completions";
  } else {
    scheme_host_ = url.substr(0, path_start);
    path_ = url.substr(path_start);
  }
}

std::string HttpBackend::describe() const { return cfg_.endpoint_url + " (" + cfg_.model_name + ")"; }

std::string HttpBackend::complete(const ChatRequest& req) {
  calls_[static_cast<int>(req.tag)] += 1;
  httplib::Client client(scheme_host_);
  const auto timeout = std::chrono::milliseconds(cfg_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  if (!cfg_.api_key_env_var.empty()) {
    if (const char* key = std::getenv(cfg_.api_key_env_var.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  const std::string body = dump_json(chat_request_body(cfg_, req));

  LlmError last(LlmError::Kind::Timeout, "no attempt made");
  const int attempts = 1 + cfg_.max_retries;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1) sleeper_(backoff_delay(attempt - 1));
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      const auto err = res.error();
      const bool timed_out = err == httplib::Error::Read || err == httplib::Error::Write ||
                             err == httplib::Error::ConnectionTimeout;
      last = LlmError(timed_out ? LlmError::Kind::Timeout : LlmError::Kind::Transport,
                      "transport failure: " + httplib::to_string(err));
      continue;
    }
    if (res->status == 200) return parse_chat_response(res->body);
    last = LlmError(LlmError::Kind::HttpStatus, "HTTP status " + std::to_string(res->status),
                    res->status);
    if (res->status != 429 && res->status < 500) throw last;
  }
  if (cfg_.max_retries == 0) throw last;
  throw LlmError(LlmError::Kind::ExhaustedRetries,
                 "gave up after " + std::to_string(attempts) + " attempts: " + last.what(),
                 last.status());
}

ReplayBackend::ReplayBackend(std::vector<Record> script, std::string source)
    : source_(std::move(source)) {
  for (auto& r : script) scripts_[static_cast<int>(r.tag)].push_back(std::move(r.response));
}

std::string ReplayBackend::complete(const ChatRequest& req) {
  requests_.push_back(req);
  const int t = static_cast<int>(req.tag);
  if (cursor_[t] >= scripts_[t].size()) {
    cursor_[t] += 1;
    throw LlmError(LlmError::Kind::ScriptExhausted,
                   "replay script exhausted for tag " + std::string(to_string(req.tag)));
  }
  return scripts_[t][cursor_[t]++];
}

void ReplayBackend::fast_forward(Tag tag, std::size_t n) { cursor_[static_cast<int>(tag)] += n; }

std::size_t ReplayBackend::remaining(Tag tag) const {
  const int t = static_cast<int>(tag);
  return cursor_[t] >= scripts_[t].size() ? 0 : scripts_[t].size() - cursor_[t];
}

std::vector<ReplayBackend::Record> parse_replay(std::string_view jsonl) {
  std::vector<ReplayBackend::Record> out;
  std::size_t line_no = 0;
  while (!jsonl.empty()) {
    auto nl = jsonl.find('\n');
    auto line = jsonl.substr(0, nl);
    jsonl = nl == std::string_view::npos ? std::string_view{} : jsonl.substr(nl + 1);
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    try {
      if (j.is_discarded()) throw std::invalid_argument("not JSON");
      out.push_back({tag_from_string(j.at("tag").get<std::string>()),
                     j.at("response").get<std::string>()});
    } catch (const std::exception& e) {
      throw std::runtime_error("replay script line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

ReplayBackend load_replay(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open replay script " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ReplayBackend(parse_replay(ss.str()), path.string());
}

}  // namespace ttlearn
