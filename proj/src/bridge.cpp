// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "ttlearn/environment.hpp"
#include "ttlearn/io.hpp"

namespace ttlearn {

std::vector<std::string> split_command_line(std::string_view cmd) {
  std::vector<std::string> out;
  std::string cur;
  bool in_token = false;
  char quote = 0;
  for (std::size_t i = 0; i < cmd.size(); ++i) {
    const char c = cmd[i];
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else if (c == '\\' && quote == '"' && i + 1 < cmd.size()) {
        cur += cmd[++i];
      } else {
        cur += c;
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      in_token = true;
    } else if (c == '\\' && i + 1 < cmd.size()) {
      cur += cmd[++i];
      in_token = true;
    } else if (c == ' ' || c == '\t' || c == '\n') {
      if (in_token) out.push_back(std::move(cur));
      cur.clear();
      in_token = false;
    } else {
      cur += c;
      in_token = true;
    }
  }
  if (quote) throw std::invalid_argument("unterminated quote in command line");
  if (in_token) out.push_back(std::move(cur));
  return out;
}

BridgeEnvironment::BridgeEnvironment(std::vector<std::string> argv,
                                     std::chrono::milliseconds response_timeout)
    : argv_(std::move(argv)), timeout_(response_timeout) {
  if (argv_.empty()) throw EnvError(EnvError::Kind::BridgeUnavailable, "empty bridge command");
  std::signal(SIGPIPE, SIG_IGN);
}

BridgeEnvironment::~BridgeEnvironment() {
  if (pid_ <= 0) return;
  try {
    round_trip({{"cmd", "quit"}});
  } catch (...) {
  }
  kill_child();
}

std::string BridgeEnvironment::describe() const {
  std::string s = "bridge:";
  for (const auto& a : argv_) s += " " + a;
  return s;
}

void BridgeEnvironment::start() {
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0) {
    throw EnvError(EnvError::Kind::BridgeUnavailable, std::string("pipe: ") + std::strerror(errno));
  }
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw EnvError(EnvError::Kind::BridgeUnavailable, std::string("pipe: ") + std::strerror(errno));
  }
  const pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    throw EnvError(EnvError::Kind::BridgeUnavailable, std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    setpgid(0, 0);
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    std::vector<char*> args;
    for (auto& a : argv_) args.push_back(a.data());
    args.push_back(nullptr);
    execvp(args[0], args.data());
    _exit(127);
  }
  setpgid(pid, pid);
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  fcntl(to_child_, F_SETFD, FD_CLOEXEC);
  fcntl(from_child_, F_SETFD, FD_CLOEXEC);
  pid_ = pid;
  buffer_.clear();
}

void BridgeEnvironment::kill_child() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    // the whole group, so helpers spawned by the bridge go too
    kill(-pid_, SIGKILL);
    waitpid(pid_, &status, 0);
  }
  pid_ = -1;
  episode_active_ = false;
}

void BridgeEnvironment::violation(const std::string& what) {
  kill_child();
  throw EnvError(EnvError::Kind::ProtocolViolation, what);
}

nlohmann::json BridgeEnvironment::round_trip(const nlohmann::ordered_json& request) {
  if (pid_ <= 0) throw EnvError(EnvError::Kind::BridgeUnavailable, "bridge process not running");
  const std::string line = dump_json(request) + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n = write(to_child_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      kill_child();
      throw EnvError(EnvError::Kind::BridgeUnavailable, "bridge closed its input");
    }
    written += static_cast<std::size_t>(n);
  }

  auto deadline = std::chrono::steady_clock::now() + timeout_;
  std::size_t nl;
  while ((nl = buffer_.find('\n')) == std::string::npos) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      kill_child();
      throw EnvError(EnvError::Kind::BridgeUnavailable, "bridge response timed out");
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int r = poll(&pfd, 1, static_cast<int>(left.count()));
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) continue;
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      kill_child();
      throw EnvError(EnvError::Kind::BridgeUnavailable, "bridge exited");
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
  const std::string reply = buffer_.substr(0, nl);
  buffer_.erase(0, nl + 1);
  ++exchanges_;
  auto j = nlohmann::json::parse(reply, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("ok") || !j["ok"].is_boolean()) {
    violation("malformed bridge response: " + reply.substr(0, 200));
  }
  if (!j["ok"].get<bool>()) {
    const std::string err = j.contains("error") && j["error"].is_string()
                                ? j["error"].get<std::string>()
                                : std::string("unspecified bridge error");
    throw EnvError(EnvError::Kind::Remote, err);
  }
  return j;
}

EnvObservation BridgeEnvironment::decode(const nlohmann::json& j, bool is_step) {
  auto number = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_number()) violation(std::string("missing numeric ") + key);
    return j[key].get<double>();
  };
  EnvObservation o;
  if (!j.contains("obs") || !j["obs"].is_string()) violation("missing obs");
  if (!j.contains("done") || !j["done"].is_boolean()) violation("missing done");
  if (!j.contains("moves") || !j["moves"].is_number_integer()) violation("missing moves");
  o.text = j["obs"].get<std::string>();
  std::transform(o.text.begin(), o.text.end(), o.text.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  o.score = number("score");
  o.done = j["done"].get<bool>();
  o.moves = j["moves"].get<int>();
  o.max_score = number("max_score");
  if (!(o.max_score > 0.0)) violation("max_score must be positive");
  if (is_step) {
    o.reward = number("reward");
    if (std::fabs(o.reward - (o.score - last_score_)) > 1e-9) {
      violation("reward does not equal the score delta");
    }
    if (o.max_score != max_score_) violation("max_score changed within an episode");
  } else {
    o.reward = 0.0;
    if (o.score != 0.0) violation("reset must report score 0");
  }
  return o;
}

EnvObservation BridgeEnvironment::reset() {
  if (pid_ <= 0) start();
  auto o = decode(round_trip({{"cmd", "reset"}}), false);
  episode_active_ = true;
  done_ = o.done;
  last_score_ = o.score;
  max_score_ = o.max_score;
  return o;
}

EnvObservation BridgeEnvironment::step(std::string_view action) {
  if (pid_ <= 0) throw EnvError(EnvError::Kind::BridgeUnavailable, "bridge process not running");
  if (!episode_active_) throw EnvError(EnvError::Kind::ProtocolViolation, "step before reset");
  if (done_) throw EnvError(EnvError::Kind::EpisodeFinished, "episode already finished");
  auto o = decode(round_trip({{"cmd", "step"}, {"action", std::string(action)}}), true);
  last_score_ = o.score;
  done_ = o.done;
  return o;
}

}  // namespace ttlearn
