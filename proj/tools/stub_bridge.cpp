// SPDX-License-Identifier: Apache-2.0
// Serves the built-in toy game over the bridge protocol on stdin/stdout.
// Fault flags exist so the client's protocol checks can be exercised.

#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ttlearn/environment.hpp"

namespace {

/// Wraps MiniVault and corrupts selected responses.
class FaultyEnv final : public ttlearn::Environment {
 public:
  FaultyEnv(int bad_reward_at, bool drift_max_score)
      : bad_reward_at_(bad_reward_at), drift_max_score_(drift_max_score) {}
  ttlearn::EnvObservation reset() override {
    steps_ = 0;
    return inner_.reset();
  }
  ttlearn::EnvObservation step(std::string_view action) override {
    auto o = inner_.step(action);
    ++steps_;
    if (steps_ == bad_reward_at_) o.reward += 1.0;
    if (drift_max_score_) o.max_score += 1.0;
    return o;
  }
  std::string describe() const override { return "faulty:minivault"; }

 private:
  ttlearn::MiniVault inner_;
  int bad_reward_at_;
  bool drift_max_score_;
  int steps_ = 0;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"toy bridge"};
  int bad_reward_at = 0;
  int garbage_at = 0;
  bool drift = false;
  app.add_option("--bad-reward-at", bad_reward_at, "misreport the reward of this step");
  app.add_option("--garbage-at", garbage_at, "answer this request with a non-JSON line");
  app.add_flag("--drift-max-score", drift, "change max_score on every step");
  CLI11_PARSE(app, argc, argv);

  std::ios::sync_with_stdio(false);
  FaultyEnv env(bad_reward_at, drift);
  if (garbage_at <= 0) {
    ttlearn::serve_protocol(env, std::cin, std::cout);
    return 0;
  }
  std::string line;
  int n = 0;
  while (std::getline(std::cin, line)) {
    if (++n == garbage_at) {
      std::cout << "this is not json" << std::endl;
      continue;
    }
    std::istringstream one(line + "\n");
    std::ostringstream reply;
    ttlearn::serve_protocol(env, one, reply);
    std::cout << reply.str() << std::flush;
    if (line.find("\"quit\"") != std::string::npos) break;
  }
  return 0;
}
