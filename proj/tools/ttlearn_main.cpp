// SPDX-License-Identifier: Apache-2.0
// Command-line front end: run, resume and report sessions.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ttlearn/io.hpp"
#include "ttlearn/session.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitCorrupt = 2;
constexpr int kExitConfig = 3;

void print_report(const ttlearn::SessionRecord& rec) {
  std::cout << "episodes: " << rec.completed() << " / " << rec.config.episodes << "\n";
  std::cout << "r_max: " << rec.r_max << "\n";
  std::cout << "returns:";
  for (double r : rec.returns()) std::cout << ' ' << r;
  std::cout << "\n";
  if (rec.metrics) {
    std::cout << "best: " << rec.metrics->best_so_far.back() << "\n";
    std::cout << "auc: " << rec.metrics->auc << "\n";
  }
  std::cout << "success memory entries: " << rec.memory.success_count() << "\n";
  std::cout << "failure patterns: " << rec.memory.failures.size() << "\n";
  std::cout << "next config: " << rec.current_config_id << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolutionary test-time learning sessions for text-game agents"};
  app.require_subcommand(1);

  ttlearn::SessionConfig sc;
  std::string env_name = "toy";
  std::string actor_spec;
  std::string evolver_spec;
  std::string actor_model = "gpt-4o-mini";
  std::string evolver_model = "gpt-4o";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string prompt_file;
  std::string out_dir;
  int stop_after = 0;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "start a new session");
  run->add_option("--episodes", sc.episodes, "episodes per session (K)")->capture_default_str();
  run->add_option("--steps", sc.step_cap, "step cap per episode (T)")->capture_default_str();
  run->add_option("--children", sc.children_m, "children per evolution step (m)")->capture_default_str();
  run->add_option("--beta", sc.beta, "UCB exploration weight")->capture_default_str();
  run->add_option("--env", env_name, "environment")->check(CLI::IsMember({"toy", "bridge"}))->capture_default_str();
  run->add_option("--bridge-cmd", sc.bridge_cmd, "command line of the bridge process");
  run->add_option("--actor-backend", actor_spec, "URL or replay:<path>")->required();
  run->add_option("--evolver-backend", evolver_spec, "URL or replay:<path>")->required();
  run->add_option("--actor-model", actor_model, "model id for a URL actor backend")->capture_default_str();
  run->add_option("--evolver-model", evolver_model, "model id for a URL evolver backend")->capture_default_str();
  run->add_option("--api-key-env", api_key_env, "environment variable holding the API key")->capture_default_str();
  run->add_option("--out", out_dir, "session directory")->required();
  run->add_option("--seed", sc.seed, "framework seed")->capture_default_str();
  run->add_option("--initial-prompt", prompt_file, "file holding the initial policy prompt");
  run->add_option("--stop-after", stop_after, "stop after this many episodes (resume later)");
  run->add_flag("--quiet", quiet, "suppress progress output");

  auto* res = app.add_subcommand("resume", "continue an interrupted session");
  std::string resume_dir;
  res->add_option("dir", resume_dir, "session directory")->required();
  res->add_option("--stop-after", stop_after, "stop after this many episodes");
  res->add_flag("--quiet", quiet, "suppress progress output");

  auto* rep = app.add_subcommand("report", "summarize a session directory");
  std::string report_dir;
  rep->add_option("dir", report_dir, "session directory")->required();

  CLI11_PARSE(app, argc, argv);

  ttlearn::RunOptions opts;
  if (stop_after > 0) opts.stop_after = stop_after;
  if (!quiet) opts.log = [](const std::string& msg) { std::cerr << msg << "\n"; };

  try {
    if (*run) {
      sc.env_mode = env_name == "bridge" ? ttlearn::EnvMode::Bridge : ttlearn::EnvMode::Toy;
      sc.actor_backend = ttlearn::BackendSpec::parse(actor_spec, actor_model);
      sc.evolver_backend = ttlearn::BackendSpec::parse(evolver_spec, evolver_model);
      sc.actor_backend.http.api_key_env_var = api_key_env;
      sc.evolver_backend.http.api_key_env_var = api_key_env;
      sc.out_dir = out_dir;
      if (!prompt_file.empty()) {
        try {
          sc.initial_prompt = ttlearn::read_file(prompt_file);
        } catch (const std::runtime_error& e) {
          throw ttlearn::ConfigError(e.what());
        }
        while (!sc.initial_prompt.empty() && sc.initial_prompt.back() == '\n') sc.initial_prompt.pop_back();
      }
      print_report(ttlearn::run_session(sc, opts));
    } else if (*res) {
      print_report(ttlearn::resume(resume_dir, opts));
    } else if (*rep) {
      print_report(ttlearn::load_session(report_dir));
    }
  } catch (const ttlearn::CorruptSession& e) {
    std::cerr << "corrupt session: " << e.what() << "\n";
    return kExitCorrupt;
  } catch (const ttlearn::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}
