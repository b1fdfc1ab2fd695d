// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bandit_oracle.hpp"
#include "ttlearn/actor.hpp"
#include "ttlearn/bandit.hpp"
#include "ttlearn/environment.hpp"
#include "ttlearn/evolver.hpp"
#include "ttlearn/fixtures.hpp"
#include "ttlearn/memory.hpp"
#include "ttlearn/metrics.hpp"
#include "ttlearn/session.hpp"
#include "session_support.hpp"

namespace {

using namespace ttlearn;
using Clock = std::chrono::steady_clock;

/// Collects failure reasons for one criterion.
struct Check {
  std::vector<std::string> problems;
  void expect(bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ucb_oracle(Check& c) {
  std::mt19937_64 rng(0x5eed);
  const auto t0 = Clock::now();
  int agree = 0;
  constexpr int kCases = 10000;
  for (int i = 0; i < kCases; ++i) {
    const auto bc = testing::random_case(rng);
    const auto state = testing::build_state(bc);
    const auto ids = testing::pool_ids(bc);
    agree += state.select_next(ids) == testing::oracle_select(bc);
  }
  const double secs = seconds_since(t0);
  c.expect(agree == kCases, std::to_string(agree) + "/" + std::to_string(kCases) + " agree");
  c.expect(secs < 5.0, "took " + num(secs) + " s");
}

void fallback_dynamics(Check& c) {
  BanditState s(1.0);
  s.register_config("parent");
  for (int i = 0; i < 3; ++i) s.record_result("parent", 10.0);
  s.register_config("child", "parent");
  const std::vector<ConfigId> pool{"parent", "child"};
  auto near = [&](double got, double want, const std::string& what) {
    c.expect(std::fabs(got - want) <= 1e-9, what + " = " + num(got) + ", want " + num(want));
  };
  near(s.ucb_score("parent"), 10.524073536984103, "parent score");
  near(s.ucb_score("child"), 11.048147073968206, "fresh child score");
  c.expect(s.select_next(pool) == "child", "fresh child not selected");
  s.record_result("child", 0.0);
  near(s.ucb_score("child"), 0.8325546111576977, "child score after 0");
  near(s.ucb_score("parent"), 10.588705011257737, "parent score at N=4");
  c.expect(s.select_next(pool) == "parent", "parent not reselected");
}

void memory_mining(Check& c) {
  const auto ep3 = load_fixture("detective_ep3").detective_ep3->to_transcript(3);
  const auto wins = mine_successes(ep3);
  c.expect(wins.size() == 2, "ep3 yields " + std::to_string(wins.size()) + " successes");
  if (wins.size() == 2) {
    c.expect(wins[0].action == "take pistol" && wins[0].score_delta == 10.0, "first success is not take pistol +10");
    c.expect(wins[1].action == "west" && wins[1].score_delta == 10.0, "second success is not west +10");
  }
  const auto fails = detect_failures(ep3);
  const bool street_noop = std::any_of(fails.begin(), fails.end(), [](const FailurePattern& f) {
    return f.kind == FailureKind::NoOpAction && f.action == "west" &&
           f.state_text.find("<< outside >>") != std::string::npos;
  });
  c.expect(street_noop, "west no-op at the street not flagged");
  c.expect(fails.size() == 1, "ep3 flags " + std::to_string(fails.size()) + " failures");
  const auto ep49 = load_fixture("detective_ep49").detective_ep49->to_transcript(49);
  const auto maze = detect_failures(ep49);
  c.expect(maze.empty(), "ep49 flags " + std::to_string(maze.size()) + " failures");
}

void auc_correctness(Check& c) {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double r_max = 1.0 + std::floor(frac(rng) * 400.0);
    std::vector<double> returns(1 + rng() % 50);
    for (auto& r : returns) r = std::round(frac(rng) * r_max * 4.0) / 4.0;
    long double sum = 0.0L;
    for (double r : returns) sum += r;
    const double direct = static_cast<double>(sum / (static_cast<long double>(returns.size()) * r_max));
    worst = std::max(worst, std::fabs(compute_auc(returns, r_max) - direct));
  }
  c.expect(worst <= 1e-12, "max deviation " + num(worst));
  c.expect(compute_auc(std::vector<double>(50, 360.0), 360.0) == 1.0, "all-max != 1.0");
  c.expect(compute_auc(std::vector<double>(50, 0.0), 360.0) == 0.0, "all-zero != 0.0");
  c.expect(compute_auc(std::vector<double>{0, 10, 20, 30}, 50.0) == 0.3, "[0,10,20,30]/50 != 0.3");
}

void end_to_end(Check& c) {
  testing::TempDir dir;
  const auto t0 = Clock::now();
  const auto rec = run_session(testing::toy_session(dir.path()), testing::fixed_clock());
  const double secs = seconds_since(t0);
  const auto r = rec.returns();
  std::ostringstream shown;
  for (double x : r) shown << x << ' ';
  c.expect(r.size() == 5, "returns: " + shown.str());
  if (r.size() == 5) {
    c.expect(r[0] < 60.0, "r1 = " + num(r[0]));
    c.expect(std::all_of(r.begin() + 1, r.end(), [](double x) { return x == 60.0; }), "returns: " + shown.str());
  }
  c.expect(rec.metrics && std::is_sorted(rec.metrics->best_so_far.begin(), rec.metrics->best_so_far.end()),
           "best_so_far decreases");
  // Episodes 2..5 ran configs whose prompt carries the walkthrough.
  for (std::size_t e = 1; e < rec.episodes.size(); ++e) {
    const auto cfg = config_from_json(nlohmann::json::parse(
        read_file(episode_dir(dir.path(), static_cast<int>(e + 1)) / "config.json")));
    c.expect(cfg.policy_prompt.find("unlock vault with key") != std::string::npos,
             "episode " + std::to_string(e + 1) + " prompt lacks the walkthrough");
  }
  const auto mem = memory_from_json(nlohmann::json::parse(read_file(dir / "memory.json")));
  std::vector<std::string> actions;
  for (const auto& [h, entries] : mem.successes) {
    for (const auto& e : entries) actions.push_back(e.action);
  }
  std::sort(actions.begin(), actions.end());
  c.expect(actions == std::vector<std::string>{"take key", "take treasure", "unlock vault with key"},
           "memory.json holds " + std::to_string(actions.size()) + " unexpected entries");
  c.expect(secs < 1.0, "took " + num(secs) + " s");
}

void determinism(Check& c) {
  testing::TempDir a;
  testing::TempDir b;
  testing::TempDir split;
  run_session(testing::toy_session(a.path()), {});
  run_session(testing::toy_session(b.path()), {});
  const auto ta = testing::tree_without_timestamp(a.path());
  c.expect(ta == testing::tree_without_timestamp(b.path()), "two runs differ");
  run_session(testing::toy_session(split.path()), testing::fixed_clock(2));
  resume(split.path(), {});
  c.expect(ta == testing::tree_without_timestamp(split.path()), "resumed run differs");
  c.expect(ta.size() > 20, "artifact tree has only " + std::to_string(ta.size()) + " files");
}

void parser_robustness(Check& c) {
  const auto g = parse_response(read_file(testing::fixture_dir() / "evolver" / "golden.txt"));
  c.expect(g.part1_prompt.has_value(), "golden: no prompt");
  c.expect(g.part3_hypers && g.part3_hypers->contains("temperature") &&
               (*g.part3_hypers)["temperature"] == 0.75,
           "golden: temperature 0.75 missing");
  const bool pistol = g.part2_memory_updates &&
                      std::any_of(g.part2_memory_updates->begin(), g.part2_memory_updates->end(),
                                  [](const MemoryUpdate& u) {
                                    return u.action == "take pistol" && u.score_delta == 10.0 &&
                                           u.state_text.rfind("<< closet >>", 0) == 0;
                                  });
  c.expect(pistol, "golden: take pistol record missing");
  c.expect(g.part4_extractor && !g.part4_extractor->empty(), "golden: no extractor rules");
  c.expect(g.part4_memory_sentence.has_value(), "golden: no memory sentence");
  c.expect(!g.degraded, "golden flagged degraded");

  std::vector<ReplayBackend::Record> script;
  for (const auto& e : std::filesystem::directory_iterator(testing::fixture_dir() / "evolver" / "adversarial")) {
    script.push_back({Tag::Evolver, read_file(e.path())});
  }
  c.expect(script.size() == 20, std::to_string(script.size()) + " adversarial fixtures");
  for (const auto& s : script) {
    try {
      const auto parsed = parse_response(s.response);
      for (const auto& k : spawn_children(make_initial_config("p"), parsed, 3, 1)) {
        c.expect(k.hyperparams.valid() && !k.policy_prompt.empty(), "invalid child from adversarial input");
      }
    } catch (const std::exception& e) {
      c.expect(false, std::string("parse threw: ") + e.what());
    }
  }
  testing::TempDir dir;
  auto sc = testing::toy_session(dir.path(), static_cast<int>(script.size()));
  RunOptions opts;
  opts.make_backend = [&](const SessionConfig&, Tag tag) -> std::unique_ptr<LlmBackend> {
    if (tag == Tag::Evolver) return std::make_unique<ReplayBackend>(script);
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < script.size(); ++i) {
      lines.insert(lines.end(), minivault_walkthrough().begin(), minivault_walkthrough().end());
    }
    return std::make_unique<ReplayBackend>(testing::actor_lines(lines));
  };
  try {
    const auto rec = run_session(sc, opts);
    c.expect(rec.completed() == static_cast<int>(script.size()), "session stopped early");
  } catch (const std::exception& e) {
    c.expect(false, std::string("session failed: ") + e.what());
  }
}

void protocol_conformance(Check& c) {
  const std::vector<std::string> vocab{"north", "south", "east", "west", "look", "take key",
                                       "unlock vault with key", "take treasure", "inventory",
                                       "open door", "e", "w", "s", "n", "x \"quoted\" {braces}"};
  std::mt19937_64 rng(1000);
  BridgeEnvironment bridge({TTLEARN_STUB_BRIDGE});
  MiniVault oracle;
  std::size_t requests = 0;
  int bad = 0;
  for (int seq = 0; seq < 1000 && bad < 5; ++seq) {
    try {
      auto got = bridge.reset();
      ++requests;
      auto want = oracle.reset();
      if (!(got == want)) ++bad;
      double last = got.score;
      const int len = static_cast<int>(rng() % 30);
      for (int i = 0; i < len && !got.done; ++i) {
        const auto& a = vocab[rng() % vocab.size()];
        got = bridge.step(a);
        ++requests;
        want = oracle.step(a);
        if (!(got == want) || got.reward != got.score - last) ++bad;
        last = got.score;
      }
    } catch (const std::exception& e) {
      c.expect(false, std::string("sequence ") + std::to_string(seq) + ": " + e.what());
      ++bad;
    }
  }
  c.expect(bad == 0, std::to_string(bad) + " mismatched responses");
  c.expect(bridge.exchanges() == requests,
           std::to_string(bridge.exchanges()) + " responses for " + std::to_string(requests) + " requests");
  c.expect(bridge.alive(), "bridge died");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"ucb-oracle-equivalence", ucb_oracle},
      {"fallback-dynamics", fallback_dynamics},
      {"memory-mining-fidelity", memory_mining},
      {"auc-correctness", auc_correctness},
      {"end-to-end-learning", end_to_end},
      {"determinism", determinism},
      {"parser-robustness", parser_robustness},
      {"protocol-conformance", protocol_conformance},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.problems.push_back(std::string("threw: ") + e.what());
    }
    if (c.problems.empty()) {
      std::printf("PASS %s\n", name.c_str());
    } else {
      ++failed;
      std::printf("FAIL %s:", name.c_str());
      for (const auto& p : c.problems) std::printf(" %s;", p.c_str());
      std::printf("\n");
    }
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
