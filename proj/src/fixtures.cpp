// SPDX-License-Identifier: Apache-2.0
#include "ttlearn/fixtures.hpp"

#include <cstdlib>

#include "ttlearn/io.hpp"

#ifndef TTLEARN_FIXTURE_DIR
#define TTLEARN_FIXTURE_DIR "fixtures"
#endif

namespace ttlearn {

std::vector<Step> FixtureTranscript::present() const {
  std::vector<Step> out;
  for (const auto& s : slots) {
    if (s) out.push_back(*s);
  }
  return out;
}

Transcript FixtureTranscript::to_transcript(int episode_index) const {
  Transcript t;
  t.episode_index = episode_index;
  t.config_id = "fixture:" + name;
  t.steps = present();
  return t;
}

std::filesystem::path default_fixture_dir() {
  if (const char* env = std::getenv("TTLEARN_FIXTURE_DIR"); env && *env) return env;
  return TTLEARN_FIXTURE_DIR;
}

FixtureTranscript parse_fixture_transcript(std::string name, std::string_view jsonl) {
  FixtureTranscript f;
  f.name = std::move(name);
  std::size_t line_no = 0;
  while (!jsonl.empty()) {
    const auto nl = jsonl.find('\n');
    const auto line = jsonl.substr(0, nl);
    jsonl = nl == std::string_view::npos ? std::string_view{} : jsonl.substr(nl + 1);
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    const auto where = f.name + ":" + std::to_string(line_no);
    if (j.is_discarded() || !j.is_object()) throw std::runtime_error("malformed fixture line " + where);
    const int expected = static_cast<int>(f.slots.size()) + 1;
    if (j.contains("gap")) {
      const int from = j["gap"].at(0).get<int>();
      const int to = j["gap"].at(1).get<int>();
      if (from != expected || to < from) throw std::runtime_error("gap out of sequence at " + where);
      f.slots.resize(static_cast<std::size_t>(to));
      continue;
    }
    Step s = step_from_json(j);
    if (s.index != expected) throw std::runtime_error("step out of sequence at " + where);
    f.slots.emplace_back(std::move(s));
  }
  return f;
}

FixtureSet load_fixture(std::string_view name, const std::filesystem::path& dir) {
  FixtureSet set;
  const std::string n(name);
  if (n == "detective_ep3" || n == "detective_ep22" || n == "detective_ep49") {
    auto f = parse_fixture_transcript(n, read_file(dir / (n + ".jsonl")));
    if (n == "detective_ep3") set.detective_ep3 = std::move(f);
    if (n == "detective_ep22") set.detective_ep22 = std::move(f);
    if (n == "detective_ep49") set.detective_ep49 = std::move(f);
  } else if (n == "library_prompts") {
    const auto j = nlohmann::json::parse(read_file(dir / "library_prompts.json"));
    std::vector<LibraryPrompt> prompts;
    for (const auto& p : j) prompts.push_back({p.at("episode").get<int>(), p.at("prompt").get<std::string>()});
    set.library_prompts = std::move(prompts);
  } else if (n == "success_table") {
    const auto j = nlohmann::json::parse(read_file(dir / "detective_success_table.json"));
    std::vector<SuccessEntry> entries;
    for (const auto& r : j.at("successes")) {
      const auto one = memory_from_json({{"successes", nlohmann::json::array({r})},
                                         {"failures", nlohmann::json::array()}});
      entries.push_back(one.successes.begin()->second.front());
    }
    set.success_table = std::move(entries);
  } else {
    throw UnknownFixture("unknown fixture: " + n);
  }
  return set;
}

}  // namespace ttlearn
