// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ttlearn/memory.hpp"
#include "ttlearn/transcript.hpp"

namespace ttlearn {

class UnknownFixture : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A transcript snapshot with explicit gaps: slot i holds step i+1, or
/// nothing when that step is not part of the snapshot.
struct FixtureTranscript {
  std::string name;
  std::vector<std::optional<Step>> slots;

  std::size_t size() const noexcept { return slots.size(); }
  std::vector<Step> present() const;
  /// Present steps only, original indices kept.
  Transcript to_transcript(int episode_index) const;
};

struct LibraryPrompt {
  int episode = 0;
  std::string prompt;
};

struct FixtureSet {
  std::optional<FixtureTranscript> detective_ep3;
  std::optional<FixtureTranscript> detective_ep22;
  std::optional<FixtureTranscript> detective_ep49;
  std::optional<std::vector<LibraryPrompt>> library_prompts;
  std::optional<std::vector<SuccessEntry>> success_table;
};

/// $TTLEARN_FIXTURE_DIR if set, else the repository's fixtures/ directory.
std::filesystem::path default_fixture_dir();

/// Loads one named slice: detective_ep3, detective_ep22, detective_ep49,
/// library_prompts or success_table.
FixtureSet load_fixture(std::string_view name, const std::filesystem::path& dir = default_fixture_dir());

/// Step records plus {"gap":[from,to]} markers.
FixtureTranscript parse_fixture_transcript(std::string name, std::string_view jsonl);

}  // namespace ttlearn
