// SPDX-License-Identifier: Apache-2.0
#include <random>

#include <gtest/gtest.h>

#include "ttlearn/fixtures.hpp"
#include "ttlearn/memory.hpp"
#include "support.hpp"

namespace ttlearn {
namespace {

TEST(Normalize, Examples) {
  EXPECT_EQ(normalize_state("<< Closet >>\n  There is a gun"), "<< closet >> there is a gun");
  EXPECT_EQ(normalize_state(""), "");
  EXPECT_EQ(normalize_state("a  b\tc"), "a b c");
  EXPECT_EQ(normalize_state("  \n\t "), "");
}

// Straightforward FNV-1a used as the reference.
std::uint64_t fnv_oracle(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

TEST(Hash, KnownValues) {
  static_assert(hash_state("") == 0xcbf29ce484222325ULL);
  static_assert(hash_state("a") == 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hash_state("foobar"), 0x85944171f73967e8ULL);
}

TEST(Hash, MatchesOracle) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 2000; ++i) {
    std::string s(rng() % 64, '\0');
    for (auto& c : s) c = static_cast<char>(rng() % 256);
    EXPECT_EQ(hash_state(s), fnv_oracle(s));
    EXPECT_EQ(hash_state(s), hash_state(s));
  }
}

TEST(HashHex, RoundTrip) {
  EXPECT_EQ(hash_to_hex(0xaf63dc4c8601ec8cULL), "af63dc4c8601ec8c");
  EXPECT_EQ(hash_to_hex(1), "0000000000000001");
  EXPECT_EQ(hash_from_hex("af63dc4c8601ec8c"), 0xaf63dc4c8601ec8cULL);
  EXPECT_THROW(hash_from_hex("xyz"), std::exception);
  EXPECT_THROW(hash_from_hex("af63dc4c8601ec8"), std::exception);
}

TEST(MineSuccesses, DetectiveEp3) {
  const auto fx = load_fixture("detective_ep3", testing::fixture_dir()).detective_ep3;
  ASSERT_TRUE(fx);
  const auto got = mine_successes(fx->to_transcript(3));
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0].action, "take pistol");
  EXPECT_EQ(got[1].action, "west");
  for (const auto& e : got) {
    EXPECT_DOUBLE_EQ(e.score_delta, 10.0);
    EXPECT_EQ(e.episode_seen, 3);
    EXPECT_EQ(e.state_hash, hash_state(normalize_state(e.state_text)));
  }
}

TEST(MineSuccesses, ZeroRewardsAndSingleStep) {
  Transcript t;
  t.append("a", "x", 0);
  t.append("b", "y", 0);
  EXPECT_TRUE(mine_successes(t).empty());

  Transcript one;
  one.append("<< closet >> ... gun on the floor", "get pistol", 10);
  const auto got = mine_successes(one);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].state_hash, hash_state("<< closet >> ... gun on the floor"));
  EXPECT_EQ(got[0].action, "get pistol");
  EXPECT_DOUBLE_EQ(got[0].score_delta, 10.0);
}

TEST(DetectFailures, StreetNoOp) {
  const auto fx = load_fixture("detective_ep3", testing::fixture_dir()).detective_ep3;
  const auto got = detect_failures(fx->to_transcript(3));
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].kind, FailureKind::NoOpAction);
  EXPECT_EQ(got[0].action, "west");
  EXPECT_NE(got[0].state_text.find("<< outside >>"), std::string::npos);
}

TEST(DetectFailures, MazeRunClean) {
  const auto fx = load_fixture("detective_ep49", testing::fixture_dir()).detective_ep49;
  EXPECT_TRUE(detect_failures(fx->to_transcript(49)).empty());
}

TEST(DetectFailures, StrictlyChangingAndRepeat) {
  Transcript t;
  for (int i = 0; i < 6; ++i) t.append("room " + std::to_string(i), "go", 0);
  EXPECT_TRUE(detect_failures(t).empty());

  Transcript loop;
  for (int i = 0; i < 3; ++i) {
    loop.append("hall", "look", 0);
    loop.append("elsewhere " + std::to_string(i), "back", 0);
  }
  const auto got = detect_failures(loop);
  int repeats = 0;
  for (const auto& f : got) {
    if (f.kind == FailureKind::RepeatLoop) {
      ++repeats;
      EXPECT_EQ(f.action, "look");
    }
  }
  EXPECT_EQ(repeats, 1);
}

TEST(DetectFailures, RewardedRepeatIsNotNoOp) {
  Transcript t;
  t.append("same", "pull lever", 10);
  t.append("same", "pull lever", 0);
  EXPECT_TRUE(detect_failures(t).empty());
}

MemoryStore closet_store() {
  SuccessEntry e{hash_state(normalize_state("<< closet >> gun")), "<< closet >> gun", "get pistol", 10, 1, 1};
  return merge({}, {e}, {});
}

TEST(LookupHint, Examples) {
  EXPECT_EQ(lookup_hint(closet_store(), "<< Closet >>\n gun"),
            "Hint: In this exact situation before, the action `get pistol` worked well.");
  EXPECT_FALSE(lookup_hint(MemoryStore{}, "<< closet >> gun"));
  EXPECT_FALSE(lookup_hint(closet_store(), "<< lobby >>"));

  auto m = closet_store();
  SuccessEntry low{hash_state("<< closet >> gun"), "<< closet >> gun", "shoot", 5, 1, 9};
  m = merge(m, {low}, {});
  EXPECT_NE(lookup_hint(m, "<< closet >> gun")->find("`get pistol`"), std::string::npos);
}

TEST(Merge, Examples) {
  SuccessEntry e{hash_state("s"), "s", "a", 10, 2, 1};
  const auto one = merge({}, {e}, {});
  EXPECT_EQ(one.success_count(), 1u);
  EXPECT_EQ(one.successes.at(e.state_hash)[0], e);

  const auto twice = merge(one, {e}, {});
  ASSERT_EQ(twice.success_count(), 1u);
  EXPECT_EQ(twice.successes.at(e.state_hash)[0].hits, 2);

  SuccessEntry bigger = e;
  bigger.score_delta = 20;
  const auto maxed = merge(one, {bigger}, {});
  ASSERT_EQ(maxed.success_count(), 1u);
  EXPECT_DOUBLE_EQ(maxed.successes.at(e.state_hash)[0].score_delta, 20.0);

  FailurePattern f{hash_state("s"), "s", "west", FailureKind::NoOpAction, 1};
  const auto fm = merge(merge({}, {}, {f}), {}, {f});
  EXPECT_EQ(fm.failures.size(), 1u);
}

MemoryStore random_store(std::mt19937_64& rng, int n) {
  std::vector<SuccessEntry> s;
  std::vector<FailurePattern> f;
  for (int i = 0; i < n; ++i) {
    const std::string state = "state " + std::to_string(rng() % 5);
    s.push_back({hash_state(state), state, "act " + std::to_string(rng() % 3),
                 static_cast<double>(1 + rng() % 40), static_cast<int>(1 + rng() % 9), 1});
    f.push_back({hash_state(state), state, "bad " + std::to_string(rng() % 2),
                 rng() % 2 ? FailureKind::NoOpAction : FailureKind::RepeatLoop, 1});
  }
  return merge({}, s, f);
}

TEST(Merge, SuccessCountMonotoneAndFailuresIdempotent) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto m = random_store(rng, 6);
    const auto extra = random_store(rng, 4);
    std::vector<SuccessEntry> s;
    for (const auto& [h, v] : extra.successes) s.insert(s.end(), v.begin(), v.end());
    const auto merged = merge(m, s, extra.failures);
    EXPECT_GE(merged.success_count(), m.success_count());
    EXPECT_EQ(merge(merged, {}, extra.failures).failures, merged.failures);
  }
}

TEST(MemoryJson, RoundTripAndValidation) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = random_store(rng, 8);
    EXPECT_EQ(memory_from_json(nlohmann::json::parse(to_json(m).dump())), m);
  }
  auto j = nlohmann::json::parse(to_json(closet_store()).dump());
  j["successes"][0]["state_hash"] = "0000000000000000";
  EXPECT_THROW(memory_from_json(j), std::runtime_error);
  EXPECT_THROW(memory_from_json(nlohmann::json::array()), std::runtime_error);
}

TEST(MemoryJson, SuccessTableFixtureIsValid) {
  const auto table = load_fixture("success_table", testing::fixture_dir()).success_table;
  ASSERT_TRUE(table);
  ASSERT_EQ(table->size(), 3u);
  EXPECT_EQ((*table)[0].action, "read paper");
  EXPECT_EQ((*table)[1].action, "get pistol");
  EXPECT_EQ((*table)[2].action, "get wood");
}

}  // namespace
}  // namespace ttlearn
